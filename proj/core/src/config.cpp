#include "ladder/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ladder/array_file.hpp"
#include "ladder/error.hpp"

namespace ladder {
namespace {

using nlohmann::json;

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<LayerKind> kLayerKinds[] = {
    {LayerKind::dense, "dense"}, {LayerKind::conv3x3, "conv3x3"}, {LayerKind::softmax_head, "softmax"}};
constexpr EnumName<Activation> kActivations[] = {{Activation::relu, "relu"}, {Activation::none, "none"}};
constexpr EnumName<TrainMode> kModes[] = {
    {TrainMode::ladder, "ladder"}, {TrainMode::supervised_only, "supervised-only"}, {TrainMode::sdae_pretrain, "sdae-pretrain"}};
constexpr EnumName<LrDecay> kDecays[] = {{LrDecay::none, "none"}, {LrDecay::linear, "linear"}};
constexpr EnumName<ScalingKind> kScalings[] = {
    {ScalingKind::none, "none"}, {ScalingKind::minmax, "minmax"}, {ScalingKind::zscore, "zscore"}};
constexpr EnumName<BalanceStrategy> kBalances[] = {
    {BalanceStrategy::none, "none"}, {BalanceStrategy::upsample, "upsample"}, {BalanceStrategy::downsample, "downsample"}};
constexpr EnumName<DatasetKind> kDatasetKinds[] = {{DatasetKind::hsicube, "hsicube"}, {DatasetKind::synthetic, "synthetic"}};

template <class E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
E enum_value(const EnumName<E> (&table)[N], const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  const auto s = j.get<std::string>();
  std::string options;
  for (const auto& e : table) {
    if (s == e.name) return e.value;
    options += options.empty() ? "" : ", ";
    options += e.name;
  }
  throw ConfigError("config key '" + key + "' has invalid value '" + s + "' (expected one of: " + options + ")");
}

json layer_to_json(const LayerSpec& l) {
  return json{{"kind", enum_name(kLayerKinds, l.kind)}, {"width", l.width}, {"activation", enum_name(kActivations, l.activation)}};
}

json to_json(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  const auto& s = d.synthetic;
  const auto& t = c.train;
  json layers = json::array();
  for (const auto& l : t.ladder.layers) layers.push_back(layer_to_json(l));
  return json{
      {"name", c.name},
      {"precision", c.precision},
      {"dataset",
       {{"kind", enum_name(kDatasetKinds, d.kind)},
        {"data", d.data},
        {"gt", d.gt},
        {"num_classes", d.num_classes},
        {"window", d.window},
        {"pca_components", d.pca_components},
        {"scaling", enum_name(kScalings, d.scaling)},
        {"include_background", d.include_background},
        {"test_fraction", d.test_fraction},
        {"labels_per_class", d.labels_per_class},
        {"synthetic_seed", d.synthetic_seed},
        {"synthetic",
         {{"height", s.height},
          {"width", s.width},
          {"bands", s.bands},
          {"classes", s.classes},
          {"block", s.block},
          {"bump_height", s.bump_height},
          {"bump_width", s.bump_width},
          {"gain_std", s.gain_std},
          {"distortion_std", s.distortion_std},
          {"sensor_noise", s.sensor_noise}}}}},
      {"model",
       {{"layers", layers},
        {"noise_std", t.ladder.noise_std},
        {"lambdas", t.ladder.lambdas},
        {"normalize_targets", t.ladder.normalize_targets}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"batch_size", t.batch_size},
        {"iterations", t.iterations},
        {"seed", t.seed},
        {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"epsilon", t.adam.epsilon}}},
        {"lr_decay", enum_name(kDecays, t.lr_decay)},
        {"decay_fraction", t.decay_fraction},
        {"mode", enum_name(kModes, t.mode)},
        {"grad_clip", t.grad_clip},
        {"pretrain_iterations", t.pretrain_iterations},
        {"checkpoint_every", t.checkpoint_every},
        {"eval_batch", t.eval_batch},
        {"balance", enum_name(kBalances, t.balance)}}},
      {"sweep",
       {{"axis", c.sweep.axis},
        {"values", c.sweep.values},
        {"seeds", c.sweep.seeds},
        {"uniform_lambda", c.sweep.uniform_lambda}}}};
}

// Keys whose values are replaced wholesale rather than merged.
bool is_leaf_array(const std::string& path) {
  return path == "model.layers" || path == "model.lambdas" || path == "sweep.values" || path == "sweep.seeds";
}

void strict_merge(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + (prefix.empty() ? std::string("<root>") : prefix) + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
    json& target = base[it.key()];
    if (target.is_object()) {
      strict_merge(target, it.value(), path);
    } else if (target.is_array() && !is_leaf_array(path)) {
      throw ConfigError("config key '" + path + "' cannot be replaced");
    } else {
      target = it.value();
    }
  }
}

template <class T>
T get(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_size(const json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError("config key '" + key + "' must be a non-negative integer");
  return j.get<std::size_t>();
}

double get_double(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

std::uint64_t get_seed(const json& j, const std::string& key) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

LayerSpec layer_from_json(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError("config key '" + key + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "kind" && it.key() != "width" && it.key() != "activation") {
      throw ConfigError("unknown config key '" + key + "." + it.key() + "'");
    }
  }
  LayerSpec l;
  if (!j.contains("kind") || !j.contains("width")) throw ConfigError("config key '" + key + "' needs 'kind' and 'width'");
  l.kind = enum_value(kLayerKinds, j.at("kind"), key + ".kind");
  l.width = get_size(j.at("width"), key + ".width");
  l.activation = l.kind == LayerKind::softmax_head ? Activation::none : Activation::relu;
  if (j.contains("activation")) l.activation = enum_value(kActivations, j.at("activation"), key + ".activation");
  return l;
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  c.name = get<std::string>(j.at("name"), "name");
  c.precision = get<std::string>(j.at("precision"), "precision");

  const json& d = j.at("dataset");
  c.dataset.kind = enum_value(kDatasetKinds, d.at("kind"), "dataset.kind");
  c.dataset.data = get<std::string>(d.at("data"), "dataset.data");
  c.dataset.gt = get<std::string>(d.at("gt"), "dataset.gt");
  c.dataset.num_classes = get<int>(d.at("num_classes"), "dataset.num_classes");
  c.dataset.window = get_size(d.at("window"), "dataset.window");
  c.dataset.pca_components = get_size(d.at("pca_components"), "dataset.pca_components");
  c.dataset.scaling = enum_value(kScalings, d.at("scaling"), "dataset.scaling");
  c.dataset.include_background = get<bool>(d.at("include_background"), "dataset.include_background");
  c.dataset.test_fraction = get_double(d.at("test_fraction"), "dataset.test_fraction");
  c.dataset.labels_per_class = get<int>(d.at("labels_per_class"), "dataset.labels_per_class");
  c.dataset.synthetic_seed = get_seed(d.at("synthetic_seed"), "dataset.synthetic_seed");
  const json& s = d.at("synthetic");
  auto& sy = c.dataset.synthetic;
  sy.height = get_size(s.at("height"), "dataset.synthetic.height");
  sy.width = get_size(s.at("width"), "dataset.synthetic.width");
  sy.bands = get_size(s.at("bands"), "dataset.synthetic.bands");
  sy.classes = get<int>(s.at("classes"), "dataset.synthetic.classes");
  sy.block = get_size(s.at("block"), "dataset.synthetic.block");
  sy.bump_height = get_double(s.at("bump_height"), "dataset.synthetic.bump_height");
  sy.bump_width = get_double(s.at("bump_width"), "dataset.synthetic.bump_width");
  sy.gain_std = get_double(s.at("gain_std"), "dataset.synthetic.gain_std");
  sy.distortion_std = get_double(s.at("distortion_std"), "dataset.synthetic.distortion_std");
  sy.sensor_noise = get_double(s.at("sensor_noise"), "dataset.synthetic.sensor_noise");

  const json& m = j.at("model");
  auto& spec = c.train.ladder;
  if (!m.at("layers").is_array()) throw ConfigError("config key 'model.layers' must be an array");
  for (std::size_t i = 0; i < m.at("layers").size(); ++i) {
    spec.layers.push_back(layer_from_json(m.at("layers")[i], "model.layers[" + std::to_string(i) + "]"));
  }
  spec.noise_std = get_double(m.at("noise_std"), "model.noise_std");
  if (!m.at("lambdas").is_array()) throw ConfigError("config key 'model.lambdas' must be an array");
  for (std::size_t i = 0; i < m.at("lambdas").size(); ++i) {
    spec.lambdas.push_back(get_double(m.at("lambdas")[i], "model.lambdas[" + std::to_string(i) + "]"));
  }
  spec.normalize_targets = get<bool>(m.at("normalize_targets"), "model.normalize_targets");

  const json& t = j.at("train");
  auto& tc = c.train;
  tc.learning_rate = get_double(t.at("learning_rate"), "train.learning_rate");
  tc.batch_size = get_size(t.at("batch_size"), "train.batch_size");
  tc.iterations = get_size(t.at("iterations"), "train.iterations");
  tc.seed = get_seed(t.at("seed"), "train.seed");
  tc.adam.beta1 = get_double(t.at("adam").at("beta1"), "train.adam.beta1");
  tc.adam.beta2 = get_double(t.at("adam").at("beta2"), "train.adam.beta2");
  tc.adam.epsilon = get_double(t.at("adam").at("epsilon"), "train.adam.epsilon");
  tc.lr_decay = enum_value(kDecays, t.at("lr_decay"), "train.lr_decay");
  tc.decay_fraction = get_double(t.at("decay_fraction"), "train.decay_fraction");
  tc.mode = enum_value(kModes, t.at("mode"), "train.mode");
  tc.grad_clip = get_double(t.at("grad_clip"), "train.grad_clip");
  tc.pretrain_iterations = get_size(t.at("pretrain_iterations"), "train.pretrain_iterations");
  tc.checkpoint_every = get_size(t.at("checkpoint_every"), "train.checkpoint_every");
  tc.eval_batch = get_size(t.at("eval_batch"), "train.eval_batch");
  tc.balance = enum_value(kBalances, t.at("balance"), "train.balance");

  const json& w = j.at("sweep");
  c.sweep.axis = get<std::string>(w.at("axis"), "sweep.axis");
  c.sweep.values.clear();
  for (std::size_t i = 0; i < w.at("values").size(); ++i) {
    c.sweep.values.push_back(get_double(w.at("values")[i], "sweep.values[" + std::to_string(i) + "]"));
  }
  c.sweep.seeds.clear();
  for (std::size_t i = 0; i < w.at("seeds").size(); ++i) {
    c.sweep.seeds.push_back(get_seed(w.at("seeds")[i], "sweep.seeds[" + std::to_string(i) + "]"));
  }
  c.sweep.uniform_lambda = get<bool>(w.at("uniform_lambda"), "sweep.uniform_lambda");
  return c;
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

void apply_override(json& base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  json patch = parse_override_value(assignment.substr(eq + 1));
  // Build {"a": {"b": value}} from "a.b" and merge strictly.
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  strict_merge(base, patch, "");
}

}  // namespace

std::string to_string(ScalingKind kind) { return enum_name(kScalings, kind); }
std::string to_string(BalanceStrategy strategy) { return enum_name(kBalances, strategy); }

void ExperimentConfig::validate() const {
  if (precision != "f64") {
    throw ConfigError("precision '" + precision + "' is not supported; this build computes in f64 only");
  }
  const auto& d = dataset;
  if (d.kind == DatasetKind::hsicube && (d.data.empty() || d.gt.empty())) {
    throw ConfigError("dataset.data and dataset.gt are required for hsicube datasets");
  }
  if (d.window == 0 || d.window % 2 == 0) throw ConfigError("dataset.window must be odd and >= 1");
  if (!(d.test_fraction >= 0.0 && d.test_fraction < 1.0)) throw ConfigError("dataset.test_fraction must be in [0, 1)");
  if (d.labels_per_class < 0 && d.labels_per_class != kAllLabels) throw ConfigError("dataset.labels_per_class must be >= 0 or -1");
  if (d.num_classes < 0) throw ConfigError("dataset.num_classes must be >= 0");
  train.validate();
  if (!sweep.axis.empty() && sweep.axis != "labels_per_class" && sweep.axis != "noise_std" && sweep.axis != "top_lambda" &&
      sweep.axis != "pca_components") {
    throw ConfigError("sweep.axis '" + sweep.axis + "' is not one of labels_per_class, noise_std, top_lambda, pca_components");
  }
}

ExperimentConfig parse_config(std::string_view json_text, std::span<const std::string> overrides) {
  json base = to_json(ExperimentConfig{});
  // Default layers are empty; allow the file to supply them.
  json file;
  try {
    file = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  strict_merge(base, file, "");
  for (const auto& o : overrides) apply_override(base, o);
  ExperimentConfig c = from_json(base);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  const auto resolved = resolve_config_path(path.string());
  std::ifstream in(resolved);
  if (!in) throw ConfigError("cannot read config file " + resolved.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string dump_config(const ExperimentConfig& config, int indent) { return to_json(config).dump(indent); }

std::filesystem::path resolve_config_path(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return name_or_path;
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("LADDER_CONFIG_DIR")) dirs.emplace_back(env);
  dirs.emplace_back(LADDER_SOURCE_CONFIG_DIR);
  dirs.emplace_back(LADDER_INSTALL_CONFIG_DIR);
  for (const auto& d : dirs) {
    for (const auto& candidate : {d / name_or_path, d / (name_or_path + ".json")}) {
      if (fs::exists(candidate)) return candidate;
    }
  }
  throw ConfigError("config '" + name_or_path + "' not found (searched the path, LADDER_CONFIG_DIR and shipped configs)");
}

std::filesystem::path resolve_dataset_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (!path.empty() && fs::exists(path)) return path;
  if (const char* env = std::getenv("LADDER_DATA_DIR")) {
    const fs::path candidate = fs::path(env) / path;
    if (fs::exists(candidate)) return candidate;
    const fs::path by_name = fs::path(env) / fs::path(path).filename();
    if (fs::exists(by_name)) return by_name;
  }
  throw DatasetMissingError(
      "dataset file '" + path +
      "' not found. Export the scene as raw row-major arrays and convert them, e.g. "
      "'ladder convert --input PaviaU.raw --dims 610,340,103 --input-dtype f64 --output PaviaU.cube' and "
      "'ladder convert --input PaviaU_gt.raw --dims 610,340 --input-dtype u8 --output PaviaU_gt.cube', "
      "then point dataset.data/dataset.gt at the files or set LADDER_DATA_DIR to their directory.");
}

}  // namespace ladder
