#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "convert.hpp"
#include "json.hpp"
#include "ladder/checkpoint.hpp"
#include "ladder/config.hpp"
#include "ladder/error.hpp"
#include "ladder/format.hpp"
#include "ladder/pipeline.hpp"
#include "ladder/sweep.hpp"
#include "manifest.hpp"

namespace ladder::cli {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool dry_run = false;
  std::string precision;
  int labels = 0;
  std::vector<std::string> sets;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* labels_opt = nullptr;
  CLI::Option* precision_opt = nullptr;
};

struct Resolved {
  ExperimentConfig config;
  std::string path;
  std::string file_bytes;
};

class Cli {
 public:
  Cli(Globals g, std::vector<std::string> argv, std::ostream& out, std::ostream& err)
      : g_(std::move(g)), argv_(std::move(argv)), out_(out), err_(err) {}

  // Order of precedence: defaults < config file < --set < dedicated flags.
  std::vector<std::string> overrides(std::vector<std::string> extra = {}) const {
    std::vector<std::string> o = g_.sets;
    o.insert(o.end(), extra.begin(), extra.end());
    if (g_.seed_opt->count()) o.push_back("train.seed=" + std::to_string(g_.seed));
    if (g_.labels_opt->count()) o.push_back("dataset.labels_per_class=" + std::to_string(g_.labels));
    if (g_.precision_opt->count()) o.push_back("precision=\"" + g_.precision + "\"");
    return o;
  }

  Resolved resolve(const std::string& name, const std::vector<std::string>& extra = {}) const {
    if (name.empty()) throw ConfigError("--config is required for this command");
    Resolved r;
    r.path = resolve_config_path(name).string();
    r.file_bytes = read_file_bytes(r.path);
    r.config = parse_config(r.file_bytes, overrides(extra));
    return r;
  }

  void print_resolved(const ExperimentConfig& c) {
    out_ << dump_config(c) << '\n';
    err_ << "resolved lambdas: " << join_doubles(c.train.ladder.lambdas) << '\n';
    err_ << "dry run: configuration is valid, nothing was executed\n";
  }

  std::vector<std::pair<std::string, std::string>> dataset_hashes(const DatasetConfig& d) {
    if (d.kind == DatasetKind::synthetic) {
      return {{"synthetic:" + std::to_string(d.synthetic_seed), ""}};
    }
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : {d.data, d.gt}) {
      const auto path = resolve_dataset_path(p);
      out.emplace_back(path.string(), sha256_file(path));
    }
    return out;
  }

  fs::path start_run(const std::string& command, const std::vector<Resolved>& configs, std::vector<std::uint64_t> seeds,
                     fs::path run_dir = {}) {
    RunManifest m;
    m.command = command;
    m.argv = argv_;
    std::string key = command;
    for (const auto& r : configs) {
      m.config_path += (m.config_path.empty() ? "" : ";") + r.path;
      m.config_sha256 += (m.config_sha256.empty() ? "" : ";") + sha256_hex(r.file_bytes);
      const auto dumped = dump_config(r.config);
      m.resolved_config_sha256 += (m.resolved_config_sha256.empty() ? "" : ";") + sha256_hex(dumped);
      key += dumped;
      for (auto& d : dataset_hashes(r.config.dataset)) {
        if (std::find(m.datasets.begin(), m.datasets.end(), d) == m.datasets.end()) m.datasets.push_back(d);
      }
    }
    m.seeds = std::move(seeds);
    if (run_dir.empty()) run_dir = make_run_dir(g_.out, key, &m.created_utc);
    m.output_dir = run_dir.string();
    const auto manifest_path = run_dir / "manifest.json";
    if (!fs::exists(manifest_path)) write_file_atomic(manifest_path, manifest_json(m));
    return run_dir;
  }

  int convert(const std::string& input, const std::string& output, const std::string& dims, const std::string& dtype,
              const std::string& output_dtype, const std::string& order, bool big_endian) {
    RawLayout layout;
    layout.dims = parse_dims(dims);
    layout.dtype = parse_dtype(dtype);
    layout.order = parse_interleave(order);
    layout.big_endian = big_endian;
    const DType out_type = output_dtype.empty() ? layout.dtype : parse_dtype(output_dtype);
    if (g_.dry_run) {
      out_ << "convert " << input << " -> " << output << " dims=" << dims << " dtype=" << to_string(layout.dtype)
           << " output_dtype=" << to_string(out_type) << " order=" << order << '\n';
      return kExitOk;
    }
    convert_raw_file(input, layout, out_type, output);
    out_ << "wrote " << output << '\n';
    return kExitOk;
  }

  int split() {
    const auto r = resolve(g_.config);
    if (g_.dry_run) return print_resolved(r.config), kExitOk;
    const HsiCube cube = load_dataset(r.config.dataset);
    const auto dir = start_run("split", {r}, {r.config.train.seed});
    const auto data = prepare_data(cube, r.config.dataset, r.config.train.seed);
    write_split_csv(dir / "split.csv", data.split, data.patches.centers);
    out_ << "labeled_train = " << data.split.labeled_train.size() << '\n'
         << "unlabeled_train = " << data.split.unlabeled_train.size() << '\n'
         << "test = " << data.split.test.size() << '\n'
         << "run_dir = " << dir.string() << '\n';
    return kExitOk;
  }

  int train() {
    auto r = resolve(g_.config);
    if (g_.dry_run) return print_resolved(r.config), kExitOk;
    const HsiCube cube = load_dataset(r.config.dataset);
    const auto dir = start_run("train", {r}, {r.config.train.seed});
    write_file_atomic(dir / "config.json", dump_config(r.config) + "\n");
    TrainConfig tc = r.config.train;
    if (tc.checkpoint_every > 0) tc.checkpoint_path = dir / "checkpoint.ckpt";
    const auto data = prepare_data(cube, r.config.dataset, tc.seed);
    write_split_csv(dir / "split.csv", data.split, data.patches.centers);
    auto result = ladder::train(tc, data.patches, data.split);
    save_checkpoint(dir / "checkpoint.ckpt", result.final_state);
    const auto report = format_report(result.report);
    write_file_atomic(dir / "report.txt", report);
    write_file_atomic(dir / "loss_curve.csv", format_loss_curve(result.report));
    out_ << report << "run_dir = " << dir.string() << '\n';
    return kExitOk;
  }

  int eval(const std::string& checkpoint) {
    auto r = resolve(g_.config);
    if (g_.dry_run) return print_resolved(r.config), kExitOk;
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const HsiCube cube = load_dataset(r.config.dataset);
    const auto dir = start_run("eval", {r}, {r.config.train.seed});
    const auto data = prepare_data(cube, r.config.dataset, r.config.train.seed);
    LadderSpec spec = r.config.train.ladder;
    if (spec.input_shape.empty()) spec.input_shape = data.patches.sample_shape();
    Rng rng(0);
    LadderParams params = init_params(spec, rng);
    restore_checkpoint(ckpt, params);
    TrainReport report;
    report.seed = r.config.train.seed;
    report.metrics = evaluate(params, spec, data.patches, data.split.test, r.config.train.eval_batch);
    const auto text = format_report(report);
    write_file_atomic(dir / "eval_report.txt", text);
    out_ << text << "run_dir = " << dir.string() << '\n';
    return kExitOk;
  }

  int sweep(const std::vector<std::string>& extra, const std::string& resume_dir) {
    auto r = resolve(g_.config, extra);
    const SweepSpec spec = sweep_from_config(r.config);
    for (double v : spec.values) (void)cell_config(spec, v, spec.seeds.front());
    if (g_.dry_run) {
      print_resolved(r.config);
      err_ << "cells: " << spec.values.size() * spec.seeds.size() << '\n';
      return kExitOk;
    }
    const HsiCube cube = load_dataset(r.config.dataset);
    fs::path dir;
    if (!resume_dir.empty()) {
      dir = resume_dir;
      if (!fs::is_directory(dir)) throw ConfigError("--resume directory " + dir.string() + " does not exist");
    }
    dir = start_run("sweep", {r}, spec.seeds, dir);
    SweepOptions opts;
    opts.csv_path = dir / "sweep.csv";
    opts.workers = g_.workers;
    opts.on_row = [&](const SweepRow& row) { out_ << sweep_row_csv(spec.axis, row) << '\n' << std::flush; };
    const auto rows = run_sweep(spec, opts, &cube);
    const auto agg = aggregate_sweep(rows);
    write_aggregate_csv(dir / "sweep_aggregate.csv", spec.axis, agg);
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& x) { return x.status != "ok"; });
    out_ << "rows = " << rows.size() << "\nfailed = " << failed << "\nrun_dir = " << dir.string() << '\n';
    return kExitOk;
  }

  int table1(const std::string& variant, const std::string& seeds_text) {
    std::vector<std::string> variants;
    if (variant == "both") {
      variants = {"fc", "conv"};
    } else if (variant == "fc" || variant == "conv") {
      variants = {variant};
    } else {
      throw ConfigError("--variant must be fc, conv or both");
    }
    if (!g_.config.empty() && variants.size() != 1) throw ConfigError("--config with table1 needs --variant fc or conv");
    std::vector<int> ns{5, 10};
    if (g_.labels_opt->count()) ns = {g_.labels};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    if (!seeds_text.empty()) {
      seeds.clear();
      for (auto d : parse_dims(seeds_text)) seeds.push_back(d);
    }
    std::vector<Resolved> configs;
    for (const auto& v : variants) configs.push_back(resolve(g_.config.empty() ? v + "_pavia" : g_.config));
    if (g_.dry_run) {
      for (const auto& c : configs) print_resolved(c.config);
      return kExitOk;
    }
    std::map<std::pair<std::string, std::string>, HsiCube> cubes;
    for (const auto& c : configs) {
      const auto key = std::make_pair(c.config.dataset.data, c.config.dataset.gt);
      if (!cubes.count(key)) cubes.emplace(key, load_dataset(c.config.dataset));
    }
    const auto dir = start_run("table1", configs, seeds);
    std::vector<Table1Row> rows;
    for (std::size_t i = 0; i < variants.size(); ++i) {
      const auto& c = configs[i].config;
      const HsiCube& cube = cubes.at({c.dataset.data, c.dataset.gt});
      for (int n : ns) {
        rows.push_back(table1_row(c, variants[i], n, seeds, g_.workers, &cube));
        out_ << variants[i] << " n=" << n << " oa=" << format_double(rows.back().oa_mean) << " +- "
             << format_double(rows.back().oa_std) << '\n' << std::flush;
        write_file_atomic(dir / "table1.csv", format_table1(rows));
      }
    }
    out_ << format_table1(rows) << "run_dir = " << dir.string() << '\n';
    return kExitOk;
  }

 private:
  Globals g_;
  std::vector<std::string> argv_;
  std::ostream& out_;
  std::ostream& err_;
};

int report_error(std::ostream& err, int code, const char* type, const std::string& message) {
  err << nlohmann::json{{"error", {{"code", code}, {"type", type}, {"message", message}}}}.dump() << '\n';
  return code;
}

std::string join_list(const std::string& text) {
  return "[" + text + "]";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised hyperspectral classification with ladder networks", "ladder"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  Globals g;
  app.add_option("--config", g.config, "Config name (e.g. fc_pavia) or JSON file path");
  app.add_option("--out", g.out, "Root directory for run outputs")->capture_default_str();
  g.seed_opt = app.add_option("--seed", g.seed, "Overrides train.seed");
  app.add_option("--workers", g.workers, "Concurrent runs for sweep/table1")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", g.dry_run, "Validate and print the resolved configuration, then exit");
  g.precision_opt = app.add_option("--precision", g.precision, "Floating-point precision")->check(CLI::IsMember({"f32", "f64"}));
  g.labels_opt = app.add_option("--labels", g.labels, "Overrides dataset.labels_per_class (-1 = all)");
  app.add_option("--set", g.sets, "Override any config key: dotted.key=value (repeatable)");

  auto* convert = app.add_subcommand("convert", "Convert a headerless raw array dump to HSICUBE1");
  std::string input, output, dims, dtype = "f64", output_dtype, order = "bip";
  bool big_endian = false;
  convert->add_option("--input", input, "Raw dump")->required()->check(CLI::ExistingFile);
  convert->add_option("--output", output, "HSICUBE1 file to write")->required();
  convert->add_option("--dims", dims, "Comma-separated dims, rows,cols[,bands]")->required();
  convert->add_option("--input-dtype", dtype, "f32, f64 or u8")->capture_default_str();
  convert->add_option("--output-dtype", output_dtype, "Defaults to the input dtype");
  convert->add_option("--order", order, "bip, bil or bsq")->capture_default_str();
  convert->add_flag("--big-endian", big_endian, "Input is big-endian");

  auto* split = app.add_subcommand("split", "Write the labeled/unlabeled/test split");
  auto* train = app.add_subcommand("train", "Train and evaluate one model");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep over values x seeds");
  std::string axis, values, seeds, resume;
  bool uniform = false;
  sweep->add_option("--axis", axis, "labels_per_class, noise_std, top_lambda or pca_components");
  sweep->add_option("--values", values, "Comma-separated axis values");
  sweep->add_option("--seeds", seeds, "Comma-separated seeds");
  sweep->add_flag("--uniform-lambda", uniform, "top_lambda axis: set every level");
  sweep->add_option("--resume", resume, "Existing sweep run directory to complete");

  auto* table1 = app.add_subcommand("table1", "Repeated FC/conv runs at 5 and 10 labels per class");
  std::string variant = "both", table_seeds;
  table1->add_option("--variant", variant, "fc, conv or both")->capture_default_str();
  table1->add_option("--seeds", table_seeds, "Comma-separated seeds (default 1,2,3,4,5)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, kExitConfig, "usage", e.what());
  }

  Cli cli(g, args, out, err);
  try {
    if (*convert) return cli.convert(input, output, dims, dtype, output_dtype, order, big_endian);
    if (*split) return cli.split();
    if (*train) return cli.train();
    if (*eval) return cli.eval(checkpoint);
    if (*sweep) {
      std::vector<std::string> extra;
      if (!axis.empty()) extra.push_back("sweep.axis=\"" + axis + "\"");
      if (!values.empty()) extra.push_back("sweep.values=" + join_list(values));
      if (!seeds.empty()) extra.push_back("sweep.seeds=" + join_list(seeds));
      if (uniform) extra.push_back("sweep.uniform_lambda=true");
      return cli.sweep(extra, resume);
    }
    if (*table1) return cli.table1(variant, table_seeds);
  } catch (const ConfigError& e) {
    return report_error(err, kExitConfig, "config", e.what());
  } catch (const DatasetMissingError& e) {
    return report_error(err, kExitDatasetMissing, "dataset_missing", e.what());
  } catch (const NumericError& e) {
    return report_error(err, kExitNumeric, "numeric", e.what());
  } catch (const Error& e) {
    return report_error(err, kExitData, "data", e.what());
  } catch (const std::exception& e) {
    return report_error(err, kExitFailure, "internal", e.what());
  }
  return report_error(err, kExitConfig, "usage", "no command given");
}

}  // namespace ladder::cli
