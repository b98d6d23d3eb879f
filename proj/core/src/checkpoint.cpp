#include "ladder/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "ladder/array_file.hpp"
#include "ladder/error.hpp"

namespace ladder {
namespace {

constexpr char kMagic[8] = {'L', 'A', 'D', 'C', 'K', 'P', 'T', '1'};
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("checkpoint: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

std::string get_string(const std::string& in, std::size_t& pos) {
  const auto n = get<std::uint32_t>(in, pos);
  if (pos + n > in.size()) throw IoError("checkpoint: truncated string");
  std::string s = in.substr(pos, n);
  pos += n;
  return s;
}

}  // namespace

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw IoError("checkpoint has no tensor '" + name + "'");
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, Checkpoint::kVersion);
  put<std::uint64_t>(out, ckpt.iteration);
  put<std::int64_t>(out, ckpt.adam_steps);
  put<std::uint64_t>(out, ckpt.rng_seed);
  put_string(out, ckpt.rng_state);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put<double>(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a LADCKPT1 checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != Checkpoint::kVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.iteration = get<std::uint64_t>(bytes, pos);
  c.adam_steps = get<std::int64_t>(bytes, pos);
  c.rng_seed = get<std::uint64_t>(bytes, pos);
  c.rng_state = get_string(bytes, pos);
  const auto count = get<std::uint32_t>(bytes, pos);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_string(bytes, pos);
    const auto rank = get<std::uint32_t>(bytes, pos);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(get<std::uint32_t>(bytes, pos));
    Tensor t(shape);
    for (auto& v : t.data()) v = get<double>(bytes, pos);
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (pos != bytes.size()) throw IoError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

Checkpoint capture_checkpoint(const LadderParams& params, const Adam& adam, const Rng& rng, std::uint64_t iteration) {
  Checkpoint c;
  c.iteration = iteration;
  c.adam_steps = adam.steps();
  c.rng_seed = rng.seed();
  c.rng_state = rng.state();
  const auto all = params.all();
  for (const auto* p : all) c.tensors.emplace_back(p->name, p->value);
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const std::string pre = "encoder." + std::to_string(l + 1) + ".";
    c.tensors.emplace_back(pre + "running_mean", params.encoder[l].running.mean);
    c.tensors.emplace_back(pre + "running_var", params.encoder[l].running.var);
  }
  const auto& m = adam.first_moments();
  const auto& v = adam.second_moments();
  for (std::size_t i = 0; i < m.size() && i < all.size(); ++i) {
    c.tensors.emplace_back("adam.m." + all[i]->name, m[i]);
    c.tensors.emplace_back("adam.v." + all[i]->name, v[i]);
  }
  return c;
}

void restore_checkpoint(const Checkpoint& ckpt, LadderParams& params, Adam* adam, Rng* rng) {
  auto all = params.all();
  for (auto* p : all) {
    const Tensor& t = ckpt.find(p->name);
    if (t.shape() != p->value.shape()) {
      throw DimensionError("checkpoint tensor '" + p->name + "' has shape " + to_string(t.shape()) + ", model expects " +
                           to_string(p->value.shape()));
    }
    p->value = t;
    p->zero_grad();
  }
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const std::string pre = "encoder." + std::to_string(l + 1) + ".";
    params.encoder[l].running.mean = ckpt.find(pre + "running_mean");
    params.encoder[l].running.var = ckpt.find(pre + "running_var");
  }
  if (adam) {
    std::vector<Tensor> m, v;
    if (ckpt.adam_steps > 0) {
      for (auto* p : all) {
        m.push_back(ckpt.find("adam.m." + p->name));
        v.push_back(ckpt.find("adam.v." + p->name));
      }
    }
    adam->restore(ckpt.adam_steps, std::move(m), std::move(v));
  }
  if (rng) rng->set_state(ckpt.rng_seed, ckpt.rng_state);
}

}  // namespace ladder
