#include "ladder/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "ladder/array_file.hpp"
#include "ladder/error.hpp"

namespace ladder {
namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

constexpr std::uint64_t kTestSalt = 0x7465737431ULL;
constexpr std::uint64_t kLabelSalt = 0x6C6162656CULL;

}  // namespace

SemiSplit make_split(std::span<const int> labels, int num_classes, int labels_per_class, double test_fraction,
                     std::uint64_t seed) {
  if (num_classes < 1) throw ConfigError("split needs at least one class");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must be in [0, 1)");
  if (labels_per_class < 0 && labels_per_class != kAllLabels) throw ConfigError("labels per class must be >= 0");

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  SemiSplit split;
  split.seed = seed;
  split.labels_per_class = labels_per_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0) {
      split.unlabeled_train.push_back(i);
    } else if (l >= num_classes) {
      throw DataError("sample " + std::to_string(i) + " has class " + std::to_string(l) + " >= " + std::to_string(num_classes));
    } else {
      by_class[static_cast<std::size_t>(l)].push_back(i);
    }
  }

  // Largest-remainder apportionment of round(f * total) test samples.
  std::size_t total = 0;
  for (const auto& c : by_class) total += c.size();
  const auto target = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(total)));
  std::vector<std::size_t> quota(by_class.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    const double exact = test_fraction * static_cast<double>(by_class[k].size());
    quota[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[k];
    remainders.emplace_back(exact - static_cast<double>(quota[k]), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i) {
    const auto k = remainders[i].second;
    if (quota[k] < by_class[k].size()) {
      ++quota[k];
      ++assigned;
    }
  }

  Rng test_rng(Rng::derive_seed(seed, kTestSalt));
  Rng label_rng(Rng::derive_seed(seed, kLabelSalt));
  std::vector<std::vector<std::size_t>> remaining(by_class.size());
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto pool = by_class[k];
    shuffle(pool, test_rng);
    split.test.insert(split.test.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[k]));
    remaining[k].assign(pool.begin() + static_cast<std::ptrdiff_t>(quota[k]), pool.end());
    std::sort(remaining[k].begin(), remaining[k].end());
  }
  for (std::size_t k = 0; k < remaining.size(); ++k) {
    auto pool = remaining[k];
    if (labels_per_class == kAllLabels) {
      split.labeled_train.insert(split.labeled_train.end(), pool.begin(), pool.end());
      continue;
    }
    const auto n = static_cast<std::size_t>(labels_per_class);
    if (pool.size() < n) {
      throw DataError("class " + std::to_string(k + 1) + " has only " + std::to_string(pool.size()) +
                      " non-test samples, " + std::to_string(n) + " labeled samples requested");
    }
    shuffle(pool, label_rng);
    split.labeled_train.insert(split.labeled_train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    split.unlabeled_train.insert(split.unlabeled_train.end(), pool.begin() + static_cast<std::ptrdiff_t>(n), pool.end());
  }
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.labeled_train.begin(), split.labeled_train.end());
  std::sort(split.unlabeled_train.begin(), split.unlabeled_train.end());
  return split;
}

SemiSplit make_split(const PatchSet& patches, int labels_per_class, double test_fraction, std::uint64_t seed) {
  return make_split(patches.labels, patches.num_classes, labels_per_class, test_fraction, seed);
}

void check_split(const SemiSplit& split, std::span<const int> labels) {
  std::vector<int> seen(labels.size(), 0);
  auto mark = [&](const std::vector<std::size_t>& set, const char* name, bool labeled_only) {
    for (auto i : set) {
      if (i >= labels.size()) throw DataError(std::string(name) + " index out of range");
      if (seen[i]++) throw DataError(std::string("sample ") + std::to_string(i) + " appears in more than one split set");
      if (labeled_only && labels[i] < 0) throw DataError(std::string(name) + " contains a background sample");
    }
  };
  mark(split.labeled_train, "labeled_train", true);
  mark(split.unlabeled_train, "unlabeled_train", false);
  mark(split.test, "test", true);
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw DataError("split does not cover every sample");
}

std::vector<std::size_t> balance_labels(std::span<const std::size_t> indices, std::span<const int> labels,
                                        BalanceStrategy strategy, Rng& rng) {
  std::map<int, std::vector<std::size_t>> groups;
  for (auto i : indices) groups[labels[i]].push_back(i);
  if (strategy == BalanceStrategy::none || groups.empty()) return {indices.begin(), indices.end()};
  std::size_t lo = indices.size(), hi = 0;
  for (const auto& [cls, g] : groups) {
    lo = std::min(lo, g.size());
    hi = std::max(hi, g.size());
  }
  std::vector<std::size_t> out;
  for (auto& [cls, g] : groups) {
    if (strategy == BalanceStrategy::upsample) {
      out.insert(out.end(), g.begin(), g.end());
      for (std::size_t i = g.size(); i < hi; ++i) out.push_back(g[rng.uniform_index(g.size())]);
    } else {
      if (g.size() == lo) {
        out.insert(out.end(), g.begin(), g.end());
        continue;
      }
      shuffle(g, rng);
      g.resize(lo);
      std::sort(g.begin(), g.end());
      out.insert(out.end(), g.begin(), g.end());
    }
  }
  return out;
}

void write_split_csv(const std::filesystem::path& path, const SemiSplit& split, std::span<const PixelRef> centers) {
  std::vector<const char*> role(centers.size(), nullptr);
  for (auto i : split.labeled_train) role.at(i) = "labeled";
  for (auto i : split.unlabeled_train) role.at(i) = "unlabeled";
  for (auto i : split.test) role.at(i) = "test";
  std::ostringstream os;
  os << "index,row,col,class,role\n";
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (!role[i]) continue;
    os << i << ',' << centers[i].row << ',' << centers[i].col << ',' << centers[i].label + 1 << ',' << role[i] << '\n';
  }
  write_file_atomic(path, os.str());
}

}  // namespace ladder
