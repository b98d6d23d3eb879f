#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ladder/hsi.hpp"
#include "ladder/rng.hpp"

namespace ladder {

/// Use every non-test labeled sample as labeled training data.
inline constexpr int kAllLabels = -1;

/// Partition of sample indices into labeled-train, unlabeled-train and test.
struct SemiSplit {
  std::vector<std::size_t> labeled_train;
  std::vector<std::size_t> unlabeled_train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  int labels_per_class = 0;

  friend bool operator==(const SemiSplit&, const SemiSplit&) = default;
};

/// Stratified split over per-sample labels (0-based classes, -1 = background).
///
/// The test set is drawn first: per class, a largest-remainder share of
/// round(test_fraction * labeled total). Then `labels_per_class` samples per
/// class are drawn uniformly from the remaining ones; everything else
/// (including background samples) becomes unlabeled. The test draw does not
/// depend on `labels_per_class`. With kAllLabels every non-test labeled
/// sample is labeled and the unlabeled pool holds only background.
SemiSplit make_split(std::span<const int> labels, int num_classes, int labels_per_class, double test_fraction,
                     std::uint64_t seed);
SemiSplit make_split(const PatchSet& patches, int labels_per_class, double test_fraction, std::uint64_t seed);

/// Throws DataError unless the three sets are disjoint, cover every sample,
/// and only labeled samples appear in labeled_train/test.
void check_split(const SemiSplit& split, std::span<const int> labels);

enum class BalanceStrategy { none, upsample, downsample };

/// Equalizes class counts of `indices`: upsample draws with replacement up to
/// the largest class count, downsample draws without replacement down to the
/// smallest. Output is grouped by class, in ascending class order.
std::vector<std::size_t> balance_labels(std::span<const std::size_t> indices, std::span<const int> labels,
                                        BalanceStrategy strategy, Rng& rng);

/// CSV with header "index,row,col,class,role"; class is 1-based (0 = background).
void write_split_csv(const std::filesystem::path& path, const SemiSplit& split, std::span<const PixelRef> centers);

}  // namespace ladder
