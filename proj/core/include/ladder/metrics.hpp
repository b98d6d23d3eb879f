#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ladder {

/// Classification metrics over a labeled test set.
struct Metrics {
  double overall_accuracy = 0.0;          // trace / total
  double average_accuracy = 0.0;          // mean recall over classes with test support
  std::vector<double> per_class_accuracy;  // recall per class; NaN when a class has no test samples
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  std::size_t total() const;
};

Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion);
Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted, int num_classes);

}  // namespace ladder
