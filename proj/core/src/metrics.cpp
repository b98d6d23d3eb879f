#include "ladder/metrics.hpp"

#include <cmath>
#include <limits>

#include "ladder/error.hpp"

namespace ladder {

std::size_t Metrics::total() const {
  std::size_t n = 0;
  for (const auto& row : confusion)
    for (auto v : row) n += v;
  return n;
}

Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
  const std::size_t k = confusion.size();
  for (const auto& row : confusion)
    if (row.size() != k) throw DimensionError("confusion matrix must be square");
  Metrics m;
  m.confusion = std::move(confusion);
  const std::size_t total = m.total();
  if (total == 0) throw PreconditionError("metrics of an empty test set");
  std::size_t correct = 0;
  double recall_sum = 0.0;
  std::size_t supported = 0;
  m.per_class_accuracy.assign(k, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < k; ++i) {
    correct += m.confusion[i][i];
    std::size_t support = 0;
    for (auto v : m.confusion[i]) support += v;
    if (support == 0) continue;
    m.per_class_accuracy[i] = static_cast<double>(m.confusion[i][i]) / static_cast<double>(support);
    recall_sum += m.per_class_accuracy[i];
    ++supported;
  }
  m.overall_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  m.average_accuracy = recall_sum / static_cast<double>(supported);
  return m;
}

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted, int num_classes) {
  if (truth.size() != predicted.size()) throw DimensionError("truth and prediction counts differ");
  if (truth.empty()) throw PreconditionError("metrics of an empty test set");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes) {
      throw PreconditionError("class index out of range in metrics");
    }
    ++confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return metrics_from_confusion(std::move(confusion));
}

}  // namespace ladder
