#include "dsrsd/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "dsrsd/error.hpp"

namespace dsrsd {

namespace {
void require_paired(const char* what, std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(labels.size()) + " labels");
  }
}
}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  require_paired("auc", scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the positive rank sum, so mid-ranks stay integral.
  double twice_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && scores[order[end]] == scores[order[start]]) ++end;
    const double twice_mid_rank = static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) {
      if (labels[order[k]] == 1) {
        twice_rank_sum += twice_mid_rank;
        ++positives;
      }
    }
    start = end;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("auc: undefined with a single class (" + std::to_string(positives) + " positives, " +
                    std::to_string(negatives) + " negatives)");
  }
  const double np = static_cast<double>(positives);
  const double twice_u = twice_rank_sum - np * (np + 1.0);
  return twice_u / (2.0 * np * static_cast<double>(negatives));
}

AccuracyF1 accuracy_f1(std::span<const double> scores, std::span<const int> labels, double threshold) {
  require_paired("accuracy_f1", scores, labels);
  if (scores.empty()) throw DataError("accuracy_f1: no samples");
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted == actual) ++correct;
    if (predicted && actual) ++tp;
    if (predicted && !actual) ++fp;
    if (!predicted && actual) ++fn;
  }
  AccuracyF1 r;
  r.acc = static_cast<double>(correct) / static_cast<double>(scores.size());
  r.no_predicted_positive = tp + fp == 0;
  if (tp > 0) {
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    r.f1 = 2.0 * precision * recall / (precision + recall);
  }
  return r;
}

MetricSet compute_metrics(std::span<const double> scores, std::span<const int> labels) {
  const AccuracyF1 af = accuracy_f1(scores, labels);
  return {auc(scores, labels), af.acc, af.f1};
}

}  // namespace dsrsd
