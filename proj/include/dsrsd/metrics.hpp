#pragma once

#include <span>

namespace dsrsd {

struct MetricSet {
  double auc = 0.0;
  double acc = 0.0;
  double f1 = 0.0;
};

/// Probability that a random positive outranks a random negative, ties counting
/// one half, via the rank-sum (Mann-Whitney) statistic with mid-ranks.
/// Labels are binary: 1 is positive, anything else negative.
double auc(std::span<const double> scores, std::span<const int> labels);

struct AccuracyF1 {
  double acc = 0.0;
  double f1 = 0.0;
  bool no_predicted_positive = false;  // f1 reported as 0 in that case
};

/// Positive prediction when score >= threshold; F1 on the positive class.
AccuracyF1 accuracy_f1(std::span<const double> scores, std::span<const int> labels,
                       double threshold = 0.5);

MetricSet compute_metrics(std::span<const double> scores, std::span<const int> labels);

}  // namespace dsrsd
