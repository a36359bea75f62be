#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finece/core.hpp"

namespace finece {

enum class PositionTag { P1, PzMinus1, Final };
std::string_view to_string(PositionTag t);
PositionTag parse_position_tag(std::string_view s);

struct LabeledPrediction {
  double confidence = 0.0;
  bool correct = false;
  std::optional<PositionTag> position_tag;
};

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  double mean_conf = 0.0;
  double empirical_acc = 0.0;
  std::size_t count = 0;
};

struct MetricReport {
  double ece = 0.0;
  std::optional<double> auroc;  // empty when only one class is present
  double accuracy = 0.0;
  std::size_t n = 0;
  std::vector<ReliabilityBin> bins;
};

// Equal-width, right-closed bins over [0, 1]: (lo, hi], with 0 in the first bin.
std::size_t bin_index(double confidence, int num_bins);
std::vector<ReliabilityBin> reliability_bins(const std::vector<LabeledPrediction>& preds,
                                             int num_bins);
double ece_from_bins(const std::vector<ReliabilityBin>& bins);

double ece(const std::vector<LabeledPrediction>& preds, int num_bins = 10);
// Mann-Whitney estimate with ties counted as one half. Throws UndefinedMetric
// unless both classes are present.
double auroc(const std::vector<LabeledPrediction>& preds);
double accuracy(const std::vector<LabeledPrediction>& preds);

MetricReport evaluate(const std::vector<LabeledPrediction>& preds, int num_bins = 10);

struct SelectiveResult {
  std::optional<double> accuracy;  // empty when nothing is retained
  double coverage = 0.0;
  std::size_t retained = 0;
};

// Keeps predictions with confidence strictly above the threshold.
SelectiveResult selective_accuracy(const std::vector<LabeledPrediction>& preds, double threshold);

// Probability of the first generated token.
double first_prob(const Completion& completion);

}  // namespace finece
