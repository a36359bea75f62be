#include "finece/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace finece {

std::string_view to_string(PositionTag t) {
  switch (t) {
    case PositionTag::P1: return "p1";
    case PositionTag::PzMinus1: return "pz_minus_1";
    case PositionTag::Final: return "final";
  }
  return "final";
}

PositionTag parse_position_tag(std::string_view s) {
  if (s == "p1") return PositionTag::P1;
  if (s == "pz_minus_1") return PositionTag::PzMinus1;
  if (s == "final") return PositionTag::Final;
  throw ConfigError("unknown position tag '" + std::string(s) + "'");
}

namespace {

void check_predictions(const std::vector<LabeledPrediction>& preds) {
  if (preds.empty()) throw ArgumentError("no predictions");
  for (const auto& p : preds)
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0))
      throw ArgumentError("confidence outside [0, 1]");
}

}  // namespace

std::size_t bin_index(double confidence, int num_bins) {
  const auto b = static_cast<double>(num_bins);
  auto idx = static_cast<long>(std::ceil(confidence * b)) - 1;
  idx = std::clamp(idx, 0L, static_cast<long>(num_bins) - 1);
  // Guard the edges against rounding in confidence * b.
  if (idx > 0 && confidence <= static_cast<double>(idx) / b) --idx;
  if (idx < num_bins - 1 && confidence > static_cast<double>(idx + 1) / b) ++idx;
  return static_cast<std::size_t>(idx);
}

std::vector<ReliabilityBin> reliability_bins(const std::vector<LabeledPrediction>& preds,
                                             int num_bins) {
  if (num_bins <= 0) throw ArgumentError("num_bins must be positive");
  check_predictions(preds);
  std::vector<ReliabilityBin> bins(static_cast<std::size_t>(num_bins));
  std::vector<double> conf_sum(bins.size(), 0.0), hit_sum(bins.size(), 0.0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].lower = static_cast<double>(b) / num_bins;
    bins[b].upper = static_cast<double>(b + 1) / num_bins;
  }
  for (const auto& p : preds) {
    auto b = bin_index(p.confidence, num_bins);
    ++bins[b].count;
    conf_sum[b] += p.confidence;
    hit_sum[b] += p.correct ? 1.0 : 0.0;
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].count == 0) continue;
    bins[b].mean_conf = conf_sum[b] / static_cast<double>(bins[b].count);
    bins[b].empirical_acc = hit_sum[b] / static_cast<double>(bins[b].count);
  }
  return bins;
}

double ece_from_bins(const std::vector<ReliabilityBin>& bins) {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  if (n == 0) throw ArgumentError("bins are empty");
  double total = 0.0;
  for (const auto& b : bins)
    if (b.count > 0)
      total += static_cast<double>(b.count) / static_cast<double>(n) *
               std::abs(b.mean_conf - b.empirical_acc);
  return total;
}

double ece(const std::vector<LabeledPrediction>& preds, int num_bins) {
  return ece_from_bins(reliability_bins(preds, num_bins));
}

double auroc(const std::vector<LabeledPrediction>& preds) {
  check_predictions(preds);
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return preds[a].confidence < preds[b].confidence; });
  // Midranks (1-based) over tied groups.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && preds[order[j]].confidence == preds[order[i]].confidence) ++j;
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (preds[order[t]].correct) {
        rank_sum_pos += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = preds.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw UndefinedMetric("AUROC needs both correct and incorrect predictions");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

double accuracy(const std::vector<LabeledPrediction>& preds) {
  if (preds.empty()) throw ArgumentError("no predictions");
  std::size_t hits = 0;
  for (const auto& p : preds) hits += p.correct ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

MetricReport evaluate(const std::vector<LabeledPrediction>& preds, int num_bins) {
  MetricReport r;
  r.bins = reliability_bins(preds, num_bins);
  r.ece = ece_from_bins(r.bins);
  r.accuracy = accuracy(preds);
  r.n = preds.size();
  try {
    r.auroc = auroc(preds);
  } catch (const UndefinedMetric&) {
    r.auroc.reset();
  }
  return r;
}

SelectiveResult selective_accuracy(const std::vector<LabeledPrediction>& preds, double threshold) {
  if (preds.empty()) throw ArgumentError("no predictions");
  SelectiveResult r;
  std::size_t hits = 0;
  for (const auto& p : preds) {
    if (!(p.confidence > threshold)) continue;
    ++r.retained;
    hits += p.correct ? 1 : 0;
  }
  r.coverage = static_cast<double>(r.retained) / static_cast<double>(preds.size());
  if (r.retained > 0) r.accuracy = static_cast<double>(hits) / static_cast<double>(r.retained);
  return r;
}

double first_prob(const Completion& completion) {
  if (!completion.token_logprobs || completion.token_logprobs->empty())
    throw UnsupportedCapability("first-token probability needs token logprobs");
  return std::exp(completion.token_logprobs->front());
}

}  // namespace finece
