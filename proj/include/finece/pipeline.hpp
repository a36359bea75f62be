#pragma once

// Progressive construction of confidence-labelled training data.
//
// The root (bare question) is sampled k times. Each later level truncates
// sampled answers into partial-answer fragments, picks which fragments to
// expand according to the strategy, and samples k continuations of each
// chosen fragment to label it:
//
//   FullTree   every fragment of every node is expanded (k children per node)
//   Clustered  each node's k fragments are clustered into m groups and only
//              the m medoids are expanded
//   Linear     clustered at the first level; afterwards each branch truncates
//              one representative answer, so m nodes are expanded per level
//
// With T truncation levels the three strategies cost sum_{i=1}^{T+1} k^i,
// k * sum_{i=0}^{T} m^i and k * (1 + m T) generator inferences respectively.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finece/core.hpp"
#include "finece/embedding.hpp"
#include "finece/generator.hpp"
#include "finece/mcsampler.hpp"

namespace finece {

enum class TreeStrategy { FullTree, Clustered, Linear };
enum class TruncationRule { SentenceFraction, ParagraphBoundary };

std::string_view to_string(TreeStrategy s);
std::string_view to_string(TruncationRule r);
TreeStrategy parse_tree_strategy(std::string_view s);
TruncationRule parse_truncation_rule(std::string_view s);

struct PipelineParams {
  int k = 30;
  int m = 2;
  int T = 2;
  TreeStrategy strategy = TreeStrategy::Linear;
  TruncationRule truncation_rule = TruncationRule::SentenceFraction;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Truncation

// Strict, non-empty prefix of answer.text.
//  SentenceFraction: keep round(level * n / (T + 1)) tokens (at least one),
//    then extend to the next sentence boundary ([.!?] or a newline, followed
//    by whitespace).
//  ParagraphBoundary: keep everything up to the end of the level-th paragraph.
// Throws TruncationInfeasible when no such cut leaves text after it.
std::string truncate(const Completion& answer, TruncationRule rule, int level, int T);

// ---------------------------------------------------------------------------
// Clustering

struct FragmentCluster {
  std::vector<std::size_t> members;  // indices into the input, ascending
  std::size_t medoid = 0;            // index into the input
};

struct ClusteringResult {
  std::vector<FragmentCluster> clusters;  // ordered by medoid index
  int requested_m = 0;
  int effective_m = 0;
};

// k-medoids over cosine distance. Initial medoids come from farthest-first
// traversal starting at the lexicographically smallest fragment; m is lowered
// to the number of distinct fragments when needed.
ClusteringResult cluster_fragments(const std::vector<std::string>& fragments, int m,
                                   const Embedder& embedder = default_embedder());

// Medoid of the texts: the one with the smallest summed distance to all
// others, lowest index on ties.
std::size_t select_representative(const std::vector<std::string>& texts,
                                  const Embedder& embedder = default_embedder());
const Completion& select_representative(const std::vector<Completion>& completions,
                                        const Embedder& embedder = default_embedder());

// ---------------------------------------------------------------------------
// Answer tree

struct TreeSample {
  int id = 0;
  int node_id = 0;
  int ordinal = 0;  // sample index within its node
  Completion completion;
  std::string full_answer;
  bool correct = false;
};

struct AnswerTreeNode {
  int node_id = 0;
  int depth = 0;
  std::optional<int> parent;
  std::optional<int> source_sample;  // sample whose truncation produced this node
  SequenceState prefix;
  ConfidenceRecord record;
  std::vector<int> children;
  std::vector<int> samples;
  std::optional<int> representative_of_cluster;
};

enum class CostCheck { Pass, Fail, Skipped };
std::string_view to_string(CostCheck c);

struct AnswerTree {
  Question question;
  PipelineParams params;
  std::vector<AnswerTreeNode> nodes;
  std::vector<TreeSample> samples;
  CostLedger ledger;
  std::uint64_t predicted_cost = 0;
  CostCheck cost_check = CostCheck::Skipped;
  std::vector<int> effective_m;  // per clustering level
  std::vector<std::string> notes;

  const AnswerTreeNode& root() const { return nodes.front(); }
};

std::uint64_t predicted_cost(const PipelineParams& params);

AnswerTree build_tree(const Question& question, const PipelineParams& params,
                      const SamplingPlan& plan, Generator& gen,
                      const Embedder& embedder = default_embedder());

// ---------------------------------------------------------------------------
// Training data

struct TrainingExample {
  SequenceKind kind = SequenceKind::Question;
  std::string input_text;
  double target_confidence = 0.0;
  std::string question_id;
  int provenance = 0;  // node id
};

// "Question: {x}\n{prefix}\nHow likely is the above to lead to a correct final
// answer? Confidence:"
std::string render_instruction(const Question& q, std::string_view prefix);
// Target as the two-decimal string a fine-tuned model is asked to emit.
std::string render_target(double confidence);

std::vector<TrainingExample> emit_training_data(const AnswerTree& tree);

}  // namespace finece
