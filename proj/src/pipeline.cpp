#include "finece/pipeline.hpp"

#include <cstdio>
#include <limits>

namespace finece {

std::string_view to_string(TreeStrategy s) {
  switch (s) {
    case TreeStrategy::FullTree: return "full_tree";
    case TreeStrategy::Clustered: return "clustered";
    case TreeStrategy::Linear: return "linear";
  }
  return "linear";
}

std::string_view to_string(TruncationRule r) {
  return r == TruncationRule::SentenceFraction ? "sentence_fraction" : "paragraph_boundary";
}

std::string_view to_string(CostCheck c) {
  switch (c) {
    case CostCheck::Pass: return "pass";
    case CostCheck::Fail: return "fail";
    case CostCheck::Skipped: return "skipped";
  }
  return "skipped";
}

TreeStrategy parse_tree_strategy(std::string_view s) {
  if (s == "full_tree" || s == "full") return TreeStrategy::FullTree;
  if (s == "clustered") return TreeStrategy::Clustered;
  if (s == "linear") return TreeStrategy::Linear;
  throw ConfigError("unknown tree strategy '" + std::string(s) + "'");
}

TruncationRule parse_truncation_rule(std::string_view s) {
  if (s == "sentence_fraction" || s == "sentence") return TruncationRule::SentenceFraction;
  if (s == "paragraph_boundary" || s == "paragraph") return TruncationRule::ParagraphBoundary;
  throw ConfigError("unknown truncation rule '" + std::string(s) + "'");
}

void PipelineParams::validate() const {
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (m < 1 || m > k) throw ArgumentError("m must satisfy 1 <= m <= k");
  if (T < 0) throw ArgumentError("T must be >= 0");
}

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
    throw ArgumentError("predicted cost overflows 64 bits");
  return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a)
    throw ArgumentError("predicted cost overflows 64 bits");
  return a + b;
}

}  // namespace

std::uint64_t predicted_cost(const PipelineParams& params) {
  params.validate();
  const auto k = static_cast<std::uint64_t>(params.k);
  const auto m = static_cast<std::uint64_t>(params.m);
  const auto T = static_cast<std::uint64_t>(params.T);
  switch (params.strategy) {
    case TreeStrategy::FullTree: {
      std::uint64_t total = 0, power = 1;
      for (std::uint64_t i = 1; i <= T + 1; ++i) {
        power = checked_mul(power, k);
        total = checked_add(total, power);
      }
      return total;
    }
    case TreeStrategy::Clustered: {
      std::uint64_t total = 0, power = 1;
      for (std::uint64_t i = 0; i <= T; ++i) {
        total = checked_add(total, power);
        if (i < T) power = checked_mul(power, m);
      }
      return checked_mul(k, total);
    }
    case TreeStrategy::Linear:
      return checked_mul(k, checked_add(1, checked_mul(m, T)));
  }
  return 0;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Question& q, const PipelineParams& params, const SamplingPlan& plan,
              Generator& gen, const Embedder& embedder)
      : params_(params), plan_(plan), gen_(gen), embedder_(embedder) {
    tree_.question = q;
    tree_.params = params;
    plan_.k = params.k;
  }

  AnswerTree run() {
    int root = add_node(std::nullopt, std::nullopt, SequenceState::question(tree_.question.id));
    std::vector<int> frontier{root};
    for (int level = 1; level <= params_.T && !frontier.empty(); ++level) {
      std::vector<int> next;
      for (int node : frontier) expand_level(node, level, next);
      frontier = std::move(next);
    }
    tree_.ledger = gen_.ledger();
    tree_.predicted_cost = predicted_cost(params_);
    if (clean_) {
      tree_.cost_check =
          tree_.ledger.inference_count == tree_.predicted_cost ? CostCheck::Pass : CostCheck::Fail;
      if (tree_.cost_check == CostCheck::Fail)
        note("measured " + std::to_string(tree_.ledger.inference_count) +
             " inferences, predicted " + std::to_string(tree_.predicted_cost));
    } else {
      tree_.cost_check = CostCheck::Skipped;
      note("cost check skipped: tree deviates from the full expansion pattern");
    }
    return std::move(tree_);
  }

 private:
  void note(std::string msg) { tree_.notes.push_back(std::move(msg)); }

  int add_node(std::optional<int> parent, std::optional<int> source, SequenceState seq) {
    AnswerTreeNode node;
    node.node_id = static_cast<int>(tree_.nodes.size());
    node.depth = parent ? tree_.nodes[static_cast<std::size_t>(*parent)].depth + 1 : 0;
    node.parent = parent;
    node.source_sample = source;
    node.prefix = std::move(seq);

    ConfidenceEstimate est = estimate_confidence(tree_.question, node.prefix, plan_, gen_);
    node.record = est.record;
    for (std::size_t i = 0; i < est.completions.size(); ++i) {
      TreeSample s;
      s.id = static_cast<int>(tree_.samples.size());
      s.node_id = node.node_id;
      s.ordinal = static_cast<int>(i);
      s.completion = std::move(est.completions[i]);
      s.full_answer = std::move(est.full_answers[i]);
      s.correct = est.correct[i];
      node.samples.push_back(s.id);
      tree_.samples.push_back(std::move(s));
    }
    int id = node.node_id;
    tree_.nodes.push_back(std::move(node));
    if (parent) tree_.nodes[static_cast<std::size_t>(*parent)].children.push_back(id);
    return id;
  }

  // Fragment of a sample's continuation, or nullopt (and a note) if infeasible.
  std::optional<std::string> fragment_of(int sample_id, int remaining_levels) {
    const TreeSample& s = tree_.samples[static_cast<std::size_t>(sample_id)];
    try {
      return truncate(s.completion, params_.truncation_rule, 1, remaining_levels);
    } catch (const TruncationInfeasible& e) {
      clean_ = false;
      note("node " + std::to_string(s.node_id) + " sample " + std::to_string(s.ordinal) +
           ": truncation infeasible (" + e.what() + ")");
      return std::nullopt;
    } catch (const ArgumentError& e) {
      clean_ = false;
      note("node " + std::to_string(s.node_id) + " sample " + std::to_string(s.ordinal) + ": " +
           e.what());
      return std::nullopt;
    }
  }

  void expand_child(int parent, int sample_id, const std::string& fragment,
                    std::optional<int> cluster, std::vector<int>& next) {
    const AnswerTreeNode& p = tree_.nodes[static_cast<std::size_t>(parent)];
    std::string prefix = join_continuation(p.prefix.prefix_text, fragment);
    int depth = p.depth + 1;
    int child = add_node(parent, sample_id,
                         SequenceState::partial(tree_.question.id, std::move(prefix), depth));
    tree_.nodes[static_cast<std::size_t>(child)].representative_of_cluster = cluster;
    next.push_back(child);
  }

  void expand_level(int node_id, int level, std::vector<int>& next) {
    const int remaining = params_.T - tree_.nodes[static_cast<std::size_t>(node_id)].depth;
    const std::vector<int> samples = tree_.nodes[static_cast<std::size_t>(node_id)].samples;

    const bool one_representative = params_.strategy == TreeStrategy::Linear && level >= 2;
    if (one_representative) {
      std::vector<std::string> texts;
      for (int s : samples) texts.push_back(tree_.samples[static_cast<std::size_t>(s)].completion.text);
      int chosen = samples[select_representative(texts, embedder_)];
      if (auto frag = fragment_of(chosen, remaining)) expand_child(node_id, chosen, *frag, std::nullopt, next);
      return;
    }

    std::vector<int> ids;
    std::vector<std::string> fragments;
    for (int s : samples) {
      if (auto frag = fragment_of(s, remaining)) {
        ids.push_back(s);
        fragments.push_back(std::move(*frag));
      }
    }
    if (fragments.empty()) return;

    if (params_.strategy == TreeStrategy::FullTree) {
      for (std::size_t i = 0; i < fragments.size(); ++i)
        expand_child(node_id, ids[i], fragments[i], std::nullopt, next);
      return;
    }

    ClusteringResult clusters = cluster_fragments(fragments, params_.m, embedder_);
    tree_.effective_m.push_back(clusters.effective_m);
    if (clusters.effective_m < params_.m) {
      clean_ = false;
      note("node " + std::to_string(node_id) + ": only " + std::to_string(clusters.effective_m) +
           " distinct fragments, m lowered from " + std::to_string(params_.m));
    }
    for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
      std::size_t medoid = clusters.clusters[c].medoid;
      expand_child(node_id, ids[medoid], fragments[medoid], static_cast<int>(c), next);
    }
  }

  AnswerTree tree_;
  PipelineParams params_;
  SamplingPlan plan_;
  Generator& gen_;
  const Embedder& embedder_;
  bool clean_ = true;
};

}  // namespace

AnswerTree build_tree(const Question& question, const PipelineParams& params,
                      const SamplingPlan& plan, Generator& gen, const Embedder& embedder) {
  params.validate();
  question.validate();
  MeteredGenerator metered(gen);
  return TreeBuilder(question, params, plan, metered, embedder).run();
}

std::string render_instruction(const Question& q, std::string_view prefix) {
  std::string out = "Question: ";
  out += q.text;
  out += '\n';
  out += prefix;
  out += "\nHow likely is the above to lead to a correct final answer? Confidence:";
  return out;
}

std::string render_target(double confidence) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", confidence);
  return buf;
}

std::vector<TrainingExample> emit_training_data(const AnswerTree& tree) {
  std::vector<TrainingExample> out;
  if (tree.nodes.empty()) return out;
  const Question& q = tree.question;
  for (const auto& node : tree.nodes) {
    TrainingExample ex;
    ex.kind = node.depth == 0 ? SequenceKind::Question : SequenceKind::QuestionWithPartialAnswer;
    ex.input_text = render_instruction(q, node.prefix.prefix_text);
    ex.target_confidence = node.record.raw_conf;
    ex.question_id = q.id;
    ex.provenance = node.node_id;
    out.push_back(std::move(ex));
  }
  for (const auto& s : tree.samples) {
    if (s.completion.finish_reason != FinishReason::Stop) continue;
    TrainingExample ex;
    ex.kind = SequenceKind::QuestionWithAnswer;
    ex.input_text = render_instruction(q, s.full_answer);
    ex.target_confidence = s.correct ? 1.0 : 0.0;
    ex.question_id = q.id;
    ex.provenance = s.node_id;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace finece
