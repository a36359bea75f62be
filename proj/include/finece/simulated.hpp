#pragma once

// A seeded stand-in for an LLM whose probability of reaching the gold answer
// from any prefix is known in closed form.
//
// Each answer is a run of `steps` single-sentence fragments grouped into
// paragraphs of `sentences_per_paragraph`, followed by "The answer is X." in the
// last paragraph. Which rule is active is decided by the latest pattern found in
// the answer prefix (the empty pattern is the default). The active rule supplies
// the fragment pool for the next step; a fragment whose text contains another
// rule's pattern moves the walk to that rule. At the end the answer is the gold
// one with probability p_correct of the active rule, otherwise a distractor.
//
// Fragment templates may contain "{n}", replaced by a random integer so sampled
// texts rarely coincide. Patterns must not span fragment boundaries or rely on
// the substituted digits.

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "finece/generator.hpp"

namespace finece {

namespace detail {
struct CompiledQuestion;
}

struct FragmentSpec {
  std::string text;
  double weight = 1.0;
};

struct BranchRule {
  std::string pattern;  // empty for the default rule
  double p_correct = 0.5;
  std::vector<std::string> distractors;  // empty -> inherit the default rule's
  std::vector<FragmentSpec> fragments;   // empty -> inherit the default rule's
};

struct WorldQuestion {
  Question question;
  int steps = 6;
  int sentences_per_paragraph = 1;
  std::vector<BranchRule> rules;
};

struct SimulatedWorld {
  std::uint64_t rng_seed = 0;
  std::vector<WorldQuestion> questions;

  void validate() const;
  const WorldQuestion& find(std::string_view question_id) const;
  std::vector<Question> question_list() const;

  // Exact probability that a sampled continuation of prefix ends in the gold answer.
  double true_confidence(std::string_view question_id, std::string_view prefix) const;
};

// Index of the rule in force after `text` (see the comment at the top).
std::size_t active_rule(const WorldQuestion& q, std::string_view text);

// Sentences completed in an answer prefix ([.!?] followed by whitespace or end).
int count_sentences(std::string_view text);

class SimulatedGenerator : public Generator {
 public:
  explicit SimulatedGenerator(SimulatedWorld world);
  ~SimulatedGenerator() override;

  bool supports_logprobs() const override { return true; }
  const SimulatedWorld& world() const noexcept { return world_; }
  // Same as SimulatedWorld::true_confidence, using the precomputed tables.
  double true_confidence(std::string_view question_id, std::string_view prefix) const;

 protected:
  GeneratedBatch do_generate(const Prompt& prompt, const GenerationConfig& config) override;
  Completion do_stream(const Prompt& prompt, const GenerationConfig& config,
                       const TokenSink& sink) override;

 private:
  std::uint64_t next_call_seed(const Prompt& prompt, const GenerationConfig& config);
  const detail::CompiledQuestion& compiled(std::string_view question_id) const;
  Completion sample(const detail::CompiledQuestion& q, std::string_view prefix,
                    std::uint64_t sample_seed, const GenerationConfig& config,
                    const TokenSink* sink) const;

  SimulatedWorld world_;
  std::vector<detail::CompiledQuestion> compiled_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::mutex ordinal_mutex_;
  std::map<std::uint64_t, std::uint64_t> ordinals_;
};

struct WorldSynthesisOptions {
  int questions = 20;
  std::uint64_t seed = 1;
  int steps = 6;
  int sentences_per_paragraph = 2;
};

// Arithmetic-flavoured questions with a default rule plus a "careful" and a
// "rough" branch that raise or lower the chance of the gold answer.
SimulatedWorld synthesize_world(const WorldSynthesisOptions& options);

// Questions whose correctness probability moves as a symmetric random walk on
// levels 0..10 (p = level / 10), one paragraph per step. The first step lands
// on a uniform level in 1..9. Because p is linear in the level, the true
// confidence at every prefix equals its current level / 10.
SimulatedWorld synthesize_walk_world(int questions, std::uint64_t seed, int steps);

}  // namespace finece
