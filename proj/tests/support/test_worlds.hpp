#pragma once

#include <atomic>
#include <string>
#include <vector>

#include "finece/generator.hpp"
#include "finece/simulated.hpp"

namespace finece::testing {

inline Question numeric_question(std::string id, std::string gold) {
  return Question{std::move(id), "How many items are left?", std::move(gold),
                  MatcherKind::NumericFinalAnswer};
}

// One question whose default rule reaches the gold answer with probability p.
inline WorldQuestion flat_question(std::string id, double p, int steps = 3, int spp = 1) {
  WorldQuestion wq;
  wq.question = numeric_question(std::move(id), "42");
  wq.steps = steps;
  wq.sentences_per_paragraph = spp;
  BranchRule def;
  def.p_correct = p;
  def.distractors = {"41", "43", "40"};
  def.fragments = {{"We count the pile marked {n}.", 1.0},
                   {"Then we add the batch of {n}.", 1.0},
                   {"Next we remove the spare {n}.", 1.0}};
  wq.rules.push_back(def);
  return wq;
}

inline SimulatedWorld flat_world(double p, int steps = 3, int spp = 1, std::uint64_t seed = 7) {
  SimulatedWorld w;
  w.rng_seed = seed;
  w.questions.push_back(flat_question("q", p, steps, spp));
  return w;
}

// Default p = 0.5; a "good path" fragment locks in p = 1, a "bad path" one p = 0.
inline SimulatedWorld forked_world(std::uint64_t seed = 11) {
  SimulatedWorld w;
  w.rng_seed = seed;
  WorldQuestion wq = flat_question("q", 0.5, 4, 1);
  wq.rules[0].fragments.push_back({"We take the good path here.", 1.0});
  wq.rules[0].fragments.push_back({"We take the bad path here.", 1.0});
  BranchRule good;
  good.pattern = "good path";
  good.p_correct = 1.0;
  good.fragments = {{"Everything checks out.", 1.0}};
  BranchRule bad;
  bad.pattern = "bad path";
  bad.p_correct = 0.0;
  bad.fragments = {{"Something is off.", 1.0}};
  wq.rules.push_back(good);
  wq.rules.push_back(bad);
  w.questions.push_back(wq);
  return w;
}

// Returns fixed texts in rotation; optionally fails after a number of calls.
class ScriptedGenerator : public Generator {
 public:
  explicit ScriptedGenerator(std::vector<std::string> texts, int fail_after_calls = -1)
      : texts_(std::move(texts)), fail_after_(fail_after_calls) {}
  bool supports_logprobs() const override { return false; }
  int calls() const { return calls_; }

 protected:
  GeneratedBatch do_generate(const Prompt&, const GenerationConfig& config) override {
    if (fail_after_ >= 0 && calls_ >= fail_after_) throw TransportError("connection refused", 3);
    ++calls_;
    GeneratedBatch b;
    for (int i = 0; i < config.n; ++i) {
      Completion c;
      c.text = texts_[next_++ % texts_.size()];
      c.tokens = whitespace_tokenize(c.text);
      b.completions.push_back(std::move(c));
    }
    return b;
  }

 private:
  std::vector<std::string> texts_;
  int fail_after_;
  int calls_ = 0;
  std::size_t next_ = 0;
};

inline Completion completion_of(const std::string& text) {
  Completion c;
  c.text = text;
  c.tokens = whitespace_tokenize(text);
  return c;
}

}  // namespace finece::testing
