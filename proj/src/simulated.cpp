#include "finece/simulated.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <unordered_map>

#include "rng.hpp"

namespace finece {

namespace {

constexpr std::string_view kPlaceholder = "{n}";

std::string strip_placeholder(std::string_view text) {
  std::string out(text);
  for (auto pos = out.find(kPlaceholder); pos != std::string::npos; pos = out.find(kPlaceholder))
    out.erase(pos, kPlaceholder.size());
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool has_answer_marker(std::string_view text) {
  return lower(text).find("answer is") != std::string::npos;
}

std::string first_token(std::string_view text) {
  auto toks = whitespace_tokenize(text);
  return toks.empty() ? std::string() : toks.front();
}

// Aggregates (token, probability) pairs by token, sorted by probability
// (descending, then token) and converted to log space.
std::vector<TokenAlternative> aggregate(const std::vector<std::pair<std::string, double>>& items) {
  std::vector<std::pair<std::string, double>> merged;
  for (const auto& [tok, p] : items) {
    if (p <= 0.0) continue;
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const auto& m) { return m.first == tok; });
    if (it == merged.end())
      merged.emplace_back(tok, p);
    else
      it->second += p;
  }
  double total = 0.0;
  for (const auto& m : merged) total += m.second;
  std::stable_sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<TokenAlternative> out;
  for (const auto& [tok, p] : merged) out.push_back({tok, std::min(0.0, std::log(p / total))});
  return out;
}

}  // namespace

int count_sentences(std::string_view text) {
  int n = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))) ++n;
  }
  return n;
}

std::size_t active_rule(const WorldQuestion& q, std::string_view text) {
  std::size_t best = 0;
  bool found = false;
  std::size_t best_end = 0, best_len = 0;
  for (std::size_t r = 0; r < q.rules.size(); ++r) {
    const auto& pat = q.rules[r].pattern;
    if (pat.empty()) {
      if (!found) best = r;
      continue;
    }
    auto pos = text.rfind(pat);
    if (pos == std::string_view::npos) continue;
    std::size_t end = pos + pat.size();
    if (!found || end > best_end || (end == best_end && pat.size() > best_len)) {
      found = true;
      best = r;
      best_end = end;
      best_len = pat.size();
    }
  }
  if (!found) {
    for (std::size_t r = 0; r < q.rules.size(); ++r)
      if (q.rules[r].pattern.empty()) return r;
  }
  return best;
}

void SimulatedWorld::validate() const {
  std::map<std::string, int, std::less<>> seen;
  for (const auto& wq : questions) {
    wq.question.validate();
    if (seen[wq.question.id]++ > 0) throw ConfigError("duplicate question id '" + wq.question.id + "'");
    if (wq.steps < 0) throw ConfigError("question '" + wq.question.id + "': negative steps");
    if (wq.sentences_per_paragraph < 1)
      throw ConfigError("question '" + wq.question.id + "': sentences_per_paragraph < 1");
    const BranchRule* def = nullptr;
    for (const auto& r : wq.rules)
      if (r.pattern.empty()) def = &r;
    if (!def) throw ConfigError("question '" + wq.question.id + "' has no default rule");
    if (def->distractors.empty())
      throw ConfigError("question '" + wq.question.id + "': default rule needs distractors");
    if (wq.steps > 0 && def->fragments.empty())
      throw ConfigError("question '" + wq.question.id + "': default rule needs fragments");
    for (const auto& r : wq.rules) {
      if (!(r.p_correct >= 0.0 && r.p_correct <= 1.0))
        throw ConfigError("question '" + wq.question.id + "': p_correct outside [0, 1]");
      for (const auto& d : r.distractors)
        if (match_answer(d, wq.question.gold_answer, wq.question.matcher_kind))
          throw ConfigError("question '" + wq.question.id + "': distractor '" + d +
                            "' matches the gold answer");
      for (const auto& f : r.fragments) {
        if (!(f.weight > 0.0)) throw ConfigError("fragment weight must be positive");
        std::string plain = strip_placeholder(f.text);
        if (count_sentences(plain) != 1 || !(plain.ends_with('.') || plain.ends_with('!') ||
                                             plain.ends_with('?')))
          throw ConfigError("fragment '" + f.text + "' must be exactly one sentence");
        if (std::isspace(static_cast<unsigned char>(plain.front())))
          throw ConfigError("fragment '" + f.text + "' starts with whitespace");
        if (has_answer_marker(plain))
          throw ConfigError("fragment '" + f.text + "' contains the answer marker");
      }
    }
  }
}

const WorldQuestion& SimulatedWorld::find(std::string_view question_id) const {
  for (const auto& q : questions)
    if (q.question.id == question_id) return q;
  throw ConfigError("simulated world has no question '" + std::string(question_id) + "'");
}

std::vector<Question> SimulatedWorld::question_list() const {
  std::vector<Question> out;
  for (const auto& q : questions) out.push_back(q.question);
  return out;
}

namespace detail {

// Per-question tables derived from the world description.
struct CompiledQuestion {
  const WorldQuestion* source = nullptr;
  std::vector<const std::vector<FragmentSpec>*> fragments;   // per rule, after inheritance
  std::vector<const std::vector<std::string>*> distractors;  // per rule, after inheritance
  std::vector<double> weight_total;                          // per rule
  std::vector<std::vector<std::size_t>> transition;          // [rule][fragment] -> rule
  std::vector<std::vector<double>> value;                    // [remaining][rule]

  explicit CompiledQuestion(const WorldQuestion& q) : source(&q) {
    const auto& def = q.rules[active_rule(q, "")];
    for (const auto& r : q.rules) {
      fragments.push_back(r.fragments.empty() ? &def.fragments : &r.fragments);
      distractors.push_back(r.distractors.empty() ? &def.distractors : &r.distractors);
      double w = 0.0;
      for (const auto& f : *fragments.back()) w += f.weight;
      weight_total.push_back(w);
    }
    for (std::size_t r = 0; r < q.rules.size(); ++r) {
      std::vector<std::size_t> row;
      for (const auto& f : *fragments[r]) {
        std::string plain = strip_placeholder(f.text);
        bool hit = false;
        for (const auto& rule : q.rules)
          if (!rule.pattern.empty() && plain.find(rule.pattern) != std::string::npos) hit = true;
        row.push_back(hit ? active_rule(q, plain) : r);
      }
      transition.push_back(std::move(row));
    }
    // Backward induction over the remaining number of fragments.
    std::vector<double> v0;
    for (const auto& r : q.rules) v0.push_back(r.p_correct);
    value.push_back(std::move(v0));
    for (int t = 1; t <= q.steps; ++t) {
      const auto& prev = value.back();
      std::vector<double> next(prev.size(), 0.0);
      for (std::size_t r = 0; r < prev.size(); ++r) {
        const auto& frs = *fragments[r];
        for (std::size_t f = 0; f < frs.size(); ++f)
          next[r] += frs[f].weight / weight_total[r] * prev[transition[r][f]];
      }
      value.push_back(std::move(next));
    }
  }

  double value_at(int remaining, std::size_t rule) const {
    return value[static_cast<std::size_t>(remaining)][rule];
  }

  double true_confidence(std::string_view prefix) const {
    const auto& q = source->question;
    if (has_answer_marker(prefix))
      return match_answer(extract_final_answer(prefix), q.gold_answer, q.matcher_kind) ? 1.0 : 0.0;
    int remaining = std::max(0, source->steps - count_sentences(prefix));
    return value_at(remaining, active_rule(*source, prefix));
  }
};

}  // namespace detail

double SimulatedWorld::true_confidence(std::string_view question_id, std::string_view prefix) const {
  return detail::CompiledQuestion(find(question_id)).true_confidence(prefix);
}

SimulatedGenerator::SimulatedGenerator(SimulatedWorld world) : world_(std::move(world)) {
  world_.validate();
  compiled_.reserve(world_.questions.size());
  for (std::size_t i = 0; i < world_.questions.size(); ++i) {
    compiled_.emplace_back(world_.questions[i]);
    index_.emplace(world_.questions[i].question.id, i);
  }
}

SimulatedGenerator::~SimulatedGenerator() = default;

const detail::CompiledQuestion& SimulatedGenerator::compiled(std::string_view question_id) const {
  auto it = index_.find(question_id);
  if (it == index_.end())
    throw ConfigError("simulated world has no question '" + std::string(question_id) + "'");
  return compiled_[it->second];
}

double SimulatedGenerator::true_confidence(std::string_view question_id,
                                           std::string_view prefix) const {
  return compiled(question_id).true_confidence(prefix);
}

std::uint64_t SimulatedGenerator::next_call_seed(const Prompt& prompt,
                                                 const GenerationConfig& config) {
  std::uint64_t base = config.seed ? static_cast<std::uint64_t>(*config.seed) : world_.rng_seed;
  std::uint64_t qhash = detail::fnv1a(prompt.question_id);
  std::uint64_t phash = detail::fnv1a(prompt.answer_prefix);
  std::uint64_t key = detail::mix(qhash, phash);
  std::uint64_t ordinal;
  {
    std::lock_guard lock(ordinal_mutex_);
    ordinal = ordinals_[key]++;
  }
  return detail::mix(detail::mix(detail::mix(base, qhash), phash), ordinal);
}

GeneratedBatch SimulatedGenerator::do_generate(const Prompt& prompt,
                                               const GenerationConfig& config) {
  const auto& q = compiled(prompt.question_id);
  std::uint64_t call_seed = next_call_seed(prompt, config);
  GeneratedBatch batch;
  batch.completions.reserve(static_cast<std::size_t>(config.n));
  for (int i = 0; i < config.n; ++i)
    batch.completions.push_back(sample(q, prompt.answer_prefix,
                                       detail::mix(call_seed, static_cast<std::uint64_t>(i)),
                                       config, nullptr));
  return batch;
}

Completion SimulatedGenerator::do_stream(const Prompt& prompt, const GenerationConfig& config,
                                         const TokenSink& sink) {
  const auto& q = compiled(prompt.question_id);
  std::uint64_t call_seed = next_call_seed(prompt, config);
  return sample(q, prompt.answer_prefix, detail::mix(call_seed, 0), config,
                &sink);
}

Completion SimulatedGenerator::sample(const detail::CompiledQuestion& q, std::string_view prefix,
                                      std::uint64_t sample_seed, const GenerationConfig& config,
                                      const TokenSink* sink) const {
  std::mt19937_64 rng(sample_seed);
  const WorldQuestion& wq = *q.source;
  const bool greedy = config.temperature <= 0.0;
  const bool want_lp = config.request_logprobs;
  const bool want_top = want_lp && config.top_logprobs_k > 0;

  Completion out;
  if (want_lp) out.token_logprobs.emplace();
  if (want_top) out.top_logprobs.emplace();
  bool stopped = false;

  // Appends a piece of text; `alts[i]` (when present) is the distribution at
  // the piece's i-th token, otherwise the token is a point mass.
  auto emit = [&](const std::string& piece,
                  const std::unordered_map<std::size_t, std::vector<TokenAlternative>>& alts) {
    if (stopped) return;
    auto toks = whitespace_tokenize(piece);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (out.tokens.size() >= static_cast<std::size_t>(config.max_tokens)) {
        stopped = true;
        return;
      }
      std::vector<TokenAlternative> dist;
      auto a = alts.find(i);
      if (a != alts.end())
        dist = a->second;
      else
        dist = {{toks[i], 0.0}};
      double lp = 0.0;
      for (const auto& d : dist)
        if (d.token == toks[i]) lp = d.logprob;
      if (want_top && dist.size() > static_cast<std::size_t>(config.top_logprobs_k))
        dist.resize(static_cast<std::size_t>(config.top_logprobs_k));
      out.text += toks[i];
      out.tokens.push_back(toks[i]);
      if (want_lp) out.token_logprobs->push_back(lp);
      if (want_top) out.top_logprobs->push_back(dist);
      if (sink) {
        StreamedToken st;
        st.index = out.tokens.size() - 1;
        st.token = out.tokens.back();
        if (want_lp) st.logprob = lp;
        if (want_top) st.alternatives = &out.top_logprobs->back();
        if (!(*sink)(st)) {
          stopped = true;
          return;
        }
      }
    }
  };

  const bool answered = has_answer_marker(prefix);
  std::size_t rule = active_rule(wq, prefix);
  int done = count_sentences(prefix);
  bool need_space = !prefix.empty() && !std::isspace(static_cast<unsigned char>(prefix.back()));

  auto separator = [&](int sentence_index) -> std::string {
    if (sentence_index == 0) return need_space ? " " : "";
    return sentence_index % wq.sentences_per_paragraph == 0 ? "\n\n" : " ";
  };

  if (!answered) {
    int remaining = std::max(0, wq.steps - done);
    for (int s = 0; s < remaining && !stopped; ++s) {
      const auto& frs = *q.fragments[rule];
      double total = q.weight_total[rule];
      std::size_t pick = 0;
      if (greedy) {
        for (std::size_t f = 1; f < frs.size(); ++f)
          if (frs[f].weight > frs[pick].weight) pick = f;
      } else {
        double u = detail::uniform01(rng) * total;
        double acc = 0.0;
        pick = frs.size() - 1;
        for (std::size_t f = 0; f < frs.size(); ++f) {
          acc += frs[f].weight;
          if (u < acc) {
            pick = f;
            break;
          }
        }
      }
      std::string sep = separator(done + s);
      std::string text = frs[pick].text;
      for (auto pos = text.find(kPlaceholder); pos != std::string::npos;
           pos = text.find(kPlaceholder)) {
        auto value = 10 + rng() % 99990;
        text.replace(pos, kPlaceholder.size(), std::to_string(value));
      }
      std::unordered_map<std::size_t, std::vector<TokenAlternative>> alts;
      if (want_lp) {
        std::vector<std::pair<std::string, double>> firsts;
        for (const auto& f : frs) firsts.emplace_back(first_token(sep + f.text), f.weight / total);
        alts[0] = aggregate(firsts);
      }
      emit(sep + text, alts);
      rule = q.transition[rule][pick];
    }

    if (!stopped) {
      const auto& dis = *q.distractors[rule];
      double p = q.value_at(0, rule);
      bool correct = greedy ? p >= 0.5 : detail::uniform01(rng) < p;
      std::string answer = correct ? wq.question.gold_answer
                                   : dis[greedy ? 0 : static_cast<std::size_t>(rng() % dis.size())];
      int idx = done + remaining;
      std::string sep = idx == 0 ? (need_space ? " " : "") : " ";
      std::string lead = sep + "The answer is";
      std::unordered_map<std::size_t, std::vector<TokenAlternative>> alts;
      if (want_lp) {
        std::vector<std::pair<std::string, double>> cands;
        cands.emplace_back(first_token(" " + wq.question.gold_answer + "."), p);
        for (const auto& d : dis)
          cands.emplace_back(first_token(" " + d + "."), (1.0 - p) / static_cast<double>(dis.size()));
        alts[whitespace_tokenize(lead).size()] = aggregate(cands);
      }
      emit(lead + " " + answer + ".", alts);
    }
  }

  out.finish_reason = stopped ? FinishReason::Length : FinishReason::Stop;
  return out;
}

SimulatedWorld synthesize_world(const WorldSynthesisOptions& options) {
  // Equal-length sentences keep paragraph token shares steady.
  static const std::array<const char*, 8> kSteps = {
      "First we list the given quantities, including {n}.",
      "Next we combine the partial totals into {n}.",
      "We then double-check the running intermediate value {n}.",
      "Subtracting the known part leaves us with {n}.",
      "A quick estimate suggests a value near {n}.",
      "We isolate the unknown term and obtain {n}.",
      "Grouping the similar terms together then gives {n}.",
      "Carrying the remainder forward, this step yields {n}.",
  };
  static const std::array<const char*, 5> kNouns = {"apples", "tickets", "marbles", "books",
                                                     "coins"};
  std::mt19937_64 rng(detail::mix(options.seed, 0x5eed));
  SimulatedWorld world;
  world.rng_seed = options.seed;
  for (int i = 0; i < options.questions; ++i) {
    WorldQuestion wq;
    int a = 10 + static_cast<int>(rng() % 90);
    int b = 10 + static_cast<int>(rng() % 90);
    const char* noun = kNouns[rng() % kNouns.size()];
    char id[32];
    std::snprintf(id, sizeof(id), "q%03d", i);
    wq.question.id = id;
    wq.question.text = "A shop has " + std::to_string(a) + " " + noun + " and receives " +
                       std::to_string(b) + " more. How many " + noun + " are there now?";
    wq.question.gold_answer = std::to_string(a + b);
    wq.question.matcher_kind = MatcherKind::NumericFinalAnswer;
    wq.steps = options.steps;
    wq.sentences_per_paragraph = options.sentences_per_paragraph;

    double base = 0.1 + 0.1 * static_cast<double>(rng() % 9);
    BranchRule def;
    def.p_correct = base;
    for (int d : {-2, -1, 1, 2, 10}) def.distractors.push_back(std::to_string(a + b + d));
    for (const char* s : kSteps) def.fragments.push_back({s, 1.0});
    def.fragments.push_back({"We do a careful check and confirm {n}.", 1.0});
    def.fragments.push_back({"We just make a rough guess around {n}.", 1.0});

    BranchRule careful;
    careful.pattern = "careful check";
    careful.p_correct = std::min(1.0, base + 0.3);
    BranchRule rough;
    rough.pattern = "rough guess";
    rough.p_correct = std::max(0.0, base - 0.3);
    for (const char* s : kSteps) {
      careful.fragments.push_back({s, 1.0});
      rough.fragments.push_back({s, 1.0});
    }
    wq.rules = {def, careful, rough};
    world.questions.push_back(std::move(wq));
  }
  return world;
}

SimulatedWorld synthesize_walk_world(int questions, std::uint64_t seed, int steps) {
  static const std::array<const char*, 11> kLevels = {"zero", "one", "two",   "three",
                                                      "four", "five", "six", "seven",
                                                      "eight", "nine", "ten"};
  auto marker = [](int level) { return std::string("at level ") + kLevels[level] + ","; };
  auto fragment = [&](int level) {
    return "Checking case {n} leaves us " + marker(level) + " so we continue.";
  };
  std::mt19937_64 rng(detail::mix(seed, 0x3a1c));
  SimulatedWorld world;
  world.rng_seed = seed;
  for (int i = 0; i < questions; ++i) {
    WorldQuestion wq;
    int gold = 100 + static_cast<int>(rng() % 900);
    char id[32];
    std::snprintf(id, sizeof(id), "w%03d", i);
    wq.question.id = id;
    wq.question.text = "Trace the walk for puzzle " + std::to_string(i) + " and report its code.";
    wq.question.gold_answer = std::to_string(gold);
    wq.steps = steps;
    wq.sentences_per_paragraph = 1;

    BranchRule def;
    def.p_correct = 0.5;
    for (int d : {1, 2, 3, 4}) def.distractors.push_back(std::to_string(gold + d));
    for (int level = 1; level <= 9; ++level) def.fragments.push_back({fragment(level), 1.0});
    wq.rules.push_back(def);
    for (int level = 0; level <= 10; ++level) {
      BranchRule r;
      r.pattern = marker(level);
      r.p_correct = level / 10.0;
      if (level == 0 || level == 10) {
        r.fragments.push_back({fragment(level), 1.0});
      } else {
        r.fragments.push_back({fragment(level - 1), 1.0});
        r.fragments.push_back({fragment(level), 1.0});
        r.fragments.push_back({fragment(level + 1), 1.0});
      }
      wq.rules.push_back(std::move(r));
    }
    world.questions.push_back(std::move(wq));
  }
  return world;
}

}  // namespace finece
