#pragma once

// JSON and JSONL conversions for the on-disk formats.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "finece/core.hpp"
#include "finece/metrics.hpp"
#include "finece/pipeline.hpp"
#include "finece/simulated.hpp"

namespace finece {

using Json = nlohmann::ordered_json;

struct JsonLine {
  std::size_t line = 0;  // 1-based
  Json value;
};

// Non-blank lines of a JSONL file. Throws ConfigError naming the line on bad JSON.
std::vector<JsonLine> read_jsonl(const std::string& path);
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// {"id", "text", "gold_answer", "matcher"?}
Question question_from_json(const Json& j);
Json to_json(const Question& q);
std::vector<Question> read_questions(const std::string& path);

Json to_json(const SimulatedWorld& world);
SimulatedWorld world_from_json(const Json& j);

Json to_json(const CostLedger& ledger);
Json to_json(const SequenceState& seq);
Json to_json(const ConfidenceRecord& rec);
Json to_json(const TrainingExample& ex);
// Nodes, edges, confidences, samples and the ledger.
Json to_json(const AnswerTree& tree);

Json to_json(const MetricReport& report);
// lower,upper,mean_conf,acc,count
std::string bins_to_csv(const std::vector<ReliabilityBin>& bins);

// Compact single-line dump used for JSONL output.
std::string dump_line(const Json& j);

}  // namespace finece
