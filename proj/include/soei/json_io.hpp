#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "soei/domain.hpp"

namespace soei {

using json = nlohmann::json;

// Wire formats for domain values. Enums serialize as their code strings.
void to_json(json& j, TraitCode t);
void from_json(const json& j, TraitCode& t);
void to_json(json& j, InstructionalPhase p);
void from_json(const json& j, InstructionalPhase& p);
void to_json(json& j, QuestionType q);
void from_json(const json& j, QuestionType& q);
void to_json(json& j, Role r);
void from_json(const json& j, Role& r);

void to_json(json& j, const LinguisticConstraints& c);
void from_json(const json& j, LinguisticConstraints& c);
void to_json(json& j, const TaskTuple& t);
void from_json(const json& j, TaskTuple& t);
void to_json(json& j, const DialogueTurn& t);
void from_json(const json& j, DialogueTurn& t);
void to_json(json& j, const SurveyResponse& s);
void from_json(const json& j, SurveyResponse& s);
void to_json(json& j, const Session& s);
void from_json(const json& j, Session& s);
void to_json(json& j, const DatasetRecord& r);
void from_json(const json& j, DatasetRecord& r);
void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);
void to_json(json& j, const RankingPrediction& p);
void from_json(const json& j, RankingPrediction& p);
json labels_to_json(const AnnotationLabels& labels);

// Whole-file helpers. Throw Error(StorageFailure) on I/O problems.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
json read_json_file(const std::filesystem::path& path);
// Blank lines are skipped; a malformed line throws with its line number.
std::vector<json> read_jsonl_file(const std::filesystem::path& path);
std::vector<json> parse_jsonl(const std::string& content);

}  // namespace soei
