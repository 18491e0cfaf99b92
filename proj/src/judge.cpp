#include "soei/judge.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "soei/error.hpp"
#include "soei/json_io.hpp"
#include "soei/stats.hpp"
#include "soei/text_util.hpp"

namespace soei {

// ---------------------------------------------------------------------------
// Rubric
// ---------------------------------------------------------------------------

void validate_rubric(const RubricCriteria& rubric) {
  std::size_t criteria = 0;
  for (const auto& d : rubric.dimensions) {
    if (d.name.empty() || d.instruction.empty()) {
      throw Error(ErrorCode::InvalidArgument, "rubric dimension needs a name and an instruction");
    }
    criteria += d.criteria.size();
  }
  if (rubric.dimensions.size() != 4 || criteria != 15) {
    throw Error(ErrorCode::InvalidArgument, "rubric must have 4 dimensions and 15 criteria, got " +
                                                std::to_string(rubric.dimensions.size()) + " and " +
                                                std::to_string(criteria));
  }
}

RubricCriteria load_rubric(const std::filesystem::path& path) {
  auto j = read_json_file(path);
  RubricCriteria r;
  try {
    r.version = j.value("version", std::string{});
    for (const auto& d : j.at("dimensions")) {
      RubricDimension dim{d.at("name").get<std::string>(), d.at("instruction").get<std::string>(), {}};
      for (const auto& c : d.value("criteria", json::array())) {
        dim.criteria.push_back({c.at("name").get<std::string>(), c.at("text").get<std::string>()});
      }
      r.dimensions.push_back(std::move(dim));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  validate_rubric(r);
  return r;
}

std::string render_rubric(const RubricCriteria& rubric) {
  std::ostringstream out;
  for (const auto& d : rubric.dimensions) {
    out << "- " << d.instruction << '\n';
    for (const auto& c : d.criteria) out << "    - " << c.name << ": " << c.text << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

namespace {

std::optional<std::pair<std::string, std::string>> label_value(const std::string& line) {
  auto pos = line.find(':');
  if (pos == std::string::npos || pos == 0) return std::nullopt;
  return std::pair{text::normalize_label(line.substr(0, pos)),
                   std::string(text::trim(std::string_view(line).substr(pos + 1)))};
}

// Lowercases and strips quotes, trailing punctuation and bracketed glosses.
std::string clean_value(std::string_view v) {
  std::string s(text::trim(v));
  if (auto paren = s.find('('); paren != std::string::npos && paren > 0) s.resize(paren);
  while (!s.empty() && std::string_view(".,;\"'`").find(s.back()) != std::string_view::npos) s.pop_back();
  while (!s.empty() && std::string_view("\"'`").find(s.front()) != std::string_view::npos) s.erase(0, 1);
  return text::normalize_label(text::trim(s));
}

template <typename T>
std::optional<T> lookup(const std::map<std::string, T>& table, std::string_view label) {
  auto it = table.find(clean_value(label));
  return it == table.end() ? std::nullopt : std::optional<T>(it->second);
}

}  // namespace

std::vector<std::optional<RealnessItem>> parse_realness_answer(std::string_view raw, std::size_t expected) {
  static const std::regex kHeader(R"(^\[?\s*question\s*(\d+)\s*\]?\s*[:.]?\s*(.*)$)", std::regex::icase);
  static const std::regex kVerdict(R"(^([12])(?:\s*$|\s*[(.,;\s-].*$))");
  std::vector<std::optional<RealnessItem>> out(expected);
  std::vector<bool> seen(expected, false);

  std::optional<std::size_t> current;
  RealnessItem item;
  bool have_verdict = false;
  bool in_rationale = false;
  auto flush = [&] {
    if (current && have_verdict && *current < expected && !seen[*current]) out[*current] = item;
    if (current && *current < expected) seen[*current] = true;
    current.reset();
    item = {};
    have_verdict = false;
    in_rationale = false;
  };

  for (auto raw_line : text::split_lines(raw)) {
    auto line = text::strip_markdown(raw_line);
    if (line.empty()) {
      in_rationale = false;
      continue;
    }
    std::smatch m;
    if (std::regex_match(line, m, kHeader)) {
      flush();
      auto n = std::stoul(m[1].str());
      if (n >= 1) current = n - 1;
      line = m[2].str();
      if (line.empty()) continue;
    }
    if (!current) continue;
    auto lv = label_value(line);
    if (lv && (lv->first == "chain of thought reasoning" || lv->first == "chain of thought" ||
               lv->first == "reasoning" || lv->first == "rationale")) {
      item.rationale = lv->second;
      in_rationale = true;
    } else if (lv && lv->first == "compliance") {
      std::smatch v;
      if (!have_verdict && std::regex_match(lv->second, v, kVerdict)) {
        item.compliant = v[1].str() == "1";
        have_verdict = true;
      } else {
        // a second or unreadable verdict makes the block ambiguous
        have_verdict = false;
        current = expected;  // poison: flush will drop it
      }
      in_rationale = false;
    } else if (in_rationale) {
      item.rationale += ' ';
      item.rationale += line;
    }
  }
  flush();
  return out;
}

std::optional<BloomLevel> bloom_from_label(std::string_view label) {
  static const std::map<std::string, BloomLevel> kAliases = {
      {"remember", BloomLevel::Remember},     {"remembering", BloomLevel::Remember},
      {"recall", BloomLevel::Remember},       {"knowledge", BloomLevel::Remember},
      {"understand", BloomLevel::Understand}, {"understanding", BloomLevel::Understand},
      {"comprehension", BloomLevel::Understand},
      {"apply", BloomLevel::Apply},           {"applying", BloomLevel::Apply},
      {"application", BloomLevel::Apply},
      {"analyze", BloomLevel::Analyze},       {"analyse", BloomLevel::Analyze},
      {"analyzing", BloomLevel::Analyze},     {"analysing", BloomLevel::Analyze},
      {"analysis", BloomLevel::Analyze},
      {"evaluate", BloomLevel::Evaluate},     {"evaluating", BloomLevel::Evaluate},
      {"evaluation", BloomLevel::Evaluate},
      {"create", BloomLevel::Create},         {"creating", BloomLevel::Create},
      {"synthesis", BloomLevel::Create},
  };
  return lookup(kAliases, label);
}

std::optional<TeacherAct> teacher_act_from_label(std::string_view label) {
  static const std::map<std::string, TeacherAct> kAliases = {
      {"lecture", TeacherAct::Lecture},
      {"lecturing", TeacherAct::Lecture},
      {"instruction", TeacherAct::Directive},
      {"instructions", TeacherAct::Directive},
      {"instructing", TeacherAct::Directive},
      {"directive", TeacherAct::Directive},
      {"giving directions", TeacherAct::Directive},
      {"direction", TeacherAct::Directive},
      {"questioning", TeacherAct::Questioning},
      {"question", TeacherAct::Questioning},
      {"asking questions", TeacherAct::Questioning},
      {"accepting suggestions", TeacherAct::AcceptingSuggestions},
      {"accept suggestions", TeacherAct::AcceptingSuggestions},
      {"accepting ideas", TeacherAct::AcceptingSuggestions},
      {"accepting student ideas", TeacherAct::AcceptingSuggestions},
      {"positive reinforcement", TeacherAct::PositiveReinforcement},
      {"praise", TeacherAct::PositiveReinforcement},
      {"praising", TeacherAct::PositiveReinforcement},
      {"encouragement", TeacherAct::PositiveReinforcement},
      {"encouraging", TeacherAct::PositiveReinforcement},
      {"emotional expression", TeacherAct::EmotionalExpression},
      {"expressing emotion", TeacherAct::EmotionalExpression},
      {"accepting feelings", TeacherAct::EmotionalExpression},
      {"criticism", TeacherAct::Criticism},
      {"criticizing", TeacherAct::Criticism},
      {"criticising", TeacherAct::Criticism},
  };
  return lookup(kAliases, label);
}

std::optional<StudentAct> student_act_from_label(std::string_view label) {
  static const std::map<std::string, StudentAct> kAliases = {
      {"correct answer", StudentAct::CorrectAnswer},
      {"correct", StudentAct::CorrectAnswer},
      {"correct response", StudentAct::CorrectAnswer},
      {"incorrect answer", StudentAct::IncorrectAnswer},
      {"incorrect", StudentAct::IncorrectAnswer},
      {"incorrect response", StudentAct::IncorrectAnswer},
      {"wrong answer", StudentAct::IncorrectAnswer},
      {"repeated answer", StudentAct::RepeatedAnswer},
      {"repeated", StudentAct::RepeatedAnswer},
      {"repetition", StudentAct::RepeatedAnswer},
      {"spontaneous question", StudentAct::SpontaneousQuestion},
      {"student question", StudentAct::SpontaneousQuestion},
      {"spontaneous questioning", StudentAct::SpontaneousQuestion},
      {"irrelevant response", StudentAct::IrrelevantResponse},
      {"irrelevant answer", StudentAct::IrrelevantResponse},
      {"irrelevant", StudentAct::IrrelevantResponse},
      {"off topic", StudentAct::IrrelevantResponse},
      {"invalid utterance", StudentAct::InvalidUtterance},
      {"invalid", StudentAct::InvalidUtterance},
      {"invalid response", StudentAct::InvalidUtterance},
      {"no response", StudentAct::NoResponse},
      {"no answer", StudentAct::NoResponse},
      {"silence", StudentAct::NoResponse},
  };
  return lookup(kAliases, label);
}

AnnotationLabels parse_annotation(std::string_view raw, Role role) {
  std::map<std::string, std::string> fields;
  for (auto raw_line : text::split_lines(raw)) {
    auto lv = label_value(text::strip_markdown(raw_line));
    if (!lv) continue;
    auto key = lv->first;
    if (key == "bloom" || key == "bloom level" || key == "bloom's level" || key == "cognitive level") key = "bloom";
    if (key == "teacher behavior" || key == "teacher behaviour") key = "teacher act";
    if (key == "student behavior" || key == "student behaviour") key = "student act";
    fields.emplace(key, lv->second);
  }
  auto fail = [&](const std::string& why) -> AnnotationLabels {
    throw Error(ErrorCode::AnnotationFailure, why + "; raw output: " + std::string(raw));
  };
  auto field = [&](const std::string& key) -> std::string {
    auto it = fields.find(key);
    if (it == fields.end()) fail("missing \"" + key + "\" line");
    return it->second;
  };
  if (role == Role::Student) {
    auto v = field("student act");
    auto act = student_act_from_label(v);
    if (!act) return fail("unknown student act '" + v + "'");
    return StudentLabels{*act};
  }
  auto b = field("bloom"), q = field("question type"), t = field("teacher act");
  auto bloom = bloom_from_label(b);
  if (!bloom) return fail("unknown Bloom level '" + b + "'");
  auto qt = question_type_from_label(clean_value(q));
  if (!qt) return fail("unknown question type '" + q + "'");
  auto act = teacher_act_from_label(t);
  if (!act) return fail("unknown teacher act '" + t + "'");
  return TeacherLabels{*bloom, *qt, *act};
}

std::vector<TraitCode> parse_ranking(std::string_view raw) {
  auto fail = [&](const std::string& why) -> std::vector<TraitCode> {
    throw Error(ErrorCode::RankParseFailure, why + "; raw output: " + std::string(raw));
  };
  std::optional<std::string> candidate;
  for (auto raw_line : text::split_lines(raw)) {
    auto line = text::strip_markdown(raw_line);
    auto lv = label_value(line);
    if (lv && lv->first == "ranking") {
      candidate = lv->second;
      break;
    }
    if (!candidate && line.find('>') != std::string::npos) candidate = line;
  }
  if (!candidate) return fail("no ranking line");
  std::vector<TraitCode> ranking;
  std::stringstream ss(*candidate);
  for (std::string part; std::getline(ss, part, '>');) {
    std::string token(text::trim(part));
    static const std::regex kEnumerator(R"(^\d+\s*[.)]\s*)");
    token = std::regex_replace(token, kEnumerator, "");
    if (auto paren = token.find('('); paren != std::string::npos) token.resize(paren);
    while (!token.empty() && std::string_view(".,;\"'").find(token.back()) != std::string_view::npos) token.pop_back();
    auto trait = parse_trait(text::trim(token));
    if (!trait) return fail("unknown personality '" + std::string(text::trim(token)) + "'");
    if (std::find(ranking.begin(), ranking.end(), *trait) != ranking.end()) {
      return fail("personality " + std::string(to_string(*trait)) + " listed twice");
    }
    ranking.push_back(*trait);
  }
  if (ranking.empty() || ranking.size() > 5) return fail("ranking must list 1 to 5 personalities");
  return ranking;
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

JudgePrompts load_judge_prompts(const std::filesystem::path& dir) {
  return JudgePrompts{load_template(dir, "judge_realness_system"), load_template(dir, "judge_realness_user"),
                      load_template(dir, "judge_realness_reask"),  load_template(dir, "judge_annotate"),
                      load_template(dir, "judge_annotate_reask"),  load_template(dir, "judge_rank"),
                      load_template(dir, "judge_rank_reask"),      load_template(dir, "judge_sentiment")};
}

std::string format_turns(const std::vector<DialogueTurn>& turns) {
  std::ostringstream out;
  for (const auto& t : turns) out << to_string(t.role) << ": " << t.text << '\n';
  return out.str();
}

Judge::Judge(std::shared_ptr<ChatBackend> backend, BackendConfig cfg, JudgePrompts prompts, std::string evaluator_id)
    : backend_(std::move(backend)), cfg_(std::move(cfg)), prompts_(std::move(prompts)),
      evaluator_id_(std::move(evaluator_id)) {
  if (!backend_) throw Error(ErrorCode::InvalidArgument, "judge requires a backend");
}

std::string Judge::ask(const std::vector<ChatMessage>& messages) {
  try {
    return backend_->chat(cfg_, messages).content;
  } catch (const Error& e) {
    throw Error(ErrorCode::JudgeUnavailable,
                "judge backend failed (" + std::string(to_string(e.code())) + "): " + e.what());
  }
}

std::vector<Verdict> Judge::judge_realness_batch(const std::vector<DialoguePair>& dialogues,
                                                 const RubricCriteria& rubric, int batch_size) {
  if (dialogues.empty()) throw Error(ErrorCode::InvalidArgument, "no dialogues to judge");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
  validate_rubric(rubric);
  const auto rubric_text = render_rubric(rubric);
  std::vector<Verdict> out;
  out.reserve(dialogues.size());
  for (std::size_t start = 0; start < dialogues.size(); start += batch_size) {
    auto end = std::min(dialogues.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<DialoguePair> batch(dialogues.begin() + start, dialogues.begin() + end);
    auto verdicts = judge_one_batch(batch, start, rubric_text);
    out.insert(out.end(), verdicts.begin(), verdicts.end());
  }
  return out;
}

std::vector<Verdict> Judge::judge_one_batch(const std::vector<DialoguePair>& batch, std::size_t offset,
                                            const std::string& rubric_text) {
  std::ostringstream dialogues;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i) dialogues << '\n';
    dialogues << "Dialogue " << (i + 1) << ":\nTeacher: " << batch[i].teacher_text
              << "\nStudent: " << batch[i].student_text << '\n';
  }
  const auto count = std::to_string(batch.size());
  std::vector<ChatMessage> messages = {
      {ChatRole::System,
       prompts_.realness_system.render({{"count", count}, {"rubric", rubric_text}, {"dialogues", dialogues.str()}})},
      {ChatRole::User, prompts_.realness_user.render({{"count", count}})}};

  auto raw = ask(messages);
  auto parsed = parse_realness_answer(raw, batch.size());
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (!parsed[i]) failed.push_back(std::to_string(i + 1));
  }
  if (!failed.empty()) {
    messages.push_back({ChatRole::Assistant, raw.empty() ? std::string("(no answer)") : raw});
    messages.push_back(
        {ChatRole::User, prompts_.realness_reask.render({{"failed", text::join(failed, ", ")}, {"count", count}})});
    auto retry = parse_realness_answer(ask(messages), batch.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      if (!parsed[i]) parsed[i] = retry[i];
    }
  }

  std::vector<Verdict> out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Verdict v;
    v.sample_id = batch[i].sample_id.empty() ? std::to_string(offset + i + 1) : batch[i].sample_id;
    v.evaluator_id = evaluator_id_;
    v.evaluator_kind = EvaluatorKind::Model;
    if (parsed[i]) {
      v.compliant = parsed[i]->compliant;
      v.rationale = parsed[i]->rationale;
    } else {
      v.valid = false;
      v.rationale = "parse failure: no readable verdict for question " + std::to_string(i + 1);
    }
    out.push_back(std::move(v));
  }
  return out;
}

AnnotationLabels Judge::annotate_turn(const std::vector<DialogueTurn>& context, const DialogueTurn& target) {
  auto it = std::find_if(context.begin(), context.end(), [&](const DialogueTurn& t) {
    return t.index == target.index && t.role == target.role && t.text == target.text;
  });
  if (it == context.end()) throw Error(ErrorCode::InvalidArgument, "annotation target is not in the context window");
  const std::string format = target.role == Role::Teacher
                                 ? "Bloom Level: <value>\nQuestion Type: <value>\nTeacher Act: <value>"
                                 : "Student Act: <value>";
  const std::string role = target.role == Role::Teacher ? "teacher" : "student";
  std::vector<ChatMessage> messages = {
      {ChatRole::User, prompts_.annotate.render({{"role", role},
                                                 {"context", format_turns(context)},
                                                 {"target", target.text},
                                                 {"format", format}})}};
  auto raw = ask(messages);
  try {
    return parse_annotation(raw, target.role);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AnnotationFailure) throw;
  }
  messages.push_back({ChatRole::Assistant, raw.empty() ? std::string("(no answer)") : raw});
  messages.push_back({ChatRole::User, prompts_.annotate_reask.render({{"format", format}})});
  return parse_annotation(ask(messages), target.role);
}

RankingPrediction Judge::rank_personality(const std::vector<DialogueTurn>& context, TraitCode truth) {
  if (context.empty() || context.back().role != Role::Student) {
    throw Error(ErrorCode::InvalidArgument, "ranking context must end with a student turn");
  }
  std::ostringstream candidates;
  for (auto code : kAllTraits) {
    const auto& info = trait_info(code);
    candidates << "- " << to_string(code) << " (" << info.display_name << "): " << info.description << '\n';
  }
  std::vector<ChatMessage> messages = {
      {ChatRole::User,
       prompts_.rank.render({{"candidates", candidates.str()}, {"context", format_turns(context)}})}};
  auto raw = ask(messages);
  std::vector<TraitCode> ranking;
  try {
    ranking = parse_ranking(raw);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankParseFailure) throw;
    messages.push_back({ChatRole::Assistant, raw.empty() ? std::string("(no answer)") : raw});
    messages.push_back({ChatRole::User, prompts_.rank_reask.render({})});
    ranking = parse_ranking(ask(messages));
  }
  RankingPrediction p;
  p.turn_index = context.back().index;
  p.ranking = std::move(ranking);
  p.truth = truth;
  p.score = stats::ranking_score(p.ranking, truth);
  return p;
}

// ---------------------------------------------------------------------------
// Multiple choice
// ---------------------------------------------------------------------------

void validate_mc_item(const McItem& item) {
  if (item.id.empty()) throw Error(ErrorCode::InvalidArgument, "MC item needs an id");
  if (item.options.size() != 4 || !item.options.count('A') || !item.options.count('B') || !item.options.count('C') ||
      !item.options.count('D')) {
    throw Error(ErrorCode::InvalidArgument, "MC item " + item.id + " must have exactly options A, B, C and D");
  }
  if (!item.options.count(item.correct)) {
    throw Error(ErrorCode::InvalidArgument, "MC item " + item.id + " has a correct answer outside its options");
  }
}

McScore score_mc(const std::vector<McItem>& items, const std::map<std::string, char>& answers) {
  if (items.empty()) throw Error(ErrorCode::InvalidArgument, "no MC items to score");
  std::map<std::string, const McItem*> by_id;
  for (const auto& item : items) {
    validate_mc_item(item);
    if (!by_id.emplace(item.id, &item).second) throw Error(ErrorCode::InvalidArgument, "duplicate MC item " + item.id);
  }
  for (const auto& [id, _] : answers) {
    if (!by_id.count(id)) throw Error(ErrorCode::UnknownItem, "answer for unknown item " + id);
  }
  McScore s;
  std::map<std::string, std::pair<int, int>> cats;
  for (const auto& item : items) {
    auto it = answers.find(item.id);
    const bool ok = it != answers.end() && it->second == item.correct;
    ++s.total;
    s.correct += ok ? 1 : 0;
    auto& c = cats[item.category];
    c.first += ok ? 1 : 0;
    ++c.second;
  }
  s.accuracy = static_cast<double>(s.correct) / s.total;
  double sum = 0.0;
  for (const auto& [name, c] : cats) {
    s.per_category[name] = static_cast<double>(c.first) / c.second;
    sum += s.per_category[name];
  }
  s.summary_average = sum / static_cast<double>(cats.size());
  return s;
}

}  // namespace soei
