#include "soei/session_service.hpp"

#include <cmath>
#include <iostream>

#include "soei/error.hpp"
#include "soei/json_io.hpp"
#include "soei/stats.hpp"
#include "soei/text_util.hpp"

namespace soei {

struct SessionService::Entry {
  std::mutex mu;
  Session session;
  std::int64_t next_seq = 0;
  bool in_flight = false;

  std::mutex analysis_mu;
  std::optional<std::string> analysis;
};

SessionService::SessionService(ServiceConfig cfg, std::shared_ptr<ChatBackend> student, std::shared_ptr<Judge> judge)
    : cfg_(std::move(cfg)), student_(std::move(student)), judge_(std::move(judge)), store_(cfg_.data_dir),
      ids_(cfg_.clock) {
  if (!student_) throw Error(ErrorCode::InvalidArgument, "session service needs a student backend");
  if (cfg_.max_turns < 2) throw Error(ErrorCode::InvalidArgument, "max_turns must be at least 2");
  if (cfg_.history_pairs < 1 || cfg_.annotate_window < 1 || cfg_.rank_window_pairs < 1) {
    throw Error(ErrorCode::InvalidArgument, "context windows must be positive");
  }
  load_existing();
}

SessionService::~SessionService() = default;

void SessionService::load_existing() {
  for (const auto& idx : store_.index()) {
    try {
      auto events = store_.load(idx.id);
      auto entry = std::make_shared<Entry>();
      entry->session = fold_events(events);
      entry->next_seq = static_cast<std::int64_t>(events.size());
      sessions_[idx.id] = std::move(entry);
    } catch (const Error& e) {
      std::cerr << "warning: skipping session " << idx.id << ": " << e.what() << '\n';
    }
  }
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session " + session_id);
  return it->second;
}

void SessionService::persist(Entry& entry, EventKind kind, nlohmann::json payload) {
  SessionEvent ev{entry.next_seq, kind, std::move(payload), cfg_.clock()};
  Session next = entry.session;
  apply_event(next, ev, entry.next_seq);
  store_.append(next.id, ev);
  entry.session = std::move(next);
  ++entry.next_seq;
}

Session SessionService::create_session(const std::string& teacher_id, const std::string& trait,
                                       const std::string& content_ref, const std::string& backend_label) {
  if (teacher_id.empty()) throw Error(ErrorCode::InvalidArgument, "teacher_id is required");
  const auto code = parse_trait_or_throw(trait);
  auto entry = std::make_shared<Entry>();
  entry->session.id = ids_.next();
  persist(*entry, EventKind::Created,
          {{"id", entry->session.id},
           {"teacher_id", teacher_id},
           {"trait", code},
           {"content_ref", content_ref},
           {"backend_label", backend_label}});
  store_.add_to_index({entry->session.id, teacher_id, code, cfg_.clock()});
  std::lock_guard lock(mutex_);
  sessions_[entry->session.id] = entry;
  return entry->session;
}

DialogueTurn SessionService::post_teacher_turn(const std::string& session_id, const std::string& body) {
  auto e = find(session_id);
  std::unique_lock lock(e->mu);
  if (e->in_flight) throw Error(ErrorCode::TurnInFlight, "a teacher turn is already in flight for " + session_id);
  auto& s = e->session;
  if (s.status == SessionStatus::Ended) throw Error(ErrorCode::SessionEnded, "session " + session_id + " has ended");

  if (!s.turns.empty() && s.turns.back().role == Role::Teacher) {
    // retry of a turn whose student reply failed
    if (s.turns.back().text != body) {
      throw Error(ErrorCode::PendingTurnMismatch,
                  "session " + session_id + " has a pending teacher turn with different text");
    }
  } else {
    if (text::trim(body).empty()) throw Error(ErrorCode::InvalidArgument, "teacher text must be non-empty");
    if (s.turns.size() + 2 > static_cast<std::size_t>(cfg_.max_turns)) {
      throw Error(ErrorCode::TurnLimit, "session " + session_id + " reached the turn limit");
    }
    const auto now = cfg_.clock();
    DialogueTurn teacher{static_cast<std::int64_t>(s.turns.size()), Role::Teacher, body, now, 0};
    if (!s.turns.empty()) teacher.latency_ms = std::max<std::int64_t>(0, now - s.turns.back().created_at_ms);
    persist(*e, EventKind::TeacherTurn, teacher);
  }

  PersonaConfig persona;
  if (auto it = cfg_.personas.find(s.trait); it != cfg_.personas.end()) persona = it->second;
  auto messages = assemble_session_messages(s, cfg_.history_pairs, persona);
  e->in_flight = true;
  lock.unlock();

  ChatResult reply;
  try {
    reply = student_->chat(cfg_.student_backend, messages);
    if (text::trim(reply.content).empty()) throw Error(ErrorCode::Transport, "student backend returned an empty reply");
  } catch (const Error& err) {
    lock.lock();
    e->in_flight = false;
    throw Error(ErrorCode::GatewayError,
                "student backend failed (" + std::string(to_string(err.code())) + "): " + err.what());
  } catch (...) {
    lock.lock();
    e->in_flight = false;
    throw;
  }

  lock.lock();
  e->in_flight = false;
  DialogueTurn student{static_cast<std::int64_t>(s.turns.size()), Role::Student, reply.content, cfg_.clock(),
                       reply.latency_ms};
  persist(*e, EventKind::StudentTurn, student);
  return student;
}

Session SessionService::end_session(const std::string& session_id) {
  auto e = find(session_id);
  std::lock_guard lock(e->mu);
  if (e->in_flight) throw Error(ErrorCode::TurnInFlight, "cannot end " + session_id + " while a turn is in flight");
  if (e->session.status == SessionStatus::Ended) {
    throw Error(ErrorCode::SessionEnded, "session " + session_id + " has already ended");
  }
  persist(*e, EventKind::Ended, json::object());
  return e->session;
}

void SessionService::submit_survey(const std::string& session_id, const SurveyResponse& survey) {
  validate_survey(survey);
  auto e = find(session_id);
  std::lock_guard lock(e->mu);
  if (e->session.status != SessionStatus::Ended) {
    throw Error(ErrorCode::NotEnded, "session " + session_id + " must end before the survey");
  }
  if (e->session.survey) throw Error(ErrorCode::SessionEnded, "survey already submitted for " + session_id);
  persist(*e, EventKind::SurveySubmitted, survey);
}

Session SessionService::get_transcript(const std::string& session_id) {
  auto e = find(session_id);
  std::lock_guard lock(e->mu);
  return e->session;
}

Session SessionService::replay(const std::string& session_id) const { return fold_events(store_.load(session_id)); }

std::string SessionService::analyze_session(const std::string& session_id) {
  auto e = find(session_id);
  Session snapshot;
  {
    std::lock_guard lock(e->mu);
    if (e->session.status != SessionStatus::Ended) {
      throw Error(ErrorCode::NotEnded, "session " + session_id + " must end before analysis");
    }
    snapshot = e->session;
  }
  std::lock_guard lock(e->analysis_mu);
  if (!e->analysis) e->analysis = run_analysis(snapshot).dump();
  return *e->analysis;
}

json SessionService::run_analysis(const Session& s) {
  if (!judge_) throw Error(ErrorCode::JudgeUnavailable, "no judge backend configured");
  auto error_json = [](const Error& err) {
    return json{{"code", std::string(to_string(err.code()))}, {"message", err.what()}};
  };

  json labels = json::array();
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    const auto first = i + 1 >= static_cast<std::size_t>(cfg_.annotate_window) ? i + 1 - cfg_.annotate_window : 0;
    std::vector<DialogueTurn> ctx(s.turns.begin() + first, s.turns.begin() + i + 1);
    json item = {{"turn_index", s.turns[i].index}, {"role", s.turns[i].role}};
    try {
      item["labels"] = labels_to_json(judge_->annotate_turn(ctx, s.turns[i]));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::AnnotationFailure) throw;
      item["error"] = error_json(err);
    }
    labels.push_back(std::move(item));
  }

  json ranking = json::array();
  std::vector<RankingPrediction> predictions;
  const auto window = static_cast<std::size_t>(2 * cfg_.rank_window_pairs);
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    if (s.turns[i].role != Role::Student) continue;
    const auto first = i + 1 >= window ? i + 1 - window : 0;
    std::vector<DialogueTurn> ctx(s.turns.begin() + first, s.turns.begin() + i + 1);
    try {
      auto p = judge_->rank_personality(ctx, s.trait);
      ranking.push_back(p);
      predictions.push_back(std::move(p));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::RankParseFailure) throw;
      ranking.push_back({{"turn_index", s.turns[i].index}, {"error", error_json(err)}});
    }
  }

  json trajectory = json::array();
  for (const auto& [turn, score] : stats::trajectory(predictions)) {
    trajectory.push_back({{"turn_index", turn}, {"score", score}});
  }
  json summary = {{"predictions", predictions.size()}};
  if (!predictions.empty()) {
    double total = 0.0;
    for (const auto& p : predictions) total += p.score;
    summary["mean_score"] = total / static_cast<double>(predictions.size());
    summary["top1"] = stats::topk_accuracy(predictions, 1);
    summary["top2"] = stats::topk_accuracy(predictions, 2);
    summary["top3"] = stats::topk_accuracy(predictions, 3);
  }
  return {{"session_id", s.id},
          {"trait", s.trait},
          {"labels", labels},
          {"ranking", ranking},
          {"trajectory", trajectory},
          {"summary", summary}};
}

json SessionService::session_stats(const StatsFilter& filter) {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [_, e] : sessions_) entries.push_back(e);
  }
  struct Group {
    int sessions = 0;
    int turn_count = 0;
    std::int64_t latency_sum = 0;
    int latency_n = 0;
  };
  std::map<std::pair<std::string, TraitCode>, Group> groups;
  for (const auto& e : entries) {
    Session s;
    {
      std::lock_guard lock(e->mu);
      s = e->session;
    }
    if (filter.teacher_id && s.teacher_id != *filter.teacher_id) continue;
    if (filter.trait && s.trait != *filter.trait) continue;
    auto& g = groups[{s.teacher_id, s.trait}];
    ++g.sessions;
    for (const auto& t : s.turns) {
      if (t.role != Role::Teacher) continue;
      ++g.turn_count;
      // the opening turn has no preceding student reply to measure from
      if (t.index == 0) continue;
      g.latency_sum += t.latency_ms;
      ++g.latency_n;
    }
  }
  json out = json::array();
  for (const auto& [key, g] : groups) {
    json row = {{"teacher_id", key.first},
                {"trait", key.second},
                {"sessions", g.sessions},
                {"turn_count", g.turn_count},
                {"mean_teacher_latency_s", nullptr}};
    if (g.latency_n > 0) {
      const double mean_ms = static_cast<double>(g.latency_sum) / g.latency_n;
      row["mean_teacher_latency_s"] = std::round(mean_ms / 100.0) / 10.0;
    }
    out.push_back(std::move(row));
  }
  return {{"groups", out}};
}

}  // namespace soei
