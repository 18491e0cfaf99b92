#include "soei/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstring>

#include "soei/error.hpp"
#include "soei/json_io.hpp"

namespace soei {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Created: return "Created";
    case EventKind::TeacherTurn: return "TeacherTurn";
    case EventKind::StudentTurn: return "StudentTurn";
    case EventKind::Ended: return "Ended";
    case EventKind::SurveySubmitted: return "SurveySubmitted";
  }
  return "";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (auto k : {EventKind::Created, EventKind::TeacherTurn, EventKind::StudentTurn, EventKind::Ended,
                 EventKind::SurveySubmitted}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

json event_to_json(const SessionEvent& e) {
  return json{{"seq", e.seq}, {"kind", std::string(to_string(e.kind))}, {"payload", e.payload}, {"at", e.at_ms}};
}

SessionEvent event_from_json(const json& j) {
  SessionEvent e;
  e.seq = j.at("seq").get<std::int64_t>();
  auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::StorageFailure, "unknown event kind " + j.at("kind").dump());
  e.kind = *kind;
  e.payload = j.value("payload", json::object());
  e.at_ms = j.value("at", std::int64_t{0});
  return e;
}

void apply_event(Session& s, const SessionEvent& e, std::int64_t expected_seq) {
  auto corrupt = [&](const std::string& why) {
    throw Error(ErrorCode::StorageFailure, "event " + std::to_string(e.seq) + " of session " + s.id + ": " + why);
  };
  if (e.seq != expected_seq) corrupt("expected seq " + std::to_string(expected_seq));
  if ((e.seq == 0) != (e.kind == EventKind::Created)) corrupt("Created must be exactly the first event");
  if (s.survey) corrupt("event after SurveySubmitted");
  switch (e.kind) {
    case EventKind::Created: {
      const auto& p = e.payload;
      s = Session{};
      s.id = p.at("id").get<std::string>();
      s.teacher_id = p.at("teacher_id").get<std::string>();
      s.trait = p.at("trait").get<TraitCode>();
      s.content_ref = p.value("content_ref", std::string{});
      s.backend_label = p.value("backend_label", std::string{});
      break;
    }
    case EventKind::TeacherTurn:
    case EventKind::StudentTurn: {
      if (s.status == SessionStatus::Ended) corrupt("turn after Ended");
      auto turn = e.payload.get<DialogueTurn>();
      const auto role = e.kind == EventKind::TeacherTurn ? Role::Teacher : Role::Student;
      if (turn.role != role || turn.index != static_cast<std::int64_t>(s.turns.size()) ||
          turn.role != expected_role(turn.index)) {
        corrupt("turn out of order");
      }
      s.turns.push_back(std::move(turn));
      break;
    }
    case EventKind::Ended:
      if (s.status == SessionStatus::Ended) corrupt("Ended twice");
      s.status = SessionStatus::Ended;
      break;
    case EventKind::SurveySubmitted:
      if (s.status != SessionStatus::Ended) corrupt("survey before Ended");
      s.survey = e.payload.get<SurveyResponse>();
      break;
  }
}

Session fold_events(const std::vector<SessionEvent>& events) {
  if (events.empty()) throw Error(ErrorCode::StorageFailure, "empty event log");
  Session s;
  for (std::size_t i = 0; i < events.size(); ++i) apply_event(s, events[i], static_cast<std::int64_t>(i));
  return s;
}

// ---------------------------------------------------------------------------

EventStore::EventStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_ / "sessions", ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + (root_ / "sessions").string() + ": " + ec.message());
}

std::filesystem::path EventStore::session_path(const std::string& session_id) const {
  for (char c : session_id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      throw Error(ErrorCode::NotFound, "no session " + session_id);
    }
  }
  return root_ / "sessions" / (session_id + ".jsonl");
}

// One write(2) per line on an O_APPEND descriptor, so a line is never
// interleaved with another append.
void EventStore::append_line(const std::filesystem::path& path, const std::string& line) {
  const std::string data = line + '\n';
  int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::StorageFailure, "cannot open " + path.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < data.size()) {
    auto n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      int err = errno;
      ::close(fd);
      throw Error(ErrorCode::StorageFailure, "cannot append to " + path.string() + ": " + std::strerror(err));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    throw Error(ErrorCode::StorageFailure, "cannot flush " + path.string());
  }
}

void EventStore::append(const std::string& session_id, const SessionEvent& event) {
  auto path = session_path(session_id);
  std::lock_guard lock(mutex_);
  append_line(path, event_to_json(event).dump());
}

std::vector<SessionEvent> EventStore::load(const std::string& session_id) const {
  auto path = session_path(session_id);
  std::lock_guard lock(mutex_);
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::NotFound, "no session " + session_id);
  std::vector<SessionEvent> out;
  for (const auto& j : read_jsonl_file(path)) out.push_back(event_from_json(j));
  return out;
}

bool EventStore::exists(const std::string& session_id) const {
  try {
    return std::filesystem::exists(session_path(session_id));
  } catch (const Error&) {
    return false;
  }
}

void EventStore::add_to_index(const IndexEntry& entry) {
  json line = {{"id", entry.id},
               {"teacher_id", entry.teacher_id},
               {"trait", entry.trait},
               {"created_at", entry.created_at_ms}};
  std::lock_guard lock(mutex_);
  append_line(root_ / "index.jsonl", line.dump());
}

std::vector<IndexEntry> EventStore::index() const {
  std::lock_guard lock(mutex_);
  std::vector<IndexEntry> out;
  auto path = root_ / "index.jsonl";
  if (!std::filesystem::exists(path)) return out;
  for (const auto& j : read_jsonl_file(path)) {
    out.push_back({j.at("id").get<std::string>(), j.at("teacher_id").get<std::string>(), j.at("trait").get<TraitCode>(),
                   j.value("created_at", std::int64_t{0})});
  }
  return out;
}

}  // namespace soei
