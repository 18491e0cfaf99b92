#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "soei/domain.hpp"

namespace soei {

enum class EventKind { Created, TeacherTurn, StudentTurn, Ended, SurveySubmitted };
std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct SessionEvent {
  std::int64_t seq = 0;
  EventKind kind = EventKind::Created;
  nlohmann::json payload;
  std::int64_t at_ms = 0;
};

nlohmann::json event_to_json(const SessionEvent& e);
SessionEvent event_from_json(const nlohmann::json& j);

// Applies one event to a session, enforcing the log invariants: gapless seq
// from 0, Created first, turns alternating, nothing after the survey.
// `expected_seq` is the seq the event must carry.
void apply_event(Session& session, const SessionEvent& event, std::int64_t expected_seq);
Session fold_events(const std::vector<SessionEvent>& events);

struct IndexEntry {
  std::string id;
  std::string teacher_id;
  TraitCode trait = TraitCode::HN;
  std::int64_t created_at_ms = 0;
};

// Layout under the root: sessions/<id>.jsonl holds one event per line and
// index.jsonl lists every created session.
class EventStore {
 public:
  explicit EventStore(std::filesystem::path root);

  void append(const std::string& session_id, const SessionEvent& event);
  std::vector<SessionEvent> load(const std::string& session_id) const;
  void add_to_index(const IndexEntry& entry);
  std::vector<IndexEntry> index() const;
  bool exists(const std::string& session_id) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path session_path(const std::string& session_id) const;
  void append_line(const std::filesystem::path& path, const std::string& line);

  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

}  // namespace soei
