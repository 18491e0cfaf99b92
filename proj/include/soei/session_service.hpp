#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "soei/domain.hpp"
#include "soei/event_log.hpp"
#include "soei/gateway.hpp"
#include "soei/ids.hpp"
#include "soei/judge.hpp"
#include "soei/prompting.hpp"

namespace soei {

struct ServiceConfig {
  std::filesystem::path data_dir = "soei-data";
  int max_turns = 100;
  // Complete teacher/student pairs replayed to the student agent.
  int history_pairs = 6;
  // Turns shown to the judge when annotating one turn.
  int annotate_window = 4;
  // Teacher/student pairs shown to the judge when ranking one student turn.
  int rank_window_pairs = 1;
  BackendConfig student_backend = default_backend_config(BackendRole::Student);
  std::map<TraitCode, PersonaConfig> personas;
  std::function<std::int64_t()> clock = now_ms;
};

struct StatsFilter {
  std::optional<std::string> teacher_id;
  std::optional<TraitCode> trait;
};

// Live teacher/student sessions. Operations on one session are serialized;
// different sessions proceed independently. The gateway call runs outside
// the session lock, guarded by an in-flight flag.
class SessionService {
 public:
  SessionService(ServiceConfig cfg, std::shared_ptr<ChatBackend> student, std::shared_ptr<Judge> judge);
  ~SessionService();

  Session create_session(const std::string& teacher_id, const std::string& trait, const std::string& content_ref,
                         const std::string& backend_label);
  // Returns the student turn. After a gateway failure the teacher turn stays
  // persisted; re-posting the same text retries it.
  DialogueTurn post_teacher_turn(const std::string& session_id, const std::string& text);
  Session end_session(const std::string& session_id);
  void submit_survey(const std::string& session_id, const SurveyResponse& survey);
  Session get_transcript(const std::string& session_id);
  // Serialized analysis document; identical on repeated calls.
  std::string analyze_session(const std::string& session_id);
  nlohmann::json session_stats(const StatsFilter& filter);

  // Rebuilds a session from its persisted events.
  Session replay(const std::string& session_id) const;

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& session_id);
  void persist(Entry& entry, EventKind kind, nlohmann::json payload);
  nlohmann::json run_analysis(const Session& session);
  void load_existing();

  ServiceConfig cfg_;
  std::shared_ptr<ChatBackend> student_;
  std::shared_ptr<Judge> judge_;
  EventStore store_;
  IdGenerator ids_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace soei
