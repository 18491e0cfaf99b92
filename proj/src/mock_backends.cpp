#include "soei/mock_backends.hpp"

#include <regex>
#include <sstream>


namespace soei {

namespace {

const std::string& last_user(const std::vector<ChatMessage>& messages) {
  static const std::string empty;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == ChatRole::User) return it->content;
  }
  return empty;
}

}  // namespace

std::shared_ptr<ScriptedBackend> make_mock_student() {
  return std::make_shared<ScriptedBackend>(
      std::vector<ScriptedBackend::Reply>{}, [](const BackendConfig&, const std::vector<ChatMessage>& messages) {
        std::istringstream in(last_user(messages));
        std::string gist, word;
        for (int i = 0; i < 4 && in >> word; ++i) gist += (i ? " " : "") + word;
        return "Um, I think, uh, it is about \"" + gist + "\"... I'm not sure.";
      });
}

std::shared_ptr<ScriptedBackend> make_mock_judge() {
  return std::make_shared<ScriptedBackend>(
      std::vector<ScriptedBackend::Reply>{}, [](const BackendConfig&, const std::vector<ChatMessage>& messages) {
        const auto& user = last_user(messages);
        if (user.find("rank the five candidate") != std::string::npos || user.find("Ranking:") == 0 ||
            user.find("could not be read as a ranking") != std::string::npos) {
          return std::string("Ranking: HN > HE > HA > LC > LO");
        }
        if (user.find("Target turn (teacher)") != std::string::npos || user.find("Teacher Act: <value>") != std::string::npos) {
          return std::string("Bloom Level: Understand\nQuestion Type: Open\nTeacher Act: Questioning");
        }
        if (user.find("Student Act: <value>") != std::string::npos) return std::string("Student Act: Correct answer");
        if (user.find("Classify the sentiment") != std::string::npos) return std::string("Neutral, 0.80");
        static const std::regex kCount(R"(with (\d+) segments)");
        std::smatch m;
        const std::string& system = messages.empty() ? user : messages.front().content;
        if (std::regex_search(system, m, kCount)) {
          std::ostringstream out;
          const int n = std::stoi(m[1].str());
          for (int i = 1; i <= n; ++i) {
            out << "Question " << i << ":\nChain-of-thought reasoning: The reply is short and plausible for a student.\n"
                << "Compliance: 1\n\n";
          }
          return out.str();
        }
        return std::string("I cannot answer that.");
      });
}

std::shared_ptr<ScriptedBackend> make_mock_generator() {
  return std::make_shared<ScriptedBackend>(
      std::vector<ScriptedBackend::Reply>{}, [](const BackendConfig&, const std::vector<ChatMessage>& messages) {
        static const std::regex kFocus(R"(Focus on the (.+?) stage, with the teacher asking mainly (.+?)s\.)");
        static const std::regex kFile(R"(teaching plan for ([^:\n]+):)");
        const auto& user = last_user(messages);
        std::smatch m;
        std::string stage = "New lesson learning", qtype = "Open-ended question", lesson = "the lesson";
        if (std::regex_search(user, m, kFocus)) {
          stage = m[1].str();
          qtype = m[2].str();
        }
        if (std::regex_search(user, m, kFile)) lesson = m[1].str();
        std::ostringstream out;
        for (int i = 1; i <= 10; ++i) {
          out << "[Dialogue " << i << "]\n"
              << "Teacher: Question " << i << " about " << lesson << ": what do you notice here?\n"
              << "Student: Um, I think, uh, point " << i << " is about the weather.\n"
              << "Question Type: " << qtype << "\n"
              << "Learning Stage: " << stage << "\n\n";
        }
        return out.str();
      });
}

}  // namespace soei
