#include "soei/chat_types.hpp"

#include "soei/error.hpp"

namespace soei {

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::System: return "system";
    case ChatRole::User: return "user";
    case ChatRole::Assistant: return "assistant";
  }
  return "user";
}

void validate_messages(const std::vector<ChatMessage>& messages) {
  if (messages.empty()) throw Error(ErrorCode::InvalidArgument, "chat request requires at least one message");
  for (const auto& m : messages) {
    if (m.role != ChatRole::System && m.content.empty()) {
      throw Error(ErrorCode::InvalidArgument, "user/assistant message content must be non-empty");
    }
  }
}

}  // namespace soei
