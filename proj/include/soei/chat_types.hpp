#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace soei {

enum class ChatRole { System, User, Assistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// Throws InvalidArgument for an empty list or empty user/assistant content.
void validate_messages(const std::vector<ChatMessage>& messages);

}  // namespace soei
