#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace soei {

enum class TokenMode { UnicodeWords, Characters };

struct TokenizerConfig {
  // UnicodeWords splits on whitespace and punctuation; ideographic scripts
  // without word boundaries fall back to one token per character.
  TokenMode mode = TokenMode::UnicodeWords;
  // ASCII case folding only.
  bool lowercase = true;

  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

std::string_view to_string(TokenMode mode);

// Decodes UTF-8; malformed bytes decode to U+FFFD one byte at a time.
std::vector<char32_t> decode_utf8(std::string_view text);
std::string encode_utf8(char32_t cp);

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg);

}  // namespace soei
