#include "soei/tokenize.hpp"

namespace soei {

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' || c == 0x00A0 ||
         c == 0x3000 || (c >= 0x2000 && c <= 0x200B) || c == 0x2028 || c == 0x2029 || c == 0xFEFF;
}

bool is_ideographic(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) || (c >= 0xF900 && c <= 0xFAFF) ||
         (c >= 0x20000 && c <= 0x2FFFF) || (c >= 0x3040 && c <= 0x30FF);
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  return (c >= 0x2010 && c <= 0x206F) || (c >= 0x3001 && c <= 0x303F) || (c >= 0xFF01 && c <= 0xFF0F) ||
         (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65) ||
         (c >= 0x00A1 && c <= 0x00BF) || c == 0x00D7 || c == 0x00F7 || c == 0xFFFD;
}

char32_t fold(char32_t c, bool lowercase) {
  if (lowercase && c >= U'A' && c <= U'Z') return c + (U'a' - U'A');
  return c;
}

}  // namespace

std::string_view to_string(TokenMode mode) { return mode == TokenMode::UnicodeWords ? "UnicodeWords" : "Characters"; }

std::vector<char32_t> decode_utf8(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    auto b0 = static_cast<unsigned char>(text[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= text.size();
    for (int k = 1; ok && k < len; ++k) {
      auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
  auto cps = decode_utf8(text);
  std::vector<std::string> tokens;
  if (cfg.mode == TokenMode::Characters) {
    for (auto c : cps) {
      if (is_space(c) || is_punct(c)) continue;
      tokens.push_back(encode_utf8(fold(c, cfg.lowercase)));
    }
    return tokens;
  }

  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    auto c = cps[i];
    if (is_ideographic(c)) {
      flush();
      tokens.push_back(encode_utf8(c));
      continue;
    }
    // Apostrophes join letters inside a word ("it's"); elsewhere they split.
    bool inner_apostrophe = (c == U'\'' || c == 0x2019) && !current.empty() && i + 1 < cps.size() &&
                            !is_space(cps[i + 1]) && !is_punct(cps[i + 1]) && !is_ideographic(cps[i + 1]);
    if (inner_apostrophe) {
      current += '\'';
      continue;
    }
    if (is_space(c) || is_punct(c)) {
      flush();
      continue;
    }
    current += encode_utf8(fold(c, cfg.lowercase));
  }
  flush();
  return tokens;
}

}  // namespace soei
