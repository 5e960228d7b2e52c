#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "e2rank/error.hpp"

namespace e2rank {

using TokenId = std::uint32_t;

struct TokenizerConfig {
  std::uint32_t vocab_size = 8192;
  bool lowercase = true;

  // Reserved; hashing maps into [0, vocab_size - 2] so this id is never produced.
  TokenId eos_id() const noexcept { return vocab_size - 1; }

  void validate() const {
    if (vocab_size < 2) throw InvalidArgument("TokenizerConfig: vocab_size must be >= 2");
  }
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace detail {

// Length in bytes of the whitespace code point starting at text[pos], or 0.
inline std::size_t whitespace_at(std::string_view text, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  if (b0 == ' ' || (b0 >= 0x09 && b0 <= 0x0d)) return 1;
  if (b0 < 0x80) return 0;
  auto byte = [&](std::size_t i) -> unsigned {
    return pos + i < text.size() ? static_cast<unsigned char>(text[pos + i]) : 0u;
  };
  if (b0 == 0xc2 && (byte(1) == 0x85 || byte(1) == 0xa0)) return 2;  // NEL, NBSP
  if (b0 == 0xe1 && byte(1) == 0x9a && byte(2) == 0x80) return 3;    // U+1680
  if (b0 == 0xe2 && byte(1) == 0x80) {
    const unsigned b2 = byte(2);
    if ((b2 >= 0x80 && b2 <= 0x8a) || b2 == 0xa8 || b2 == 0xa9 || b2 == 0xaf) return 3;
  }
  if (b0 == 0xe2 && byte(1) == 0x81 && byte(2) == 0x9f) return 3;  // U+205F
  if (b0 == 0xe3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
  return 0;
}

}  // namespace detail

// Whitespace-delimited pieces of text, as views into it.
inline std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  while (pos < text.size()) {
    const std::size_t ws = detail::whitespace_at(text, pos);
    if (ws > 0) {
      if (start != std::string_view::npos) {
        pieces.push_back(text.substr(start, pos - start));
        start = std::string_view::npos;
      }
      pos += ws;
    } else {
      if (start == std::string_view::npos) start = pos;
      ++pos;
    }
  }
  if (start != std::string_view::npos) pieces.push_back(text.substr(start));
  return pieces;
}

// Prefix of text holding its first max_tokens whitespace tokens (bytes preserved).
inline std::string_view truncate_tokens(std::string_view text, std::size_t max_tokens) {
  const auto pieces = split_whitespace(text);
  if (pieces.size() <= max_tokens) return text;
  if (max_tokens == 0) return text.substr(0, 0);
  const std::string_view last = pieces[max_tokens - 1];
  return text.substr(0, static_cast<std::size_t>(last.data() - text.data()) + last.size());
}

inline TokenId token_id(std::string_view piece, const TokenizerConfig& cfg) {
  std::uint64_t hash;
  if (cfg.lowercase) {
    std::string folded(piece);
    for (char& c : folded) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    hash = fnv1a64(folded);
  } else {
    hash = fnv1a64(piece);
  }
  return static_cast<TokenId>(hash % (cfg.vocab_size - 1));
}

inline std::vector<TokenId> tokenize(std::string_view text, const TokenizerConfig& cfg = {}) {
  cfg.validate();
  std::vector<TokenId> ids;
  for (std::string_view piece : split_whitespace(text)) ids.push_back(token_id(piece, cfg));
  return ids;
}

}  // namespace e2rank
