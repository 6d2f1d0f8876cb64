#include "commitissue/tokenizer.hpp"

#include <algorithm>

#include "commitissue/utf8.hpp"

namespace commitissue {
namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == 0xA0 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x3000;
}

bool is_punct(char32_t c) {
  return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') ||
         (c >= U'{' && c <= U'~');
}

// Length of the atomic marker starting at cps[i], or 0.
std::size_t atomic_at(const std::u32string& cps, std::size_t i) {
  if (cps[i] != U'[') return 0;
  for (auto marker : kAtomicTokens) {
    if (i + marker.size() > cps.size()) continue;
    bool same = true;
    for (std::size_t k = 0; k < marker.size() && same; ++k) {
      same = cps[i + k] == static_cast<char32_t>(marker[k]);
    }
    if (same) return marker.size();
  }
  return 0;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  const auto offsets = utf8::char_offsets(text);
  const auto cps = utf8::decode(text);
  std::vector<Token> out;
  auto emit = [&](std::size_t s, std::size_t e) {
    out.push_back(Token{std::string(text.substr(offsets[s], offsets[e] - offsets[s])), s, e});
  };
  std::size_t i = 0;
  const std::size_t n = cps.size();
  while (i < n) {
    if (is_space(cps[i])) {
      ++i;
    } else if (const std::size_t m = atomic_at(cps, i); m != 0) {
      emit(i, i + m);
      i += m;
    } else if (is_punct(cps[i])) {
      emit(i, i + 1);
      ++i;
    } else {
      std::size_t j = i + 1;
      while (j < n && !is_space(cps[j]) && !is_punct(cps[j])) ++j;
      emit(i, j);
      i = j;
    }
  }
  return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

std::vector<std::string> metric_tokens(std::string_view text) {
  auto words = tokenize_words(text);
  for (auto& w : words) {
    std::transform(w.begin(), w.end(), w.begin(), [](char c) {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    });
  }
  return words;
}

}  // namespace commitissue
