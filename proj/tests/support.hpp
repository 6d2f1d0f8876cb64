#pragma once

// Shared helpers for unit and acceptance tests: data paths, seeded random
// inputs and brute-force oracles that share no code with the library.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "commitissue/schema.hpp"
#include "commitissue/tokenizer.hpp"

namespace testsupport {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(COMMITISSUE_TEST_DATA) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("commitissue-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Longest common subsequence by trying every subsequence of the shorter
/// input, longest first. Exponential; only for short inputs.
template <class Seq>
std::size_t brute_force_lcs(const Seq& a, const Seq& b) {
  const Seq& s = a.size() <= b.size() ? a : b;
  const Seq& t = a.size() <= b.size() ? b : a;
  const std::size_t n = s.size();
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
    if (k <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < t.size() && !(t[j] == s[i])) ++j;
      if (j == t.size()) ok = false;
      else ++j;
    }
    if (ok) best = k;
  }
  return best;
}

/// Every string of length 0..max_len over `alphabet`.
inline std::vector<std::string> all_strings(const std::string& alphabet, std::size_t max_len) {
  std::vector<std::string> out{""};
  std::vector<std::string> frontier{""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& s : frontier)
      for (char c : alphabet) next.push_back(s + c);
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

/// LCS for every pair drawn from all_strings(alphabet, max_len), by brute
/// force over subsequence sets: each string stores the set of its distinct
/// subsequences as a bitset over the full string list, and LCS(a, b) is the
/// longest subsequence of a whose bit is set for b.
class SubsequenceOracle {
 public:
  SubsequenceOracle(const std::string& alphabet, std::size_t max_len)
      : strings_(all_strings(alphabet, max_len)), words_((strings_.size() + 63) / 64) {
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::uint32_t i = 0; i < strings_.size(); ++i) index.emplace(strings_[i], i);
    bits_.assign(strings_.size() * words_, 0);
    subs_.resize(strings_.size());
    for (std::uint32_t i = 0; i < strings_.size(); ++i) {
      const auto& s = strings_[i];
      for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
        std::string sub;
        for (std::size_t k = 0; k < s.size(); ++k)
          if (mask & (1u << k)) sub += s[k];
        const std::uint32_t j = index.at(sub);
        auto& word = bits_[i * words_ + j / 64];
        if (word & (1ull << (j % 64))) continue;
        word |= 1ull << (j % 64);
        subs_[i].push_back(j);
      }
      // all_strings lists shorter strings first.
      std::sort(subs_[i].rbegin(), subs_[i].rend());
    }
  }

  const std::vector<std::string>& strings() const { return strings_; }

  std::size_t lcs(std::uint32_t a, std::uint32_t b) const {
    for (std::uint32_t j : subs_[a])
      if (bits_[b * words_ + j / 64] & (1ull << (j % 64))) return strings_[j].size();
    return 0;
  }

 private:
  std::vector<std::string> strings_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::vector<std::uint32_t>> subs_;
};

/// Random words separated by single spaces; returns the text and, for each
/// word, its [start, end) character range.
struct WordText {
  std::string text;
  std::vector<std::pair<std::size_t, std::size_t>> words;
};

inline WordText random_words(std::mt19937_64& rng, std::size_t count) {
  static const std::vector<std::string> kVocab = {"parser", "crash", "on", "input", "it", "should", "work",
                                                  "null",   "file",  "é",  "naïve", "x",  "42",     "ok"};
  std::uniform_int_distribution<std::size_t> pick(0, kVocab.size() - 1);
  WordText w;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) {
      w.text += ' ';
      ++pos;
    }
    const std::string& word = kVocab[pick(rng)];
    std::size_t chars = 0;
    for (unsigned char c : word) chars += (c & 0xC0) != 0x80;
    w.words.emplace_back(pos, pos + chars);
    w.text += word;
    pos += chars;
  }
  return w;
}

/// Random non-overlapping spans whose boundaries are word boundaries.
inline std::vector<commitissue::StateSpan> random_token_spans(std::mt19937_64& rng, const WordText& w) {
  std::vector<commitissue::StateSpan> spans;
  std::bernoulli_distribution start_here(0.3), actual(0.5);
  std::uniform_int_distribution<std::size_t> len(1, 4);
  std::size_t i = 0;
  while (i < w.words.size()) {
    if (!start_here(rng)) {
      ++i;
      continue;
    }
    const std::size_t last = std::min(w.words.size() - 1, i + len(rng) - 1);
    spans.push_back({commitissue::Location::body,
                     actual(rng) ? commitissue::StateType::actual : commitissue::StateType::expected,
                     w.words[i].first, w.words[last].second});
    // Adjacent spans are allowed; the next one opens with B-.
    i = last + 1;
  }
  return spans;
}

}  // namespace testsupport
