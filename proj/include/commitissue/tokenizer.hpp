#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace commitissue {

/// A token and its character range [start, end) in the source text.
struct Token {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

inline constexpr std::string_view kUrlToken = "[URL]";
inline constexpr std::string_view kCodeToken = "[CODE]";
inline constexpr std::string_view kIssueNumberToken = "[ISSUE_NUMBER]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kBugReportToken = "[BR]";
inline constexpr std::string_view kFeatureRequestToken = "[FR]";
inline constexpr std::string_view kEnhancementToken = "[EN]";

/// Bracketed markers that always come out of the tokenizer as a single token.
inline constexpr std::array<std::string_view, 7> kAtomicTokens = {
    kIssueNumberToken, kCodeToken, kUrlToken, kSepToken,
    kBugReportToken, kFeatureRequestToken, kEnhancementToken};

/// Splits on whitespace, emits each ASCII punctuation character as its own
/// token and keeps the atomic markers above whole. Offsets are character
/// offsets, so concatenating the tokens with the whitespace gaps reproduces
/// the input.
std::vector<Token> tokenize(std::string_view text);

/// Token texts only.
std::vector<std::string> tokenize_words(std::string_view text);

/// Lowercased token texts; the tokenization used by the generation metrics.
std::vector<std::string> metric_tokens(std::string_view text);

}  // namespace commitissue
