#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commitissue/schema.hpp"

namespace commitissue {

/// Replaces fenced code, indented code blocks and inline code spans with
/// "[CODE]", markdown images and bare URLs with "[URL]". Markdown links keep
/// their text and lose the target. Applying it twice changes nothing.
std::string normalize_issue_body(std::string_view body);

/// Replaces issue references ("#12", "GH-12", "owner/repo#12") with
/// "[ISSUE_NUMBER]". Version numbers and other digits are left alone.
std::string normalize_commit_message(std::string_view message);

/// Normalizes the message and every issue body.
CommitRecord normalize_record(CommitRecord record);

enum class DropReason : std::uint8_t { bot, trivial, non_english, length, no_issues, no_files };

std::string_view to_string(DropReason reason);

/// One message rule. Patterns are ECMAScript regexes, matched case-insensitively
/// against the trimmed first line of the normalized message.
struct MessageRule {
  std::string_view name;
  DropReason reason;
  std::string_view pattern;
};

/// Bot signatures first, then trivial/boilerplate families (merge, revert,
/// "ignore update '...'", issue-reference-only, single-file updates).
std::span<const MessageRule> message_rules();

/// Name of the first rule matching `message`, if any.
std::optional<MessageRule> match_message_rule(std::string_view message);

/// Share of ASCII letters among all letters is at least `threshold`. Text
/// without any letter is not considered English.
bool is_english(std::string_view text, double threshold = 0.9);

struct FilterOptions {
  std::size_t token_limit = 1024;
  double english_threshold = 0.9;
};

struct FilterDecision {
  bool keep = true;
  std::optional<DropReason> reason;
  std::string rule;    // message rule name or field path that triggered the drop
  std::string detail;  // human-readable explanation

  static FilterDecision kept() { return {}; }
};

/// Checks, in order: bot/trivial message rules, English (message and every
/// issue title), token limit on every text field, at least one issue, at least
/// one file. The first failing check is reported.
FilterDecision filter_record(const CommitRecord& record, const FilterOptions& options = {});

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

/// Sizes of an 8:1:1 split of n items: (n - 2*floor(n/10), floor(n/10), floor(n/10)).
struct SplitSizes {
  std::size_t train, valid, test;
};
SplitSizes split_sizes(std::size_t n);

/// Seeded shuffle of 0..n-1 cut into train/valid/test; each split is sorted
/// ascending so records keep their input order. Throws UsageError for n < 10.
SplitIndices stratify_indices(std::size_t n, std::uint64_t seed);

/// Fisher-Yates over a 64-bit Mersenne Twister with rejection sampling, so the
/// permutation is identical on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

template <class T>
struct Splits {
  std::vector<T> train;
  std::vector<T> valid;
  std::vector<T> test;
};

template <class T>
Splits<T> stratify(const std::vector<T>& records, std::uint64_t seed) {
  const auto idx = stratify_indices(records.size(), seed);
  Splits<T> out;
  for (auto i : idx.train) out.train.push_back(records[i]);
  for (auto i : idx.valid) out.valid.push_back(records[i]);
  for (auto i : idx.test) out.test.push_back(records[i]);
  return out;
}

}  // namespace commitissue
