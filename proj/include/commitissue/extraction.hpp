#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "commitissue/bio.hpp"
#include "commitissue/schema.hpp"
#include "commitissue/tokenizer.hpp"

namespace commitissue {

/// "[BR]", "[FR]" or "[EN]".
std::string_view type_token(IssueType type);

/// Issue text with its type marker in front: "<marker> <title>\n<body>".
/// Offsets are characters into `text`; tokens[0] is always the marker.
struct TypedIssueText {
  IssueType type = IssueType::bug_report;
  IssueRecord issue;
  std::string text;
  std::size_t title_offset = 0;
  std::size_t title_length = 0;
  std::size_t body_offset = 0;
  std::size_t body_length = 0;
  std::vector<Token> tokens;

  std::vector<std::string> words() const;
};

/// Throws DataError when the issue title is blank.
TypedIssueText prepend_type_token(const IssueRecord& issue, IssueType type);

// ---- issue type classification ----------------------------------------------

class IssueTypeClassifier {
 public:
  virtual ~IssueTypeClassifier() = default;
  virtual IssueType classify(const IssueRecord& issue) const = 0;
  /// Whether classify() may run concurrently.
  virtual bool thread_safe() const { return true; }
};

/// Keyword voting over the lowercased title and body tokens. Title hits count
/// twice. The highest score wins with ties going to bug_report, then
/// feature_request; with no hit at all the issue is an enhancement.
class KeywordIssueClassifier final : public IssueTypeClassifier {
 public:
  IssueType classify(const IssueRecord& issue) const override;
  std::array<int, 3> scores(const IssueRecord& issue) const;

  /// Keyword phrases per class, each a space-separated token sequence.
  static const std::vector<std::string_view>& keywords(IssueType type);
};

IssueType classify_issue_type(const IssueRecord& issue, const IssueTypeClassifier& model);

// ---- state information tagging ---------------------------------------------

class StateTagger {
 public:
  virtual ~StateTagger() = default;
  /// One tag per token of `typed`.
  virtual std::vector<Tag> tag(const TypedIssueText& typed) const = 0;
  virtual bool thread_safe() const { return true; }
};

/// Clause-level trigger rules. A clause ends at ". ! ? ;", at a line break and
/// at the title/body boundary. The first trigger in a clause decides its state
/// type; the span covers the trigger through the end of the clause.
class LexicalStateTagger final : public StateTagger {
 public:
  std::vector<Tag> tag(const TypedIssueText& typed) const override;

  static const std::vector<std::string_view>& actual_triggers();
  static const std::vector<std::string_view>& expected_triggers();
};

/// Test double that answers with the gold annotation of a known issue
/// (matched on title and body) and all-O for anything else.
class GoldReplayTagger final : public StateTagger {
 public:
  explicit GoldReplayTagger(const std::vector<AnnotatedCommitRecord>& records);
  void add(const IssueRecord& issue, const std::vector<StateSpan>& spans);

  std::vector<Tag> tag(const TypedIssueText& typed) const override;

 private:
  std::map<std::pair<std::string, std::string>, std::vector<StateSpan>> gold_;
};

/// Spans of one issue moved into the coordinates of `typed.text`.
std::vector<StateSpan> to_typed_coordinates(const TypedIssueText& typed, const std::vector<StateSpan>& spans);

/// Gold tags for `typed` from field-relative spans.
TaggedSequence gold_sequence(const TypedIssueText& typed, const std::vector<StateSpan>& spans);

/// Runs the tagger, forces the marker token to O and repairs ill-formed runs.
TaggedSequence tag_state_info(const TypedIssueText& typed, const StateTagger& model);

/// Decodes title and body separately, so no span crosses the boundary, and
/// returns field-relative spans in document order.
std::vector<StateSpan> spans_from_tags(const TypedIssueText& typed, const std::vector<Tag>& tags);

IssueAnnotation annotate_issue(const IssueRecord& issue, const IssueTypeClassifier& classifier,
                               const StateTagger& tagger);
AnnotatedCommitRecord annotate_record(const CommitRecord& record, const IssueTypeClassifier& classifier,
                                      const StateTagger& tagger);

// ---- fuzzy matching and evaluation -----------------------------------------

/// Length of the longest common subsequence of two code point strings.
std::size_t lcs_length(std::u32string_view a, std::u32string_view b);

struct FuzzyMatch {
  double similarity = 0.0;
  bool match = false;
};

inline constexpr double kDefaultTau = 0.8;

/// similarity = LCS / mean length over characters; two empty strings are a
/// perfect match. `match` is similarity >= tau.
FuzzyMatch fuzzy_match(std::string_view predicted, std::string_view gold, double tau = kDefaultTau);

struct ExtractedSpan {
  Location location = Location::body;
  StateType state_type = StateType::actual;
  std::string text;

  friend bool operator==(const ExtractedSpan&, const ExtractedSpan&) = default;
};

/// Texts of field-relative spans in document order. Throws DataError for
/// out-of-range spans.
std::vector<ExtractedSpan> resolve_spans(const IssueRecord& issue, std::vector<StateSpan> spans);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

/// Harmonic mean; 0 when both inputs are 0.
double f1_score(double precision, double recall);
ClassScores scores_from_counts(std::size_t tp, std::size_t predicted, std::size_t gold);

struct ExtractionReport {
  ClassScores actual;
  ClassScores expected;
  ClassScores micro;  // pooled over both classes
  double tau = kDefaultTau;

  double micro_f1() const { return micro.f1; }

  /// Percentages (x100), laid out as actual/expected P, R, F1 plus micro-F1.
  nlohmann::json to_json() const;
};

/// predictions[i] and gold[i] belong to the same issue. A prediction is a true
/// positive when it fuzzy-matches a still unmatched gold span of the same
/// state type and location; predictions are consumed in order and each takes
/// the first such gold span.
ExtractionReport evaluate_extraction(const std::vector<std::vector<ExtractedSpan>>& predictions,
                                     const std::vector<std::vector<ExtractedSpan>>& gold, double tau = kDefaultTau);

}  // namespace commitissue
