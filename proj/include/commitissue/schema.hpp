#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace commitissue {

enum class Location : std::uint8_t { title, body };
enum class StateType : std::uint8_t { actual, expected };
enum class IssueType : std::uint8_t { bug_report, feature_request, enhancement };

std::string_view to_string(Location v);
std::string_view to_string(StateType v);
std::string_view to_string(IssueType v);
std::optional<Location> parse_location(std::string_view s);
std::optional<StateType> parse_state_type(std::string_view s);
std::optional<IssueType> parse_issue_type(std::string_view s);

struct IssueRecord {
  std::string title;
  std::string body;

  friend bool operator==(const IssueRecord&, const IssueRecord&) = default;
};

struct FileChange {
  std::string path;
  std::string diff;

  friend bool operator==(const FileChange&, const FileChange&) = default;
};

struct CommitRecord {
  std::string message;
  std::vector<IssueRecord> issues;
  std::vector<FileChange> files;

  friend bool operator==(const CommitRecord&, const CommitRecord&) = default;
};

/// Character range [start, end) inside an issue's title or body. Offsets count
/// Unicode scalar values, not bytes.
struct StateSpan {
  Location location = Location::body;
  StateType state_type = StateType::actual;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const StateSpan&, const StateSpan&) = default;
};

struct IssueAnnotation {
  IssueType issue_type = IssueType::bug_report;
  std::vector<StateSpan> spans;

  friend bool operator==(const IssueAnnotation&, const IssueAnnotation&) = default;
};

/// A record from the annotated part of the corpus; annotations[i] describes
/// record.issues[i].
struct AnnotatedCommitRecord {
  CommitRecord record;
  std::vector<IssueAnnotation> annotations;

  friend bool operator==(const AnnotatedCommitRecord&, const AnnotatedCommitRecord&) = default;
};

enum class RecordForm : std::uint8_t {
  raw,      // straight from the miner; may have no issues yet
  curated,  // must reference at least one issue
};

/// Returns one human-readable entry per broken invariant, each prefixed by the
/// offending field path (e.g. "issues[1].title: ..."). Empty means valid.
std::vector<std::string> validate_record(const CommitRecord& record,
                                         RecordForm form = RecordForm::raw);
std::vector<std::string> validate_record(const AnnotatedCommitRecord& record);

/// Checks only the span invariants of one issue (bounds and pairwise overlap).
std::vector<std::string> validate_spans(const IssueRecord& issue,
                                        const std::vector<StateSpan>& spans,
                                        std::string_view prefix = "");

/// Text of the issue field a span points into.
const std::string& field_text(const IssueRecord& issue, Location location);

/// Resolves a span to its text. Throws DataError when the span is out of range.
std::string span_text(const IssueRecord& issue, const StateSpan& span);

/// Orders spans by (location, start, end); title spans come first.
void sort_spans(std::vector<StateSpan>& spans);

}  // namespace commitissue
