#include "commitissue/schema.hpp"

#include <algorithm>
#include <tuple>

#include "commitissue/error.hpp"
#include "commitissue/utf8.hpp"

namespace commitissue {

std::string_view to_string(Location v) { return v == Location::title ? "title" : "body"; }

std::string_view to_string(StateType v) { return v == StateType::actual ? "actual" : "expected"; }

std::string_view to_string(IssueType v) {
  switch (v) {
    case IssueType::bug_report:
      return "bug_report";
    case IssueType::feature_request:
      return "feature_request";
    case IssueType::enhancement:
      return "enhancement";
  }
  return "enhancement";
}

std::optional<Location> parse_location(std::string_view s) {
  if (s == "title") return Location::title;
  if (s == "body") return Location::body;
  return std::nullopt;
}

std::optional<StateType> parse_state_type(std::string_view s) {
  if (s == "actual") return StateType::actual;
  if (s == "expected") return StateType::expected;
  return std::nullopt;
}

std::optional<IssueType> parse_issue_type(std::string_view s) {
  if (s == "bug_report") return IssueType::bug_report;
  if (s == "feature_request") return IssueType::feature_request;
  if (s == "enhancement") return IssueType::enhancement;
  return std::nullopt;
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

bool valid_diff_line(std::string_view line) {
  if (line.empty()) return true;
  constexpr std::string_view kLeaders = "+- @din\\";
  return kLeaders.find(line.front()) != std::string_view::npos;
}

std::string span_label(std::string_view prefix, std::size_t i) {
  return std::string(prefix) + "state_info[" + std::to_string(i) + "]";
}

}  // namespace

const std::string& field_text(const IssueRecord& issue, Location location) {
  return location == Location::title ? issue.title : issue.body;
}

std::string span_text(const IssueRecord& issue, const StateSpan& span) {
  if (span.start >= span.end) {
    throw DataError("span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                    ") is empty or reversed");
  }
  return utf8::substr(field_text(issue, span.location), span.start, span.end);
}

void sort_spans(std::vector<StateSpan>& spans) {
  std::sort(spans.begin(), spans.end(), [](const StateSpan& a, const StateSpan& b) {
    return std::tuple(a.location, a.start, a.end, a.state_type) <
           std::tuple(b.location, b.start, b.end, b.state_type);
  });
}

std::vector<std::string> validate_spans(const IssueRecord& issue, const std::vector<StateSpan>& spans,
                                        std::string_view prefix) {
  std::vector<std::string> out;
  const std::size_t title_len = utf8::length(issue.title);
  const std::size_t body_len = utf8::length(issue.body);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    const std::size_t len = s.location == Location::title ? title_len : body_len;
    if (s.start >= s.end) {
      out.push_back(span_label(prefix, i) + ": StateSpan ordering requires start < end (got start=" +
                    std::to_string(s.start) + ", end=" + std::to_string(s.end) + ")");
    } else if (s.end > len) {
      out.push_back(span_label(prefix, i) + ": StateSpan end " + std::to_string(s.end) +
                    " exceeds length " + std::to_string(len) + " of " + std::string(to_string(s.location)));
    }
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
      const auto& a = spans[i];
      const auto& b = spans[j];
      if (a.location != b.location || a.start >= a.end || b.start >= b.end) continue;
      if (a.start < b.end && b.start < a.end) {
        out.push_back(span_label(prefix, i) + ": StateSpan overlaps " + span_label(prefix, j));
      }
    }
  }
  return out;
}

std::vector<std::string> validate_record(const CommitRecord& record, RecordForm form) {
  std::vector<std::string> out;
  if (blank(record.message)) out.emplace_back("commit_message: must be non-empty");
  if (form == RecordForm::curated && record.issues.empty()) {
    out.emplace_back("issues: curated records need at least one issue");
  }
  for (std::size_t i = 0; i < record.issues.size(); ++i) {
    if (blank(record.issues[i].title)) {
      out.push_back("issues[" + std::to_string(i) + "].title: must be non-empty after trimming");
    }
  }
  for (std::size_t i = 0; i < record.files.size(); ++i) {
    const auto& f = record.files[i];
    const std::string where = "files[" + std::to_string(i) + "]";
    if (f.path.empty()) out.push_back(where + ".filename: must be non-empty");
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= f.diff.size()) {
      const std::size_t nl = f.diff.find('\n', pos);
      const std::size_t stop = nl == std::string::npos ? f.diff.size() : nl;
      std::string_view line(f.diff.data() + pos, stop - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      ++line_no;
      if (!valid_diff_line(line)) {
        out.push_back(where + ".diff: line " + std::to_string(line_no) +
                      " does not start with a unified-diff marker");
        break;
      }
      if (nl == std::string::npos) break;
      pos = nl + 1;
    }
  }
  return out;
}

std::vector<std::string> validate_record(const AnnotatedCommitRecord& annotated) {
  auto out = validate_record(annotated.record, RecordForm::curated);
  const auto& issues = annotated.record.issues;
  if (annotated.annotations.size() != issues.size()) {
    out.push_back("annotations: alignment requires one annotation per issue (got " +
                  std::to_string(annotated.annotations.size()) + " for " + std::to_string(issues.size()) +
                  " issues)");
  }
  const std::size_t n = std::min(issues.size(), annotated.annotations.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto v = validate_spans(issues[i], annotated.annotations[i].spans, "issues[" + std::to_string(i) + "].");
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace commitissue
