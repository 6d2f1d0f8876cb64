#include "commitissue/record_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "commitissue/error.hpp"

namespace commitissue {
namespace {

const json& require(const json& j, const char* key, std::string_view where) {
  if (!j.is_object()) throw DataError(std::string(where) + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string(where) + "." + key + ": missing field");
  return *it;
}

std::string require_string(const json& j, const char* key, std::string_view where) {
  const auto& v = require(j, key, where);
  if (v.is_null()) return {};
  if (!v.is_string()) throw DataError(std::string(where) + "." + key + ": expected a string");
  return v.get<std::string>();
}

const json& require_array(const json& j, const char* key, std::string_view where) {
  const auto& v = require(j, key, where);
  if (!v.is_array()) throw DataError(std::string(where) + "." + key + ": expected an array");
  return v;
}

std::size_t require_offset(const json& j, const char* key, std::string_view where) {
  const auto& v = require(j, key, where);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw DataError(std::string(where) + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string at(std::string_view where, const char* key, std::size_t i) {
  return std::string(where) + "." + key + "[" + std::to_string(i) + "]";
}

}  // namespace

json to_json(const StateSpan& span) {
  return json{{"location", to_string(span.location)},
              {"state_type", to_string(span.state_type)},
              {"start", span.start},
              {"end", span.end}};
}

json to_json(const CommitRecord& record) {
  json issues = json::array();
  for (const auto& issue : record.issues) issues.push_back(json{{"title", issue.title}, {"body", issue.body}});
  json files = json::array();
  for (const auto& f : record.files) files.push_back(json{{"filename", f.path}, {"diff", f.diff}});
  return json{{"commit_message", record.message}, {"issues", std::move(issues)}, {"files", std::move(files)}};
}

json to_json(const AnnotatedCommitRecord& record) {
  json j = to_json(record.record);
  for (std::size_t i = 0; i < record.annotations.size() && i < j["issues"].size(); ++i) {
    const auto& a = record.annotations[i];
    auto& issue = j["issues"][i];
    issue["type"] = to_string(a.issue_type);
    json spans = json::array();
    for (const auto& s : a.spans) spans.push_back(to_json(s));
    issue["state_info"] = std::move(spans);
  }
  return j;
}

StateSpan state_span_from_json(const json& j, std::string_view where) {
  StateSpan s;
  const auto loc = parse_location(require_string(j, "location", where));
  if (!loc) throw DataError(std::string(where) + ".location: expected \"title\" or \"body\"");
  const auto st = parse_state_type(require_string(j, "state_type", where));
  if (!st) throw DataError(std::string(where) + ".state_type: expected \"actual\" or \"expected\"");
  s.location = *loc;
  s.state_type = *st;
  s.start = require_offset(j, "start", where);
  s.end = require_offset(j, "end", where);
  return s;
}

std::vector<StateSpan> state_spans_from_json(const json& j, std::string_view where) {
  if (!j.is_array()) throw DataError(std::string(where) + ": expected an array");
  std::vector<StateSpan> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(state_span_from_json(j[i], std::string(where) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

CommitRecord commit_record_from_json(const json& j) {
  CommitRecord r;
  r.message = require_string(j, "commit_message", "record");
  const auto& issues = require_array(j, "issues", "record");
  for (std::size_t i = 0; i < issues.size(); ++i) {
    const std::string where = at("record", "issues", i);
    r.issues.push_back(IssueRecord{require_string(issues[i], "title", where),
                                   issues[i].contains("body") ? require_string(issues[i], "body", where) : ""});
  }
  const auto& files = require_array(j, "files", "record");
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string where = at("record", "files", i);
    r.files.push_back(FileChange{require_string(files[i], "filename", where), require_string(files[i], "diff", where)});
  }
  return r;
}

bool is_annotated(const json& j) {
  if (!j.is_object() || !j.contains("issues") || !j["issues"].is_array() || j["issues"].empty()) return false;
  for (const auto& issue : j["issues"]) {
    if (!issue.is_object() || !issue.contains("type")) return false;
  }
  return true;
}

AnnotatedCommitRecord annotated_record_from_json(const json& j) {
  AnnotatedCommitRecord out;
  out.record = commit_record_from_json(j);
  const auto& issues = j["issues"];
  for (std::size_t i = 0; i < issues.size(); ++i) {
    const std::string where = at("record", "issues", i);
    IssueAnnotation a;
    const auto type = parse_issue_type(require_string(issues[i], "type", where));
    if (!type) throw DataError(where + ".type: expected bug_report, feature_request or enhancement");
    a.issue_type = *type;
    if (issues[i].contains("state_info")) a.spans = state_spans_from_json(issues[i]["state_info"], where + ".state_info");
    out.annotations.push_back(std::move(a));
  }
  return out;
}

std::vector<json> parse_jsonl(std::string_view text, std::string_view source) {
  std::vector<json> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_file(path), path.string()); }

std::vector<CommitRecord> read_commit_records(const std::filesystem::path& path) {
  std::vector<CommitRecord> out;
  const auto lines = read_jsonl(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(commit_record_from_json(lines[i]));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AnnotatedCommitRecord> read_annotated_records(const std::filesystem::path& path) {
  std::vector<AnnotatedCommitRecord> out;
  const auto lines = read_jsonl(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(annotated_record_from_json(lines[i]));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw UsageError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace commitissue
