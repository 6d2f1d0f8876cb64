#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "commitissue/schema.hpp"

namespace commitissue {

using json = nlohmann::json;

// Dataset lines use these keys:
//   {"commit_message": str,
//    "issues": [{"title": str, "body": str,
//                "type": str?,                       // annotated part only
//                "state_info": [{"location", "state_type", "start", "end"}]?}],
//    "files": [{"filename": str, "diff": str}]}

json to_json(const CommitRecord& record);
json to_json(const AnnotatedCommitRecord& record);
json to_json(const StateSpan& span);

/// Parsers throw DataError naming the offending field.
CommitRecord commit_record_from_json(const json& j);
AnnotatedCommitRecord annotated_record_from_json(const json& j);
StateSpan state_span_from_json(const json& j, std::string_view where = "state_info");
std::vector<StateSpan> state_spans_from_json(const json& j, std::string_view where = "state_info");

/// True when every issue of the line carries a "type" key.
bool is_annotated(const json& j);

/// Reads one JSON value per non-blank line. Errors carry the 1-based line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);
std::vector<json> parse_jsonl(std::string_view text, std::string_view source = "<input>");

std::vector<CommitRecord> read_commit_records(const std::filesystem::path& path);
std::vector<AnnotatedCommitRecord> read_annotated_records(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<json>& lines);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 hex digits. Used for provenance hashes.
std::string fnv1a_hex(std::string_view data);

}  // namespace commitissue
