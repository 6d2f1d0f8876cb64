#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "commitissue/error.hpp"
#include "commitissue/schema.hpp"
#include "commitissue/transport.hpp"

namespace commitissue::miner {

struct RepoRef {
  std::string owner;
  std::string name;

  /// Parses "owner/name". Throws UsageError on anything else.
  static RepoRef parse(std::string_view slug);
  std::string slug() const { return owner + "/" + name; }

  friend bool operator==(const RepoRef&, const RepoRef&) = default;
};

/// 403/429 from the API. retry_after says how long the server asked us to wait.
class RateLimited : public Error {
 public:
  RateLimited(const std::string& what, std::chrono::seconds retry_after)
      : Error(what), retry_after_(retry_after) {}
  std::chrono::seconds retry_after() const { return retry_after_; }

 private:
  std::chrono::seconds retry_after_;
};

/// 404 for an issue or a commit.
class NotFound : public Error {
 public:
  using Error::Error;
};

/// Malformed API payload. The message names the offending field.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

/// Any other non-2xx status.
class HttpError : public Error {
 public:
  HttpError(const std::string& what, int status) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct IssueEvent {
  std::string event_type;
  std::optional<std::string> commit_id;
  std::optional<std::string> commit_repo;  // "owner/name" parsed from commit_url
  long issue_number = 0;
};

struct IssueEventPage {
  std::vector<IssueEvent> events;
  std::optional<std::string> next_page;  // API path of the next page
};

std::string issue_events_path(const RepoRef& repo, long issue_number);
std::string commit_path(const RepoRef& repo, std::string_view sha);
std::string issue_path(const RepoRef& repo, long issue_number);

/// Path of the rel="next" target of a Link header, relative to the API root.
std::optional<std::string> next_link(std::string_view link_header);

/// Decodes one events page; throws ParseError naming the bad field.
IssueEventPage parse_issue_event_page(long issue_number, const HttpResponse& response);

/// Ids of "referenced" events for one issue, in API order across all pages.
/// Events whose commit lives in another repository are skipped and described
/// in `notes` when given.
std::vector<std::string> list_referencing_commits(const RepoRef& repo, long issue_number, Transport& transport,
                                                  std::vector<std::string>* notes = nullptr);

/// commit sha -> issue numbers, in discovery order on both levels.
class CommitIssueMap {
 public:
  /// Appends `issue` to the commit's list unless it is already there.
  void append(const std::string& commit, long issue);

  const std::vector<std::string>& commits() const { return order_; }
  const std::vector<long>& issues_for(const std::string& commit) const;
  bool contains(const std::string& commit) const { return lists_.count(commit) != 0; }
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }

  /// One line per commit: {"commit": sha, "issues": [..]}.
  std::string to_jsonl() const;
  static CommitIssueMap from_jsonl(std::string_view text);

  friend bool operator==(const CommitIssueMap& a, const CommitIssueMap& b) {
    return a.order_ == b.order_ && a.lists_ == b.lists_;
  }

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, std::vector<long>> lists_;
};

struct MinerOptions {
  std::size_t parallelism = 4;
  /// JSONL of {"issue": n, "commits": [...]} for finished issues. Existing
  /// lines are replayed instead of refetched; new ones are appended.
  std::optional<std::filesystem::path> checkpoint;
};

struct MiningResult {
  CommitIssueMap map;
  std::vector<std::string> notes;
  std::size_t issues_fetched = 0;
  std::size_t issues_from_checkpoint = 0;
};

/// Issue numbers must be unique. Results are merged in input order, so the map
/// does not depend on the parallelism setting.
MiningResult build_commit_issue_map(const RepoRef& repo, const std::vector<long>& issue_numbers, Transport& transport,
                                    const MinerOptions& options = {});

struct FetchedCommit {
  std::string sha;
  CommitRecord record;     // issues left empty
  bool truncated = false;  // the API did not return every changed file
  bool merge = false;      // more than one parent
};

FetchedCommit fetch_commit_payload(const RepoRef& repo, const std::string& sha, Transport& transport);

IssueRecord fetch_issue(const RepoRef& repo, long issue_number, Transport& transport);

/// Fetches every commit in the map and attaches its issues, in map order.
std::vector<FetchedCommit> assemble_records(const RepoRef& repo, const CommitIssueMap& map, Transport& transport);

}  // namespace commitissue::miner
