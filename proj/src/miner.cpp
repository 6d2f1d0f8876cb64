#include "commitissue/miner.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <unordered_set>

#include <json.hpp>

#include "commitissue/record_io.hpp"

namespace commitissue::miner {
namespace {

using nlohmann::json;

bool is_hex40(std::string_view s) {
  return s.size() == 40 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c) != 0; });
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

json parse_body(const HttpResponse& response, std::string_view what) {
  try {
    return json::parse(response.body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": body is not JSON (" + e.what() + ")");
  }
}

// Turns an error status into the matching exception.
void check_status(const HttpResponse& response, std::string_view what, std::string_view missing_kind) {
  if (response.status >= 200 && response.status < 300) return;
  if (is_rate_limited(response)) {
    throw RateLimited(std::string(what) + ": rate limited (HTTP " + std::to_string(response.status) + ")",
                      retry_after(response, std::chrono::seconds(60)));
  }
  if (response.status == 404) throw NotFound(std::string(what) + ": " + std::string(missing_kind) + " not found");
  throw HttpError(std::string(what) + ": HTTP " + std::to_string(response.status), response.status);
}

// "owner/name" from ".../repos/owner/name/commits/sha".
std::optional<std::string> repo_from_commit_url(std::string_view url) {
  const auto r = url.find("/repos/");
  if (r == std::string_view::npos) return std::nullopt;
  const auto rest = url.substr(r + 7);
  const auto c = rest.find("/commits/");
  if (c == std::string_view::npos) return std::nullopt;
  return std::string(rest.substr(0, c));
}

std::string strip_origin(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) return std::string(url);
  const auto slash = url.find('/', scheme + 3);
  return slash == std::string_view::npos ? std::string("/") : std::string(url.substr(slash));
}

std::string string_field(const json& obj, const char* key, const std::string& where, bool allow_null = false) {
  if (!obj.contains(key)) throw ParseError(where + "." + key + ": missing");
  const auto& v = obj[key];
  if (v.is_null() && allow_null) return {};
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

struct IssueResult {
  std::vector<std::string> commits;
  std::vector<std::string> notes;
};

IssueResult collect_issue(const RepoRef& repo, long issue, Transport& transport) {
  IssueResult r;
  r.commits = list_referencing_commits(repo, issue, transport, &r.notes);
  return r;
}

std::unordered_map<long, std::vector<std::string>> load_checkpoint(const std::filesystem::path& path) {
  std::unordered_map<long, std::vector<std::string>> done;
  if (!std::filesystem::exists(path)) return done;
  for (const auto& line : read_jsonl(path)) {
    if (!line.contains("issue") || !line["issue"].is_number_integer() || !line.contains("commits") ||
        !line["commits"].is_array()) {
      throw DataError(path.string() + ": checkpoint lines need \"issue\" and \"commits\"");
    }
    done[line["issue"].get<long>()] = line["commits"].get<std::vector<std::string>>();
  }
  return done;
}

}  // namespace

RepoRef RepoRef::parse(std::string_view slug) {
  const auto slash = slug.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == slug.size() ||
      slug.find('/', slash + 1) != std::string_view::npos) {
    throw UsageError("repository must look like owner/name, got \"" + std::string(slug) + "\"");
  }
  return RepoRef{std::string(slug.substr(0, slash)), std::string(slug.substr(slash + 1))};
}

std::string issue_events_path(const RepoRef& repo, long issue_number) {
  return "/repos/" + repo.slug() + "/issues/" + std::to_string(issue_number) + "/events?per_page=100";
}

std::string commit_path(const RepoRef& repo, std::string_view sha) {
  return "/repos/" + repo.slug() + "/commits/" + std::string(sha);
}

std::string issue_path(const RepoRef& repo, long issue_number) {
  return "/repos/" + repo.slug() + "/issues/" + std::to_string(issue_number);
}

std::optional<std::string> next_link(std::string_view link) {
  std::size_t pos = 0;
  while (pos < link.size()) {
    const auto open = link.find('<', pos);
    if (open == std::string_view::npos) break;
    const auto close = link.find('>', open);
    if (close == std::string_view::npos) break;
    const auto comma = link.find(',', close);
    const auto params = link.substr(close + 1, (comma == std::string_view::npos ? link.size() : comma) - close - 1);
    if (params.find("rel=\"next\"") != std::string_view::npos || params.find("rel=next") != std::string_view::npos) {
      return strip_origin(link.substr(open + 1, close - open - 1));
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return std::nullopt;
}

IssueEventPage parse_issue_event_page(long issue_number, const HttpResponse& response) {
  if (issue_number < 1) throw UsageError("issue numbers start at 1");
  const std::string what = "issue " + std::to_string(issue_number) + " events";
  check_status(response, what, "issue");
  const json body = parse_body(response, what);
  if (!body.is_array()) throw ParseError(what + ": expected an array of events");
  IssueEventPage page;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const std::string where = what + "[" + std::to_string(i) + "]";
    const auto& e = body[i];
    if (!e.is_object()) throw ParseError(where + ": expected an object");
    IssueEvent ev;
    ev.issue_number = issue_number;
    ev.event_type = string_field(e, "event", where);
    if (e.contains("commit_id") && !e["commit_id"].is_null()) {
      ev.commit_id = string_field(e, "commit_id", where);
      if (!is_hex40(*ev.commit_id)) throw ParseError(where + ".commit_id: expected 40 hex digits");
      ev.commit_id = lower(*ev.commit_id);
    }
    if (e.contains("commit_url") && e["commit_url"].is_string()) {
      ev.commit_repo = repo_from_commit_url(e["commit_url"].get<std::string>());
    }
    page.events.push_back(std::move(ev));
  }
  page.next_page = next_link(response.header("link"));
  return page;
}

std::vector<std::string> list_referencing_commits(const RepoRef& repo, long issue_number, Transport& transport,
                                                  std::vector<std::string>* notes) {
  std::vector<std::string> out;
  std::optional<std::string> path = issue_events_path(repo, issue_number);
  std::unordered_set<std::string> seen_pages;
  while (path) {
    if (!seen_pages.insert(*path).second) throw ParseError("issue events: pagination loops back to " + *path);
    const auto page = parse_issue_event_page(issue_number, transport.get(*path));
    for (const auto& ev : page.events) {
      if (ev.event_type != "referenced") continue;
      if (!ev.commit_id) {
        throw ParseError("issue " + std::to_string(issue_number) + " events: referenced event without commit_id");
      }
      if (ev.commit_repo && lower(*ev.commit_repo) != lower(repo.slug())) {
        if (notes) {
          notes->push_back("issue " + std::to_string(issue_number) + ": dropped cross-repository commit " +
                           *ev.commit_id + " from " + *ev.commit_repo);
        }
        continue;
      }
      out.push_back(*ev.commit_id);
    }
    path = page.next_page;
  }
  return out;
}

void CommitIssueMap::append(const std::string& commit, long issue) {
  auto [it, inserted] = lists_.try_emplace(commit);
  if (inserted) order_.push_back(commit);
  if (std::find(it->second.begin(), it->second.end(), issue) == it->second.end()) it->second.push_back(issue);
}

const std::vector<long>& CommitIssueMap::issues_for(const std::string& commit) const {
  static const std::vector<long> kEmpty;
  auto it = lists_.find(commit);
  return it == lists_.end() ? kEmpty : it->second;
}

std::string CommitIssueMap::to_jsonl() const {
  std::string out;
  for (const auto& c : order_) {
    out += json{{"commit", c}, {"issues", lists_.at(c)}}.dump();
    out += '\n';
  }
  return out;
}

CommitIssueMap CommitIssueMap::from_jsonl(std::string_view text) {
  CommitIssueMap m;
  for (const auto& line : parse_jsonl(text, "commit-issue map")) {
    const auto commit = line.at("commit").get<std::string>();
    for (long issue : line.at("issues").get<std::vector<long>>()) m.append(commit, issue);
  }
  return m;
}

MiningResult build_commit_issue_map(const RepoRef& repo, const std::vector<long>& issue_numbers, Transport& transport,
                                    const MinerOptions& options) {
  {
    std::unordered_set<long> unique(issue_numbers.begin(), issue_numbers.end());
    if (unique.size() != issue_numbers.size()) throw UsageError("issue numbers must be unique");
  }
  MiningResult result;
  std::unordered_map<long, std::vector<std::string>> done;
  std::ofstream checkpoint_out;
  if (options.checkpoint) {
    done = load_checkpoint(*options.checkpoint);
    if (options.checkpoint->has_parent_path()) std::filesystem::create_directories(options.checkpoint->parent_path());
    checkpoint_out.open(*options.checkpoint, std::ios::app);
    if (!checkpoint_out) throw UsageError("cannot open checkpoint " + options.checkpoint->string());
  }

  const std::size_t width = std::max<std::size_t>(1, options.parallelism);
  for (std::size_t batch = 0; batch < issue_numbers.size(); batch += width) {
    const std::size_t stop = std::min(issue_numbers.size(), batch + width);
    std::vector<std::future<IssueResult>> pending;
    for (std::size_t k = batch; k < stop; ++k) {
      const long issue = issue_numbers[k];
      if (done.count(issue)) {
        std::promise<IssueResult> ready;
        ready.set_value(IssueResult{done[issue], {}});
        pending.push_back(ready.get_future());
      } else {
        pending.push_back(std::async(std::launch::async, collect_issue, std::cref(repo), issue, std::ref(transport)));
      }
    }
    // Single writer: merge strictly in input order.
    for (std::size_t k = batch; k < stop; ++k) {
      const long issue = issue_numbers[k];
      IssueResult r = pending[k - batch].get();
      const bool from_checkpoint = done.count(issue) != 0;
      for (const auto& c : r.commits) result.map.append(c, issue);
      result.notes.insert(result.notes.end(), r.notes.begin(), r.notes.end());
      if (from_checkpoint) {
        ++result.issues_from_checkpoint;
      } else {
        ++result.issues_fetched;
        if (checkpoint_out.is_open()) {
          checkpoint_out << json{{"issue", issue}, {"commits", r.commits}}.dump() << '\n';
          checkpoint_out.flush();
        }
      }
    }
  }
  return result;
}

FetchedCommit fetch_commit_payload(const RepoRef& repo, const std::string& sha, Transport& transport) {
  const std::string path = commit_path(repo, sha);
  const std::string what = "commit " + sha;
  const auto resp = transport.get(path);
  check_status(resp, what, "commit");
  const json body = parse_body(resp, what);
  if (!body.is_object()) throw ParseError(what + ": expected an object");
  if (!body.contains("commit") || !body["commit"].is_object()) throw ParseError(what + ".commit: missing");

  FetchedCommit out;
  out.sha = body.contains("sha") && body["sha"].is_string() ? body["sha"].get<std::string>() : sha;
  out.record.message = string_field(body["commit"], "message", what + ".commit", true);
  if (body.contains("parents") && body["parents"].is_array()) out.merge = body["parents"].size() > 1;
  if (body.contains("files")) {
    if (!body["files"].is_array()) throw ParseError(what + ".files: expected an array");
    const auto& files = body["files"];
    for (std::size_t i = 0; i < files.size(); ++i) {
      const std::string where = what + ".files[" + std::to_string(i) + "]";
      FileChange f;
      f.path = string_field(files[i], "filename", where);
      if (files[i].contains("patch")) f.diff = string_field(files[i], "patch", where, true);
      out.record.files.push_back(std::move(f));
    }
    // The commit endpoint returns at most 300 files per page.
    out.truncated = files.size() >= 300;
  }
  if (next_link(resp.header("link"))) out.truncated = true;
  return out;
}

IssueRecord fetch_issue(const RepoRef& repo, long issue_number, Transport& transport) {
  const std::string what = "issue " + std::to_string(issue_number);
  const auto resp = transport.get(issue_path(repo, issue_number));
  check_status(resp, what, "issue");
  const json body = parse_body(resp, what);
  if (!body.is_object()) throw ParseError(what + ": expected an object");
  return IssueRecord{string_field(body, "title", what), string_field(body, "body", what, true)};
}

std::vector<FetchedCommit> assemble_records(const RepoRef& repo, const CommitIssueMap& map, Transport& transport) {
  std::unordered_map<long, IssueRecord> cache;
  std::vector<FetchedCommit> out;
  for (const auto& sha : map.commits()) {
    FetchedCommit fc = fetch_commit_payload(repo, sha, transport);
    for (long n : map.issues_for(sha)) {
      auto it = cache.find(n);
      if (it == cache.end()) it = cache.emplace(n, fetch_issue(repo, n, transport)).first;
      fc.record.issues.push_back(it->second);
    }
    out.push_back(std::move(fc));
  }
  return out;
}

}  // namespace commitissue::miner
