#include "commitissue/curator.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <regex>

#include "commitissue/error.hpp"
#include "commitissue/tokenizer.hpp"
#include "commitissue/utf8.hpp"

namespace commitissue {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool ieq_prefix(std::string_view s, std::size_t at, std::string_view prefix) {
  if (at + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[at + k])) != prefix[k]) return false;
  }
  return true;
}

// ---- code ------------------------------------------------------------------

std::string replace_fenced(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t bt = s.find("```", i);
    const std::size_t tl = s.find("~~~", i);
    const std::size_t p = std::min(bt, tl);
    if (p == std::string_view::npos) {
      out.append(s.substr(i));
      break;
    }
    out.append(s.substr(i, p - i));
    const std::string_view fence = s.substr(p, 3);
    const std::size_t close = s.find(fence, p + 3);
    out.append(kCodeToken);
    i = close == std::string_view::npos ? s.size() : close + 3;
  }
  return out;
}

bool blank_line(std::string_view line) { return line.find_first_not_of(" \t\r") == std::string_view::npos; }

bool indented_line(std::string_view line) {
  if (blank_line(line)) return false;
  return line.starts_with('\t') || line.starts_with("    ");
}

// A run of indented lines that follows a blank line (or starts the text)
// becomes a single "[CODE]" line.
std::string replace_indented(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    const std::size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(pos));
      break;
    }
    lines.push_back(s.substr(pos, nl - pos));
    pos = nl + 1;
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size();) {
    if (indented_line(lines[i]) && (i == 0 || blank_line(lines[i - 1]))) {
      std::size_t j = i;
      while (j < lines.size() && indented_line(lines[j])) ++j;
      out.append(kCodeToken);
      if (j < lines.size()) out.push_back('\n');
      i = j;
      continue;
    }
    out.append(lines[i]);
    if (i + 1 < lines.size()) out.push_back('\n');
    ++i;
  }
  return out;
}

std::string replace_inline_code(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '`') {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t run = i;
    while (run < s.size() && s[run] == '`') ++run;
    const std::size_t k = run - i;
    // Closing run of exactly k backticks on the same line.
    std::size_t j = run;
    std::size_t close = std::string_view::npos;
    while (j < s.size() && s[j] != '\n') {
      if (s[j] == '`') {
        std::size_t r = j;
        while (r < s.size() && s[r] == '`') ++r;
        if (r - j == k) {
          close = j;
          break;
        }
        j = r;
      } else {
        ++j;
      }
    }
    if (close != std::string_view::npos && close > run) {
      out.append(kCodeToken);
      i = close + k;
    } else {
      out.append(s.substr(i, k));
      i = run;
    }
  }
  return out;
}

// ---- links and URLs ----------------------------------------------------------

bool url_start(std::string_view s, std::size_t i) {
  if (i > 0 && (is_alnum(s[i - 1]) || s[i - 1] == '/' || s[i - 1] == '.')) return false;
  return ieq_prefix(s, i, "https://") || ieq_prefix(s, i, "http://") || ieq_prefix(s, i, "ftp://") ||
         ieq_prefix(s, i, "www.");
}

bool url_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u <= ' ') return false;
  constexpr std::string_view kStop = "<>\"'`()[]{}|\\";
  return kStop.find(c) == std::string_view::npos;
}

// End of a URL that starts at i, or i when there is nothing after the scheme.
std::size_t url_end(std::string_view s, std::size_t i) {
  std::size_t scheme = 0;
  for (std::string_view p : {"https://", "http://", "ftp://", "www."}) {
    if (ieq_prefix(s, i, p)) {
      scheme = p.size();
      break;
    }
  }
  std::size_t j = i + scheme;
  while (j < s.size() && url_char(s[j])) ++j;
  constexpr std::string_view kTrailing = ".,;:!?*";
  while (j > i + scheme && kTrailing.find(s[j - 1]) != std::string_view::npos) --j;
  return j > i + scheme ? j : i;
}

bool is_url_target(std::string_view target) {
  return ieq_prefix(target, 0, "https://") || ieq_prefix(target, 0, "http://") || ieq_prefix(target, 0, "ftp://") ||
         ieq_prefix(target, 0, "www.");
}

// "[text](target)" starting at i. Returns the position after ')' or npos.
std::size_t markdown_link(std::string_view s, std::size_t i, std::string_view& text, std::string_view& target) {
  if (i >= s.size() || s[i] != '[') return std::string_view::npos;
  std::size_t j = i + 1;
  while (j < s.size() && s[j] != ']' && s[j] != '\n' && s[j] != '[') ++j;
  if (j >= s.size() || s[j] != ']' || j + 1 >= s.size() || s[j + 1] != '(') return std::string_view::npos;
  std::size_t k = j + 2;
  while (k < s.size() && s[k] != ')' && s[k] != '\n' && s[k] != '(') ++k;
  if (k >= s.size() || s[k] != ')') return std::string_view::npos;
  text = s.substr(i + 1, j - i - 1);
  target = s.substr(j + 2, k - j - 2);
  return k + 1;
}

std::string replace_links_and_urls(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::string_view text;
    std::string_view target;
    if (s[i] == '!' && i + 1 < s.size() && s[i + 1] == '[') {
      const std::size_t end = markdown_link(s, i + 1, text, target);
      if (end != std::string_view::npos) {
        out.append(kUrlToken);
        i = end;
        continue;
      }
    }
    if (s[i] == '[') {
      const std::size_t end = markdown_link(s, i, text, target);
      if (end != std::string_view::npos && is_url_target(target)) {
        out.append(text);
        if (!text.empty()) out.push_back(' ');
        out.append(kUrlToken);
        i = end;
        continue;
      }
    }
    if (url_start(s, i)) {
      const std::size_t end = url_end(s, i);
      if (end > i) {
        out.append(kUrlToken);
        i = end;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::string normalize_body_once(std::string_view body) {
  std::string s = replace_fenced(body);
  s = replace_indented(s);
  s = replace_inline_code(s);
  return replace_links_and_urls(s);
}

// ---- issue references -------------------------------------------------------

bool ref_prefix_char(char c) { return is_alnum(c) || c == '_' || c == '.' || c == '-' || c == '/'; }

std::string normalize_message_once(std::string_view m) {
  std::string out;
  std::size_t i = 0;
  while (i < m.size()) {
    // GH-123
    if (ieq_prefix(m, i, "gh-") && (i == 0 || !is_alnum(m[i - 1]))) {
      std::size_t j = i + 3;
      while (j < m.size() && std::isdigit(static_cast<unsigned char>(m[j]))) ++j;
      if (j > i + 3 && (j == m.size() || !(is_alnum(m[j]) || m[j] == '_'))) {
        out.append(kIssueNumberToken);
        i = j;
        continue;
      }
    }
    if (m[i] == '#') {
      std::size_t j = i + 1;
      while (j < m.size() && std::isdigit(static_cast<unsigned char>(m[j]))) ++j;
      const bool digits = j > i + 1 && (j == m.size() || !(is_alnum(m[j]) || m[j] == '_'));
      if (digits) {
        // Walk back over an "owner/repo" qualifier glued to the '#'.
        std::size_t q = out.size();
        while (q > 0 && ref_prefix_char(out[q - 1])) --q;
        const std::string_view qualifier(out.data() + q, out.size() - q);
        const bool qualified = qualifier.find('/') != std::string_view::npos && qualifier.front() != '/' &&
                               qualifier.back() != '/';
        const bool standalone = i == 0 || !(is_alnum(m[i - 1]) || m[i - 1] == '&' || m[i - 1] == '#' || m[i - 1] == '_');
        if (qualified || standalone) {
          if (qualified) out.resize(q);
          out.append(kIssueNumberToken);
          i = j;
          continue;
        }
      }
    }
    out.push_back(m[i++]);
  }
  return out;
}

}  // namespace

std::string normalize_issue_body(std::string_view body) {
  // Replacements can expose new patterns (an image whose alt text was a link),
  // so iterate to a fixed point.
  std::string cur(body);
  for (int pass = 0; pass < 16; ++pass) {
    std::string next = normalize_body_once(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

std::string normalize_commit_message(std::string_view m) {
  // A token can expose a reference glued to it ("GH-3#12"), so repeat.
  std::string cur(m);
  for (int pass = 0; pass < 16; ++pass) {
    std::string next = normalize_message_once(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

CommitRecord normalize_record(CommitRecord record) {
  record.message = normalize_commit_message(record.message);
  for (auto& issue : record.issues) issue.body = normalize_issue_body(issue.body);
  return record;
}

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::bot:
      return "bot";
    case DropReason::trivial:
      return "trivial";
    case DropReason::non_english:
      return "non_english";
    case DropReason::length:
      return "length";
    case DropReason::no_issues:
      return "no_issues";
    case DropReason::no_files:
      return "no_files";
  }
  return "trivial";
}

namespace {

constexpr std::array<MessageRule, 15> kRules = {{
    // Bot signatures.
    {"maven-release-plugin", DropReason::bot, R"(^\[maven-release-plugin\])"},
    {"dependency-bump", DropReason::bot, R"(^(build\(deps(-dev)?\): |chore\(deps(-dev)?\): )?bump \S+ from \S+ to \S+)"},
    {"dependency-update", DropReason::bot, R"(^(chore\(deps\): )?update (dependency|module|plugin) \S+ to \S+)"},
    {"auto-generated", DropReason::bot,
     R"(^(auto[- ]?generated|automatic(ally)? (generated|update|commit)|auto[- ]?commit|auto[- ]?update)\b)"},
    {"bot-tag", DropReason::bot, R"(^\[(bot|automated|auto|skip ci|ci skip)\])"},
    {"release-preparation", DropReason::bot,
     R"(^(prepare|preparing) (for )?(the )?(next )?(release|development|snapshot|version|iteration)\b)"},
    {"version-bump", DropReason::bot,
     R"(^(bump|bumped|bumping|set|update|updated) (the )?(project )?version( number)? to v?\d+(\.\d+)+\S*$)"},
    {"changelog-update", DropReason::bot, R"(^(update|updated|regenerate|regenerated) (the )?changelog\b)"},
    // Trivial or boilerplate messages.
    {"ignore-update", DropReason::trivial, R"(^ignore update\s*'.*'$)"},
    {"merge", DropReason::trivial,
     R"(^merged? (branch|pull request|remote-tracking branch|tag|commit|in|changes from|\S+ into)\b)"},
    {"rollback", DropReason::trivial, R"(^(revert|reverted|reverting|rollback|roll back|rolled back)\b)"},
    {"issue-reference-only", DropReason::trivial,
     R"(^((fix(es|ed)?|close[sd]?|resolve[sd]?|see|refs?|issue|for)\s*:?\s*)?\[ISSUE_NUMBER\](\s*(,|and|&)?\s*\[ISSUE_NUMBER\])*\s*\.?$)"},
    {"single-file-update", DropReason::trivial, R"(^(update|updated|create|created|delete|deleted|rename|renamed) \S+\.[a-z0-9]+$)"},
    {"placeholder-message", DropReason::trivial,
     R"(^(wip|typo|typos|fix typo|minor|minor fix|cleanup|formatting|update|updates|fix|fixes|init|initial commit|\.|-|no message)\.?$)"},
    {"version-only", DropReason::trivial, R"(^v?\d+(\.\d+)+([-.]\w+)?$)"},
}};

struct CompiledRules {
  std::vector<std::regex> regexes;
  CompiledRules() {
    for (const auto& r : kRules) {
      regexes.emplace_back(std::string(r.pattern), std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    }
  }
};

const CompiledRules& compiled() {
  static const CompiledRules c;
  return c;
}

std::string first_line_trimmed(std::string_view s) {
  const std::size_t nl = s.find('\n');
  std::string_view line = s.substr(0, nl);
  const auto b = line.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = line.find_last_not_of(" \t\r");
  return std::string(line.substr(b, e - b + 1));
}

// Unicode ranges that hold punctuation, symbols or emoji rather than letters.
bool non_letter_range(char32_t c) {
  return c < 0xC0 || c == 0xD7 || c == 0xF7 || (c >= 0x2000 && c <= 0x2BFF) || (c >= 0x3000 && c <= 0x303F) ||
         (c >= 0xE000 && c <= 0xF8FF) || (c >= 0xFE30 && c <= 0xFE4F) || (c >= 0xFF00 && c <= 0xFF20) ||
         (c >= 0x1F000 && c <= 0x1FAFF);
}

std::size_t token_count(std::string_view text) { return tokenize(text).size(); }

}  // namespace

std::span<const MessageRule> message_rules() { return kRules; }

std::optional<MessageRule> match_message_rule(std::string_view message) {
  const std::string line = first_line_trimmed(normalize_commit_message(message));
  const auto& rx = compiled().regexes;
  for (std::size_t i = 0; i < kRules.size(); ++i) {
    if (std::regex_search(line, rx[i])) return kRules[i];
  }
  return std::nullopt;
}

bool is_english(std::string_view text, double threshold) {
  std::size_t ascii = 0;
  std::size_t letters = 0;
  for (char32_t c : utf8::decode(text)) {
    if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) {
      ++ascii;
      ++letters;
    } else if (!non_letter_range(c)) {
      ++letters;
    }
  }
  if (letters == 0) return false;
  return static_cast<double>(ascii) >= threshold * static_cast<double>(letters);
}

FilterDecision filter_record(const CommitRecord& record, const FilterOptions& options) {
  FilterDecision d;
  auto drop = [&](DropReason reason, std::string rule, std::string detail) {
    d.keep = false;
    d.reason = reason;
    d.rule = std::move(rule);
    d.detail = std::move(detail);
    return d;
  };

  if (auto rule = match_message_rule(record.message)) {
    return drop(rule->reason, std::string(rule->name), "commit message matches " + std::string(rule->name));
  }

  if (!is_english(record.message, options.english_threshold)) {
    return drop(DropReason::non_english, "commit_message", "commit message is not classified as English");
  }
  for (std::size_t i = 0; i < record.issues.size(); ++i) {
    if (!is_english(record.issues[i].title, options.english_threshold)) {
      const std::string f = "issues[" + std::to_string(i) + "].title";
      return drop(DropReason::non_english, f, f + " is not classified as English");
    }
  }

  auto over = [&](std::string_view text, const std::string& field) -> bool {
    const std::size_t n = token_count(text);
    if (n <= options.token_limit) return false;
    drop(DropReason::length, field,
         field + " has " + std::to_string(n) + " tokens, limit " + std::to_string(options.token_limit));
    return true;
  };
  if (over(record.message, "commit_message")) return d;
  for (std::size_t i = 0; i < record.issues.size(); ++i) {
    const std::string base = "issues[" + std::to_string(i) + "]";
    if (over(record.issues[i].title, base + ".title")) return d;
    if (over(record.issues[i].body, base + ".body")) return d;
  }
  for (std::size_t i = 0; i < record.files.size(); ++i) {
    if (over(record.files[i].diff, "files[" + std::to_string(i) + "].diff")) return d;
  }

  if (record.issues.empty()) return drop(DropReason::no_issues, "issues", "record references no issue");
  if (record.files.empty()) return drop(DropReason::no_files, "files", "record changes no file");
  return d;
}

SplitSizes split_sizes(std::size_t n) {
  const std::size_t tenth = n / 10;
  return {n - 2 * tenth, tenth, tenth};
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    // Uniform draw in [0, i) without modulo bias.
    const std::uint64_t bound = i;
    const std::uint64_t limit = (0 - bound) % bound;
    std::uint64_t x = rng();
    while (x < limit) x = rng();
    std::swap(p[i - 1], p[x % bound]);
  }
  return p;
}

SplitIndices stratify_indices(std::size_t n, std::uint64_t seed) {
  if (n < 10) {
    throw UsageError("an 8:1:1 split needs at least 10 records (got " + std::to_string(n) +
                     "); smaller corpora would leave the validation or test split empty");
  }
  const auto sizes = split_sizes(n);
  const auto p = seeded_permutation(n, seed);
  SplitIndices out;
  out.train.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(sizes.train));
  out.valid.assign(p.begin() + static_cast<std::ptrdiff_t>(sizes.train),
                   p.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.valid));
  out.test.assign(p.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.valid), p.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace commitissue
