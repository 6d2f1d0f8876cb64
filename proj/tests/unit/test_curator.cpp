#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "commitissue/curator.hpp"
#include "commitissue/error.hpp"
#include "commitissue/record_io.hpp"
#include "support.hpp"

using namespace commitissue;

namespace {

CommitRecord good_record() {
  CommitRecord r;
  r.message = "Fix null check in config loader";
  r.issues.push_back({"Crash without config", "The loader throws when the file is missing."});
  r.files.push_back({"src/Loader.java", "@@ -1 +1 @@\n-a\n+b"});
  return r;
}

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += i ? " w" : "w";
  return s;
}

}  // namespace

TEST_CASE("normalize_issue_body examples") {
  CHECK(normalize_issue_body("see https://x.y/z for details") == "see [URL] for details");
  CHECK(normalize_issue_body("run: ```a=1```") == "run: [CODE]");
  CHECK(normalize_issue_body("already [URL] and [CODE]") == "already [URL] and [CODE]");
  CHECK(normalize_issue_body("call `foo()` now") == "call [CODE] now");
  CHECK(normalize_issue_body("Trace:\n```java\nat A.b()\n```\nafter") == "Trace:\n[CODE]\nafter");
  CHECK(normalize_issue_body("see [docs](https://d.io/x) and ![img](http://i/p.png)") == "see docs [URL] and [URL]");
  CHECK(normalize_issue_body("end with www.example.com.") == "end with [URL].");
  CHECK(normalize_issue_body("Text\n\n    int x = 1;\n    y();\nmore") == "Text\n\n[CODE]\nmore");
}

TEST_CASE("normalize_commit_message examples") {
  CHECK(normalize_commit_message("Fixes issue #1234") == "Fixes issue [ISSUE_NUMBER]");
  CHECK(normalize_commit_message("bump to 2.0") == "bump to 2.0");
  CHECK(normalize_commit_message("close #1, #2") == "close [ISSUE_NUMBER], [ISSUE_NUMBER]");
  CHECK(normalize_commit_message("see GH-77 and acme/widget#5") == "see [ISSUE_NUMBER] and [ISSUE_NUMBER]");
  CHECK(normalize_commit_message("color a#12 stays") == "color a#12 stays");
  CHECK(normalize_commit_message("GH-3#12") == "[ISSUE_NUMBER][ISSUE_NUMBER]");
}

TEST_CASE("normalization is idempotent on random markdown-like text") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> pieces = {
      "word ", "```", "~~~", "`", "``", "\n", "\n\n", "    indented\n", "http://a.b/c", "www.x.org",
      "[t](http://l.k)", "![i](u.png)", "[URL]", "[CODE]", "#12 ", "GH-3", ". ", "(", ")", "é", "\t"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1), len(0, 40);
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    for (auto k = len(rng); k > 0; --k) s += pieces[pick(rng)];
    const auto once = normalize_issue_body(s);
    REQUIRE(normalize_issue_body(once) == once);
    const auto msg = normalize_commit_message(s);
    REQUIRE(normalize_commit_message(msg) == msg);
  }
}

TEST_CASE("message rules") {
  auto rule = [](std::string_view m) {
    auto r = match_message_rule(m);
    return r ? std::string(r->name) : std::string();
  };
  CHECK(rule("ignore update ' .gitignore'") == "ignore-update");
  CHECK(rule("Merge branch 'dev' into main") == "merge");
  CHECK(rule("Merge pull request [ISSUE_NUMBER] from x/y") == "merge");
  CHECK(rule("Revert \"Add thing\"") == "rollback");
  CHECK(rule("Fixes [ISSUE_NUMBER]") == "issue-reference-only");
  CHECK(rule("[maven-release-plugin] prepare release 1.2") == "maven-release-plugin");
  CHECK(rule("Bump lodash from 4.17.1 to 4.17.21") == "dependency-bump");
  CHECK(rule("Bump version to 2.4.1") == "version-bump");
  CHECK(rule("Update README.md") == "single-file-update");
  CHECK(rule("1.2.3") == "version-only");
  CHECK(rule("wip") == "placeholder-message");
  CHECK(rule("Fix crash when config is missing") == "");
  CHECK(rule("Merge sort implementation for lists") == "");
  CHECK(message_rules().size() == 15);
}

TEST_CASE("is_english") {
  CHECK(is_english("Fix the crash"));
  CHECK_FALSE(is_english("修复配置加载崩溃"));
  CHECK_FALSE(is_english("1234 !!"));
  CHECK(is_english("Fix naïve café handling"));
}

TEST_CASE("filter_record") {
  SUBCASE("good record is kept") { CHECK(filter_record(good_record()).keep); }

  SUBCASE("trivial message") {
    auto r = good_record();
    r.message = "ignore update ' .gitignore'";
    auto d = filter_record(r);
    CHECK_FALSE(d.keep);
    CHECK(d.reason == DropReason::trivial);
    CHECK(d.rule == "ignore-update");
  }

  SUBCASE("token limit boundary on the body") {
    auto r = good_record();
    r.issues[0].body = words(1024);
    CHECK(filter_record(r).keep);
    r.issues[0].body = words(1025);
    auto d = filter_record(r);
    CHECK_FALSE(d.keep);
    CHECK(d.reason == DropReason::length);
  }

  SUBCASE("token limit applies to diffs and titles too") {
    auto r = good_record();
    r.files[0].diff = "+" + words(1025);
    CHECK(filter_record(r).reason == DropReason::length);
    FilterOptions small;
    small.token_limit = 3;
    CHECK(filter_record(good_record(), small).reason == DropReason::length);
  }

  SUBCASE("non-English message or title") {
    auto r = good_record();
    r.message = "修复配置加载崩溃";
    CHECK(filter_record(r).reason == DropReason::non_english);
    r = good_record();
    r.issues[0].title = "配置加载崩溃";
    CHECK(filter_record(r).reason == DropReason::non_english);
    r = good_record();
    r.issues[0].body = "配置加载崩溃";  // bodies are not checked
    CHECK(filter_record(r).keep);
  }

  SUBCASE("no issues, no files") {
    auto r = good_record();
    r.issues.clear();
    CHECK(filter_record(r).reason == DropReason::no_issues);
    r = good_record();
    r.files.clear();
    CHECK(filter_record(r).reason == DropReason::no_files);
  }

  SUBCASE("first failing check wins") {
    auto r = good_record();
    r.message = "Merge branch 'x'";
    r.files.clear();
    CHECK(filter_record(r).reason == DropReason::trivial);
  }
}

TEST_CASE("filter decisions do not depend on record order") {
  const auto corpus = read_commit_records(testsupport::data_path("toy_corpus.jsonl"));
  std::vector<bool> forward;
  for (const auto& r : corpus) forward.push_back(filter_record(r).keep);
  std::vector<bool> backward(corpus.size());
  for (std::size_t i = corpus.size(); i-- > 0;) backward[i] = filter_record(corpus[i]).keep;
  CHECK(forward == backward);
  CHECK(std::count(forward.begin(), forward.end(), false) == 2);
}

TEST_CASE("split sizes") {
  auto eq = [](SplitSizes s, std::size_t a, std::size_t b, std::size_t c) {
    return s.train == a && s.valid == b && s.test == c;
  };
  CHECK(eq(split_sizes(10), 8, 1, 1));
  CHECK(eq(split_sizes(19262), 15410, 1926, 1926));
  CHECK(eq(split_sizes(19), 17, 1, 1));
  CHECK_THROWS_AS(stratify_indices(9, 1), UsageError);
}

TEST_CASE("stratify is a seeded partition") {
  for (std::size_t n : {10u, 11u, 19u, 20u, 57u, 100u, 1001u}) {
    for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
      const auto a = stratify_indices(n, seed);
      const auto b = stratify_indices(n, seed);
      CHECK(a.train == b.train);
      CHECK(a.test == b.test);
      const auto sizes = split_sizes(n);
      CHECK(a.train.size() == sizes.train);
      CHECK(a.valid.size() == sizes.valid);
      CHECK(a.test.size() == sizes.test);
      std::set<std::size_t> all(a.train.begin(), a.train.end());
      all.insert(a.valid.begin(), a.valid.end());
      all.insert(a.test.begin(), a.test.end());
      CHECK(all.size() == n);
      CHECK(*all.rbegin() == n - 1);
      CHECK(std::is_sorted(a.train.begin(), a.train.end()));
    }
  }
  CHECK(stratify_indices(100, 1).test != stratify_indices(100, 2).test);
}

TEST_CASE("seeded permutation is a permutation and pinned") {
  auto p = seeded_permutation(50, 7);
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(50);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
  CHECK(p != iota);
  CHECK(seeded_permutation(50, 7) == p);
}

TEST_CASE("stratify keeps records") {
  std::vector<int> xs(30);
  std::iota(xs.begin(), xs.end(), 100);
  const auto s = stratify(xs, 5);
  CHECK(s.train.size() == 24);
  CHECK(s.valid.size() == 3);
  CHECK(s.test.size() == 3);
}
