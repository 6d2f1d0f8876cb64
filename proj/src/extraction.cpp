#include "commitissue/extraction.hpp"

#include <algorithm>

#include "commitissue/error.hpp"
#include "commitissue/utf8.hpp"

namespace commitissue {
namespace {

using Phrase = std::vector<std::string>;

std::vector<Phrase> split_phrases(const std::vector<std::string_view>& phrases) {
  std::vector<Phrase> out;
  for (auto p : phrases) out.push_back(metric_tokens(p));
  return out;
}

bool phrase_at(const std::vector<std::string>& words, std::size_t i, const Phrase& phrase) {
  if (phrase.empty() || i + phrase.size() > words.size()) return false;
  return std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(i));
}

int count_hits(const std::vector<std::string>& words, const std::vector<Phrase>& phrases) {
  int hits = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (const auto& p : phrases) hits += phrase_at(words, i, p) ? 1 : 0;
  }
  return hits;
}

std::string lower_ascii(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos; }

}  // namespace

std::string_view type_token(IssueType type) {
  switch (type) {
    case IssueType::bug_report:
      return kBugReportToken;
    case IssueType::feature_request:
      return kFeatureRequestToken;
    case IssueType::enhancement:
      return kEnhancementToken;
  }
  return kEnhancementToken;
}

std::vector<std::string> TypedIssueText::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

TypedIssueText prepend_type_token(const IssueRecord& issue, IssueType type) {
  if (blank(issue.title)) throw DataError("issues[].title: must be non-empty after trimming");
  TypedIssueText t;
  t.type = type;
  t.issue = issue;
  const std::string_view marker = type_token(type);
  t.text.reserve(marker.size() + issue.title.size() + issue.body.size() + 2);
  t.text.append(marker);
  t.text.push_back(' ');
  t.text.append(issue.title);
  t.text.push_back('\n');
  t.text.append(issue.body);
  t.title_offset = marker.size() + 1;
  t.title_length = utf8::length(issue.title);
  t.body_offset = t.title_offset + t.title_length + 1;
  t.body_length = utf8::length(issue.body);
  t.tokens = tokenize(t.text);
  return t;
}

// ---- classifier ---------------------------------------------------------------

const std::vector<std::string_view>& KeywordIssueClassifier::keywords(IssueType type) {
  static const std::vector<std::string_view> kBug = {
      "bug",        "crash",     "crashes",    "crashed",     "npe",        "nullpointerexception",
      "exception",  "error",     "errors",     "fail",        "fails",      "failed",
      "failure",    "broken",    "wrong",      "incorrect",   "regression", "throws",
      "stack trace", "stacktrace", "does not work", "doesn't work", "not working", "unexpected",
      "hang",       "hangs",     "leak"};
  static const std::vector<std::string_view> kFeature = {
      "feature",        "add support",   "support for", "new option",  "allow",     "allows",
      "ability to",     "would be nice", "would like",  "provide a way", "introduce", "implement",
      "add a",          "add an",        "add option",  "proposal",    "request"};
  static const std::vector<std::string_view> kEnhancement = {
      "improve",  "improvement", "improvements", "enhance",    "enhancement", "performance", "faster",
      "speed up", "optimize",    "optimization", "refactor",   "cleanup",     "clean up",    "simplify",
      "better",   "compatibility", "reduce",     "memory usage", "slow"};
  switch (type) {
    case IssueType::bug_report:
      return kBug;
    case IssueType::feature_request:
      return kFeature;
    case IssueType::enhancement:
      return kEnhancement;
  }
  return kEnhancement;
}

std::array<int, 3> KeywordIssueClassifier::scores(const IssueRecord& issue) const {
  static const std::array<std::vector<Phrase>, 3> kPhrases = {
      split_phrases(keywords(IssueType::bug_report)), split_phrases(keywords(IssueType::feature_request)),
      split_phrases(keywords(IssueType::enhancement))};
  const auto title = metric_tokens(issue.title);
  const auto body = metric_tokens(issue.body);
  std::array<int, 3> s{};
  for (std::size_t k = 0; k < 3; ++k) s[k] = 2 * count_hits(title, kPhrases[k]) + count_hits(body, kPhrases[k]);
  return s;
}

IssueType KeywordIssueClassifier::classify(const IssueRecord& issue) const {
  const auto s = scores(issue);
  if (s[0] == 0 && s[1] == 0 && s[2] == 0) return IssueType::enhancement;
  // max_element keeps the first maximum, which gives the documented tie order.
  const auto best = std::max_element(s.begin(), s.end()) - s.begin();
  return static_cast<IssueType>(best);
}

IssueType classify_issue_type(const IssueRecord& issue, const IssueTypeClassifier& model) {
  return model.classify(issue);
}

// ---- taggers ------------------------------------------------------------------

const std::vector<std::string_view>& LexicalStateTagger::actual_triggers() {
  static const std::vector<std::string_view> k = {
      "crash",     "crashes",  "crashed",  "crashing", "fail",     "fails",     "failed",     "failing",
      "throws",    "threw",    "thrown",   "throwing", "hang",     "hangs",     "hanging",    "freezes",
      "froze",     "breaks",   "broke",    "broken",   "leaks",    "leaking",   "ignores",    "ignored",
      "returns",   "returned", "shows",    "showed",   "displays", "produces",  "gives",      "error",
      "errors",    "exception", "npe",     "nullpointerexception", "cannot",   "unable",    "incorrect",
      "incorrectly", "wrong",  "actual",   "actually", "currently", "doesn't", "isn't",     "can't",
      "won't"};
  return k;
}

const std::vector<std::string_view>& LexicalStateTagger::expected_triggers() {
  static const std::vector<std::string_view> k = {
      "should",  "expected", "expect",  "expecting", "expects", "would like", "must",   "instead",
      "ideally", "desired",  "want",    "wanted",    "needs to", "need to"};
  return k;
}

std::vector<Tag> LexicalStateTagger::tag(const TypedIssueText& typed) const {
  static const std::vector<Phrase> kActual = split_phrases(actual_triggers());
  static const std::vector<Phrase> kExpected = split_phrases(expected_triggers());

  const auto& toks = typed.tokens;
  std::vector<Tag> tags(toks.size(), Tag::O);
  std::vector<std::string> words;
  words.reserve(toks.size());
  for (const auto& t : toks) words.push_back(lower_ascii(t.text));

  const auto cps = utf8::decode(typed.text);
  const std::size_t title_end = typed.title_offset + typed.title_length;
  auto gap_has_newline = [&](std::size_t from, std::size_t to) {
    for (std::size_t c = from; c < to && c < cps.size(); ++c) {
      if (cps[c] == U'\n') return true;
    }
    return false;
  };
  auto is_terminator = [&](std::size_t i) {
    const auto& w = words[i];
    if (w != "." && w != "!" && w != "?" && w != ";") return false;
    // "file.txt" is not a sentence end; the terminator has to be followed by
    // whitespace or the end of the text.
    return i + 1 == toks.size() || toks[i + 1].start > toks[i].end;
  };

  // Clauses as [begin, end) token ranges; token 0 is the type marker.
  std::vector<std::pair<std::size_t, std::size_t>> clauses;
  std::size_t begin = 1;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    const bool crosses_field = toks[i - 1].end <= title_end && toks[i].start > title_end;
    if (i > begin && (crosses_field || gap_has_newline(toks[i - 1].end, toks[i].start))) {
      clauses.emplace_back(begin, i);
      begin = i;
    }
    if (is_terminator(i)) {
      if (i > begin) clauses.emplace_back(begin, i);
      begin = i + 1;
    }
  }
  if (begin < toks.size()) clauses.emplace_back(begin, toks.size());

  for (auto [b, e] : clauses) {
    for (std::size_t i = b; i < e; ++i) {
      std::optional<StateType> type;
      for (const auto& p : kExpected) {
        if (phrase_at(words, i, p)) type = StateType::expected;
      }
      if (!type) {
        for (const auto& p : kActual) {
          if (phrase_at(words, i, p)) type = StateType::actual;
        }
      }
      if (!type) continue;
      tags[i] = *type == StateType::actual ? Tag::B_AS : Tag::B_ES;
      for (std::size_t k = i + 1; k < e; ++k) tags[k] = *type == StateType::actual ? Tag::I_AS : Tag::I_ES;
      break;
    }
  }
  return tags;
}

GoldReplayTagger::GoldReplayTagger(const std::vector<AnnotatedCommitRecord>& records) {
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.record.issues.size() && i < r.annotations.size(); ++i) {
      add(r.record.issues[i], r.annotations[i].spans);
    }
  }
}

void GoldReplayTagger::add(const IssueRecord& issue, const std::vector<StateSpan>& spans) {
  gold_[{issue.title, issue.body}] = spans;
}

std::vector<Tag> GoldReplayTagger::tag(const TypedIssueText& typed) const {
  auto it = gold_.find({typed.issue.title, typed.issue.body});
  if (it == gold_.end()) return std::vector<Tag>(typed.tokens.size(), Tag::O);
  return gold_sequence(typed, it->second).tags;
}

std::vector<StateSpan> to_typed_coordinates(const TypedIssueText& typed, const std::vector<StateSpan>& spans) {
  std::vector<StateSpan> out;
  out.reserve(spans.size());
  for (auto s : spans) {
    const std::size_t base = s.location == Location::title ? typed.title_offset : typed.body_offset;
    const std::size_t len = s.location == Location::title ? typed.title_length : typed.body_length;
    if (s.start >= s.end || s.end > len) {
      throw DataError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) + ") outside the issue " +
                      std::string(to_string(s.location)));
    }
    s.start += base;
    s.end += base;
    out.push_back(s);
  }
  return out;
}

TaggedSequence gold_sequence(const TypedIssueText& typed, const std::vector<StateSpan>& spans) {
  return encode_bio(typed.tokens, to_typed_coordinates(typed, spans));
}

TaggedSequence tag_state_info(const TypedIssueText& typed, const StateTagger& model) {
  auto tags = model.tag(typed);
  if (tags.size() != typed.tokens.size()) {
    throw DataError("tagger returned " + std::to_string(tags.size()) + " tags for " +
                    std::to_string(typed.tokens.size()) + " tokens");
  }
  if (!tags.empty()) tags[0] = Tag::O;
  return TaggedSequence{typed.tokens, repair_bio(tags)};
}

std::vector<StateSpan> spans_from_tags(const TypedIssueText& typed, const std::vector<Tag>& tags) {
  if (tags.size() != typed.tokens.size()) throw DataError("tag count does not match token count");
  const std::size_t title_end = typed.title_offset + typed.title_length;
  TaggedSequence title;
  TaggedSequence body;
  for (std::size_t i = 1; i < typed.tokens.size(); ++i) {
    Token t = typed.tokens[i];
    if (t.end <= title_end) {
      t.start -= typed.title_offset;
      t.end -= typed.title_offset;
      title.tokens.push_back(std::move(t));
      title.tags.push_back(tags[i]);
    } else {
      t.start -= typed.body_offset;
      t.end -= typed.body_offset;
      body.tokens.push_back(std::move(t));
      body.tags.push_back(tags[i]);
    }
  }
  auto out = decode_bio(title, Location::title);
  auto b = decode_bio(body, Location::body);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

IssueAnnotation annotate_issue(const IssueRecord& issue, const IssueTypeClassifier& classifier,
                               const StateTagger& tagger) {
  IssueAnnotation a;
  a.issue_type = classify_issue_type(issue, classifier);
  const auto typed = prepend_type_token(issue, a.issue_type);
  const auto tagged = tag_state_info(typed, tagger);
  a.spans = spans_from_tags(typed, tagged.tags);
  return a;
}

AnnotatedCommitRecord annotate_record(const CommitRecord& record, const IssueTypeClassifier& classifier,
                                      const StateTagger& tagger) {
  AnnotatedCommitRecord out;
  out.record = record;
  for (const auto& issue : record.issues) out.annotations.push_back(annotate_issue(issue, classifier, tagger));
  return out;
}

// ---- fuzzy matching -------------------------------------------------------------

std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Rolling row over the shorter string.
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(up, row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

FuzzyMatch fuzzy_match(std::string_view predicted, std::string_view gold, double tau) {
  const auto p = utf8::decode(predicted);
  const auto g = utf8::decode(gold);
  FuzzyMatch m;
  if (p.empty() && g.empty()) {
    m.similarity = 1.0;
  } else {
    m.similarity = 2.0 * static_cast<double>(lcs_length(p, g)) / static_cast<double>(p.size() + g.size());
  }
  m.match = m.similarity >= tau;
  return m;
}

std::vector<ExtractedSpan> resolve_spans(const IssueRecord& issue, std::vector<StateSpan> spans) {
  sort_spans(spans);
  std::vector<ExtractedSpan> out;
  out.reserve(spans.size());
  for (const auto& s : spans) out.push_back(ExtractedSpan{s.location, s.state_type, span_text(issue, s)});
  return out;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

ClassScores scores_from_counts(std::size_t tp, std::size_t predicted, std::size_t gold) {
  ClassScores c;
  c.true_positives = tp;
  c.predicted = predicted;
  c.gold = gold;
  c.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  c.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
  c.f1 = f1_score(c.precision, c.recall);
  return c;
}

nlohmann::json ExtractionReport::to_json() const {
  auto cls = [](const ClassScores& c) {
    return nlohmann::json{{"P", 100.0 * c.precision},
                          {"R", 100.0 * c.recall},
                          {"F1", 100.0 * c.f1},
                          {"true_positives", c.true_positives},
                          {"predicted", c.predicted},
                          {"gold", c.gold}};
  };
  return nlohmann::json{{"actual_state", cls(actual)},
                        {"expected_state", cls(expected)},
                        {"micro_f1", 100.0 * micro.f1},
                        {"micro", cls(micro)},
                        {"tau", tau}};
}

ExtractionReport evaluate_extraction(const std::vector<std::vector<ExtractedSpan>>& predictions,
                                     const std::vector<std::vector<ExtractedSpan>>& gold, double tau) {
  if (predictions.size() != gold.size()) {
    throw UsageError("predictions cover " + std::to_string(predictions.size()) + " issues but gold covers " +
                     std::to_string(gold.size()));
  }
  std::array<std::size_t, 2> tp{}, pred{}, gold_n{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::vector<bool> used(gold[i].size(), false);
    for (const auto& g : gold[i]) ++gold_n[static_cast<std::size_t>(g.state_type)];
    for (const auto& p : predictions[i]) {
      const auto k = static_cast<std::size_t>(p.state_type);
      ++pred[k];
      for (std::size_t j = 0; j < gold[i].size(); ++j) {
        const auto& g = gold[i][j];
        if (used[j] || g.state_type != p.state_type || g.location != p.location) continue;
        if (fuzzy_match(p.text, g.text, tau).match) {
          used[j] = true;
          ++tp[k];
          break;
        }
      }
    }
  }
  ExtractionReport r;
  r.tau = tau;
  r.actual = scores_from_counts(tp[0], pred[0], gold_n[0]);
  r.expected = scores_from_counts(tp[1], pred[1], gold_n[1]);
  r.micro = scores_from_counts(tp[0] + tp[1], pred[0] + pred[1], gold_n[0] + gold_n[1]);
  return r;
}

}  // namespace commitissue
