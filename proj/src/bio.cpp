#include "commitissue/bio.hpp"

#include <algorithm>
#include <numeric>

#include "commitissue/error.hpp"

namespace commitissue {
namespace {

bool is_inside(Tag t) { return t == Tag::I_AS || t == Tag::I_ES; }
bool is_begin(Tag t) { return t == Tag::B_AS || t == Tag::B_ES; }

StateType tag_type(Tag t) { return (t == Tag::B_AS || t == Tag::I_AS) ? StateType::actual : StateType::expected; }

Tag begin_of(StateType s) { return s == StateType::actual ? Tag::B_AS : Tag::B_ES; }
Tag inside_of(StateType s) { return s == StateType::actual ? Tag::I_AS : Tag::I_ES; }

// An I- tag continues the previous tag only if that tag is B-/I- of the same type.
bool continues(Tag prev, Tag cur) { return prev != Tag::O && tag_type(prev) == tag_type(cur); }

}  // namespace

std::string_view to_string(Tag tag) {
  switch (tag) {
    case Tag::O:
      return "O";
    case Tag::B_AS:
      return "B-AS";
    case Tag::I_AS:
      return "I-AS";
    case Tag::B_ES:
      return "B-ES";
    case Tag::I_ES:
      return "I-ES";
  }
  return "O";
}

std::optional<Tag> parse_tag(std::string_view s) {
  for (Tag t : {Tag::O, Tag::B_AS, Tag::I_AS, Tag::B_ES, Tag::I_ES}) {
    if (s == to_string(t)) return t;
  }
  if (s == "B_AS") return Tag::B_AS;
  if (s == "I_AS") return Tag::I_AS;
  if (s == "B_ES") return Tag::B_ES;
  if (s == "I_ES") return Tag::I_ES;
  return std::nullopt;
}

bool is_well_formed(std::span<const Tag> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!is_inside(tags[i])) continue;
    if (i == 0 || !continues(tags[i - 1], tags[i])) return false;
  }
  return true;
}

std::vector<Tag> repair_bio(std::span<const Tag> tags) {
  std::vector<Tag> out(tags.begin(), tags.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (is_inside(out[i]) && (i == 0 || !continues(out[i - 1], out[i]))) out[i] = begin_of(tag_type(out[i]));
  }
  return out;
}

TaggedSequence encode_bio(std::vector<Token> tokens, const std::vector<StateSpan>& spans) {
  std::vector<std::size_t> order(spans.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spans[a].start != spans[b].start ? spans[a].start < spans[b].start : a < b;
  });
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const auto& a = spans[order[k]];
    const auto& b = spans[order[k + 1]];
    if (b.start < a.end) {
      throw DataError("spans " + std::to_string(order[k]) + " [" + std::to_string(a.start) + ", " +
                      std::to_string(a.end) + ") and " + std::to_string(order[k + 1]) + " [" +
                      std::to_string(b.start) + ", " + std::to_string(b.end) + ") overlap");
    }
  }

  TaggedSequence seq;
  seq.tags.assign(tokens.size(), Tag::O);
  for (std::size_t idx : order) {
    const auto& span = spans[idx];
    bool first = true;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const auto& tok = tokens[t];
      if (tok.end <= span.start) continue;
      if (tok.start >= span.end) break;
      if (seq.tags[t] != Tag::O) continue;
      seq.tags[t] = first ? begin_of(span.state_type) : inside_of(span.state_type);
      first = false;
    }
  }
  seq.tokens = std::move(tokens);
  return seq;
}

std::vector<StateSpan> decode_bio(const TaggedSequence& seq, Location location) {
  if (seq.tags.size() != seq.tokens.size()) {
    throw DataError("tagged sequence has " + std::to_string(seq.tokens.size()) + " tokens but " +
                    std::to_string(seq.tags.size()) + " tags");
  }
  std::vector<StateSpan> out;
  Tag prev = Tag::O;
  for (std::size_t i = 0; i < seq.tags.size(); ++i) {
    const Tag t = seq.tags[i];
    if (t == Tag::O) {
      prev = t;
      continue;
    }
    if (is_begin(t) || !continues(prev, t)) {
      out.push_back(StateSpan{location, tag_type(t), seq.tokens[i].start, seq.tokens[i].end});
    } else {
      out.back().end = seq.tokens[i].end;
    }
    prev = t;
  }
  return out;
}

}  // namespace commitissue
