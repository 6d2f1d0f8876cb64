#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "commitissue/schema.hpp"
#include "commitissue/tokenizer.hpp"

namespace commitissue {

enum class Tag : std::uint8_t { O, B_AS, I_AS, B_ES, I_ES };

std::string_view to_string(Tag tag);
std::optional<Tag> parse_tag(std::string_view s);

struct TaggedSequence {
  std::vector<Token> tokens;
  std::vector<Tag> tags;

  friend bool operator==(const TaggedSequence&, const TaggedSequence&) = default;
};

/// True when no I-X tag follows O or a tag of the other state type.
bool is_well_formed(std::span<const Tag> tags);

/// Rewrites every I-X that opens a run (after O, after the other type, or at
/// position 0) into B-X. Well-formed input is returned unchanged.
std::vector<Tag> repair_bio(std::span<const Tag> tags);

/// Labels every token with at least one character inside a span. The first
/// such token gets B-, the rest I-. A token touched by two spans keeps the
/// label of the earlier one. Spans must not overlap each other; a violating
/// pair raises DataError. The span location is ignored, callers pass the
/// spans of one field.
TaggedSequence encode_bio(std::vector<Token> tokens, const std::vector<StateSpan>& spans);

/// One span per maximal B,I,...,I run, snapped to token boundaries. Runs that
/// start with I- are decoded as if they started with B-.
std::vector<StateSpan> decode_bio(const TaggedSequence& seq, Location location = Location::body);

}  // namespace commitissue
