#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>

#include "commitissue/metrics.hpp"

namespace commitissue::metrics {
namespace {

bool is_consonant(const std::string& w, std::size_t i) {
  switch (w[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return false;
    case 'y':
      return i == 0 ? true : !is_consonant(w, i - 1);
    default:
      return true;
  }
}

// m in [C](VC)^m[V], over the first `len` letters.
int measure(const std::string& w, std::size_t len) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < len; ++i) {
    bool c = is_consonant(w, i);
    if (c && prev_vowel) ++m;
    prev_vowel = !c;
  }
  return m;
}

bool has_vowel(const std::string& w, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i)
    if (!is_consonant(w, i)) return true;
  return false;
}

bool ends_double_consonant(const std::string& w, std::size_t len) {
  return len >= 2 && w[len - 1] == w[len - 2] && is_consonant(w, len - 1);
}

// *o: stem ends cvc and the final c is not w, x or y.
bool ends_cvc(const std::string& w, std::size_t len) {
  if (len < 3) return false;
  if (!is_consonant(w, len - 3) || is_consonant(w, len - 2) || !is_consonant(w, len - 1)) return false;
  char c = w[len - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, std::string_view s) {
  return w.size() >= s.size() && std::string_view(w).substr(w.size() - s.size()) == s;
}

enum class Cond { none, m_gt0, m_gt1, vowel, st };

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
  Cond cond;
};

bool holds(const std::string& w, std::size_t stem_len, Cond c) {
  switch (c) {
    case Cond::none: return true;
    case Cond::m_gt0: return measure(w, stem_len) > 0;
    case Cond::m_gt1: return measure(w, stem_len) > 1;
    case Cond::vowel: return has_vowel(w, stem_len);
    case Cond::st: return measure(w, stem_len) > 1 && stem_len > 0 && (w[stem_len - 1] == 's' || w[stem_len - 1] == 't');
  }
  return false;
}

// Only the first rule whose suffix matches is tried.
template <std::size_t N>
void apply_rules(std::string& w, const Rule (&rules)[N]) {
  for (const Rule& r : rules) {
    if (!ends_with(w, r.suffix)) continue;
    std::size_t stem_len = w.size() - r.suffix.size();
    if (holds(w, stem_len, r.cond)) {
      w.resize(stem_len);
      w += r.replacement;
    }
    return;
  }
}

void step1a(std::string& w) {
  static const Rule rules[] = {{"sses", "ss", Cond::none}, {"ies", "i", Cond::none},
                               {"ss", "ss", Cond::none},   {"s", "", Cond::none}};
  apply_rules(w, rules);
}

void step1b(std::string& w) {
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.pop_back();
    return;
  }
  std::size_t cut = 0;
  if (ends_with(w, "ed")) cut = 2;
  else if (ends_with(w, "ing")) cut = 3;
  else return;
  std::size_t stem_len = w.size() - cut;
  if (!has_vowel(w, stem_len)) return;
  w.resize(stem_len);

  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w += 'e';
  } else if (ends_double_consonant(w, w.size())) {
    char c = w.back();
    if (c != 'l' && c != 's' && c != 'z') w.pop_back();
  } else if (measure(w, w.size()) == 1 && ends_cvc(w, w.size())) {
    w += 'e';
  }
}

void step1c(std::string& w) {
  if (w.size() >= 2 && w.back() == 'y' && has_vowel(w, w.size() - 1)) w.back() = 'i';
}

void step2(std::string& w) {
  static const Rule rules[] = {
      {"ational", "ate", Cond::m_gt0}, {"tional", "tion", Cond::m_gt0}, {"enci", "ence", Cond::m_gt0},
      {"anci", "ance", Cond::m_gt0},   {"izer", "ize", Cond::m_gt0},    {"abli", "able", Cond::m_gt0},
      {"alli", "al", Cond::m_gt0},     {"entli", "ent", Cond::m_gt0},   {"eli", "e", Cond::m_gt0},
      {"ousli", "ous", Cond::m_gt0},   {"ization", "ize", Cond::m_gt0}, {"ation", "ate", Cond::m_gt0},
      {"ator", "ate", Cond::m_gt0},    {"alism", "al", Cond::m_gt0},    {"iveness", "ive", Cond::m_gt0},
      {"fulness", "ful", Cond::m_gt0}, {"ousness", "ous", Cond::m_gt0}, {"aliti", "al", Cond::m_gt0},
      {"iviti", "ive", Cond::m_gt0},   {"biliti", "ble", Cond::m_gt0}};
  apply_rules(w, rules);
}

void step3(std::string& w) {
  static const Rule rules[] = {{"icate", "ic", Cond::m_gt0}, {"ative", "", Cond::m_gt0}, {"alize", "al", Cond::m_gt0},
                               {"iciti", "ic", Cond::m_gt0}, {"ical", "ic", Cond::m_gt0}, {"ful", "", Cond::m_gt0},
                               {"ness", "", Cond::m_gt0}};
  apply_rules(w, rules);
}

void step4(std::string& w) {
  static const Rule rules[] = {
      {"al", "", Cond::m_gt1},   {"ance", "", Cond::m_gt1}, {"ence", "", Cond::m_gt1}, {"er", "", Cond::m_gt1},
      {"ic", "", Cond::m_gt1},   {"able", "", Cond::m_gt1}, {"ible", "", Cond::m_gt1}, {"ant", "", Cond::m_gt1},
      {"ement", "", Cond::m_gt1}, {"ment", "", Cond::m_gt1}, {"ent", "", Cond::m_gt1}, {"ion", "", Cond::st},
      {"ou", "", Cond::m_gt1},   {"ism", "", Cond::m_gt1},  {"ate", "", Cond::m_gt1},  {"iti", "", Cond::m_gt1},
      {"ous", "", Cond::m_gt1},  {"ive", "", Cond::m_gt1},  {"ize", "", Cond::m_gt1}};
  apply_rules(w, rules);
}

void step5a(std::string& w) {
  if (w.empty() || w.back() != 'e') return;
  std::size_t stem_len = w.size() - 1;
  int m = measure(w, stem_len);
  if (m > 1 || (m == 1 && !ends_cvc(w, stem_len))) w.pop_back();
}

void step5b(std::string& w) {
  if (ends_with(w, "ll") && measure(w, w.size() - 1) > 1) w.pop_back();
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (w.empty()) return w;
  step1a(w);
  if (w.empty()) return w;
  step1b(w);
  step1c(w);
  step2(w);
  step3(w);
  step4(w);
  step5a(w);
  step5b(w);
  return w;
}

}  // namespace commitissue::metrics
