#pragma once

// Number mentions and the lexical candidates syntactically attached to them.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nr/conllu.hpp"
#include "nr/detail/text.hpp"

namespace nr {

/// Case-insensitive set of alpha-numeric words whose digits are not measurements.
class ExclusionDict {
 public:
  ExclusionDict() = default;
  explicit ExclusionDict(const std::vector<std::string>& words) {
    for (const auto& w : words) add(w);
  }

  void add(std::string_view word) {
    const auto w = detail::trim(word);
    if (!w.empty()) words_.insert(detail::to_lower(w));
  }
  bool contains(std::string_view word) const { return words_.count(detail::to_lower(word)) > 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Curated list used when no exclusion file is given.
inline ExclusionDict default_exclusions() {
  return ExclusionDict({"b1", "b2", "b3", "b6", "b12", "d2", "d3", "o2", "co2", "h2o", "h2", "k2",
                        "t3", "t4", "a1c", "hba1c", "hb1ac", "s1", "s2", "s3", "s4", "c1", "c2",
                        "c3", "c4", "c5", "c6", "c7", "l1", "l2", "l3", "l4", "l5", "t1", "t2",
                        "v1", "v2", "v3", "v4", "v5", "v6", "ii", "covid19", "h1n1", "po2", "pco2",
                        "fio2", "spo2", "sao2", "nh3", "ca125", "cd4", "cd8", "x2", "x3"});
}

inline ExclusionDict load_exclusions(const std::string& path) {
  ExclusionDict dict;
  const auto text = detail::read_file(path);
  for (auto line : detail::lines(text)) dict.add(line);
  return dict;
}

struct NumberMention {
  double value = 0;
  std::optional<std::string> unit_hint;
  int token_index = 0;
  std::string raw;
  std::optional<int> component;  // 1 or 2 for slash compounds such as 124/55
};

struct Candidate {
  std::string phrase;  // lowercase, compound-merged
  int head_token_index = 0;
  int first_token_index = 0;  // leftmost token of the phrase
  std::string relation_path;
};

struct CandidateSet {
  NumberMention number;
  std::vector<Candidate> candidates;
};

namespace detail {

inline bool is_month(std::string_view form) {
  static const std::array<std::string_view, 23> months = {
      "january", "february", "march", "april", "june",  "july", "august", "september",
      "october", "november", "december", "jan",  "feb",  "mar", "apr",    "jun",
      "jul",     "aug",      "sep",      "sept", "oct",  "nov", "dec"};
  if (form == "May") return true;  // the modal verb is far more frequent in lowercase
  const auto lower = to_lower(form);
  if (!lower.empty() && lower.back() == '.') return is_month(lower.substr(0, lower.size() - 1));
  return std::find(months.begin(), months.end(), lower) != months.end();
}

// sign? digits (. digits)? with one optional alphabetic affix, or a trailing '%'.
inline const std::regex& number_pattern() {
  static const std::regex re(R"(^([A-Za-z]{1,12})?([+-]?[0-9]+(?:\.[0-9]+)?)([A-Za-z]{1,12}|%)?$)");
  return re;
}

inline const std::regex& slash_pattern() {
  static const std::regex re(R"(^([0-9]+(?:\.[0-9]+)?)/([0-9]+(?:\.[0-9]+)?)$)");
  return re;
}

inline const std::regex& date_pattern() {
  static const std::regex re(R"(^[0-9]{1,4}([/-])[0-9]{1,4}\1[0-9]{1,4}$)");
  return re;
}

}  // namespace detail

/// One mention per numeric token, in token order. Dates, excluded words and
/// tokens next to a month name yield nothing.
inline std::vector<NumberMention> extract_numbers(const Sentence& sentence,
                                                  const ExclusionDict& exclusions) {
  std::vector<NumberMention> out;
  for (const auto& tok : sentence.tokens) {
    const auto& form = tok.form;
    if (exclusions.contains(form) || std::regex_match(form, detail::date_pattern())) continue;
    const bool near_month =
        (tok.index > 1 && detail::is_month(sentence.token(tok.index - 1).form)) ||
        (tok.index < sentence.size() && detail::is_month(sentence.token(tok.index + 1).form));

    std::smatch m;
    if (std::regex_match(form, m, detail::slash_pattern())) {
      if (near_month) continue;
      for (int c = 1; c <= 2; ++c) {
        const auto v = detail::parse_double(m[c].str());
        if (v && std::isfinite(*v)) out.push_back({*v, std::nullopt, tok.index, form, c});
      }
      continue;
    }
    if (!std::regex_match(form, m, detail::number_pattern())) continue;
    if (near_month) continue;
    const auto value = detail::parse_double(m[2].str());
    if (!value || !std::isfinite(*value)) continue;

    NumberMention mention{*value, std::nullopt, tok.index, form, std::nullopt};
    if (m[1].matched && m[3].matched) continue;  // at most one affix
    if (m[1].matched) mention.unit_hint = m[1].str();
    if (m[3].matched && m[3].str() != "s") mention.unit_hint = m[3].str();
    if (!mention.unit_hint && tok.index < sentence.size() &&
        sentence.token(tok.index + 1).form == "%")
      mention.unit_hint = "%";
    out.push_back(std::move(mention));
  }
  return out;
}

inline bool is_candidate_pos(std::string_view upos) {
  return upos == "NOUN" || upos == "PROPN" || upos == "ADJ" || upos == "VERB";
}

namespace detail {

// Head token plus its `compound` descendants, ordered by position. Number
// tokens never join a phrase.
inline std::pair<std::string, int> compound_phrase(const Sentence& s, int head, int number_index) {
  std::set<int> members{head};
  std::vector<int> stack{head};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    for (const auto& t : s.tokens) {
      if (t.head != cur || base_relation(t.deprel) != "compound") continue;
      if (t.index == number_index || t.upos == "NUM") continue;
      if (members.insert(t.index).second) stack.push_back(t.index);
    }
  }
  std::string phrase;
  for (int i : members) {
    if (!phrase.empty()) phrase += ' ';
    phrase += to_lower(s.token(i).form);
  }
  return {phrase, *members.begin()};
}

}  // namespace detail

/// Content words attached to the number: its head, its children, and when the
/// number is an `obl` dependent, the head's nsubj/obj/conj dependents.
inline CandidateSet extract_candidates(const Sentence& sentence, const NumberMention& number) {
  CandidateSet out{number, {}};
  const auto& num = sentence.token(number.token_index);

  auto consider = [&](int index, std::string path) {
    if (index == num.index) return;
    const auto& t = sentence.token(index);
    if (!is_candidate_pos(t.upos)) return;
    auto [phrase, first] = detail::compound_phrase(sentence, index, num.index);
    for (const auto& c : out.candidates)
      if (c.phrase == phrase && c.head_token_index == index) return;
    out.candidates.push_back({std::move(phrase), index, first, std::move(path)});
  };

  if (num.head != 0) consider(num.head, "head");
  for (const auto& t : sentence.tokens)
    if (t.head == num.index) consider(t.index, "child:" + t.deprel);
  if (num.head != 0 && base_relation(num.deprel) == "obl") {
    for (const auto& t : sentence.tokens) {
      if (t.head != num.head || t.index == num.index) continue;
      const auto rel = base_relation(t.deprel);
      if (rel == "nsubj" || rel == "obj" || rel == "conj")
        consider(t.index, "obl-sibling:" + t.deprel);
    }
  }
  return out;
}

}  // namespace nr
