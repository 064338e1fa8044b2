#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nr/detail/text.hpp"
#include "nr/error.hpp"

namespace nr {

struct Token {
  int index = 0;  // 1-based
  std::string form;
  std::string lemma;
  std::string upos;
  int head = 0;  // 0 = root
  std::string deprel;
  std::size_t start = 0;  // byte offsets into Sentence::text, end exclusive
  std::size_t end = 0;
};

struct Sentence {
  std::string sent_id;
  std::string text;
  std::vector<Token> tokens;

  const Token& token(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }
  int size() const { return static_cast<int>(tokens.size()); }
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
};

/// Relation label without its subtype (`nsubj:pass` -> `nsubj`).
inline std::string_view base_relation(std::string_view deprel) {
  return deprel.substr(0, deprel.find(':'));
}

namespace detail {

// Places each form in `text` left to right. If any form cannot be found the
// text is rebuilt from the forms, honoring SpaceAfter=No.
inline void assign_offsets(Sentence& s, const std::vector<bool>& space_after) {
  std::size_t cursor = 0;
  bool ok = !s.text.empty();
  for (auto& t : s.tokens) {
    if (!ok) break;
    const auto pos = s.text.find(t.form, cursor);
    if (pos == std::string::npos) {
      ok = false;
      break;
    }
    t.start = pos;
    t.end = pos + t.form.size();
    cursor = t.end;
  }
  if (ok) return;
  s.text.clear();
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    auto& t = s.tokens[i];
    t.start = s.text.size();
    s.text += t.form;
    t.end = s.text.size();
    if (i + 1 < s.tokens.size() && space_after[i]) s.text += ' ';
  }
}

}  // namespace detail

/// Reads 10-column CoNLL-U. Multi-word token ranges and empty nodes are skipped.
/// `# newdoc id = X` starts a document; sentences before any marker go to an
/// implicit document. Throws ParseError with the offending line.
inline std::vector<Document> parse_conllu(std::string_view text) {
  std::vector<Document> docs;
  Sentence cur;
  std::vector<bool> space_after;
  bool in_sentence = false;
  std::size_t lineno = 0;
  std::size_t sentence_line = 0;

  auto current_doc = [&]() -> Document& {
    if (docs.empty()) docs.push_back({"doc-1", {}});
    return docs.back();
  };
  auto finish = [&]() {
    if (!in_sentence) return;
    for (const auto& t : cur.tokens)
      if (t.head < 0 || t.head > cur.size())
        throw ParseError("head " + std::to_string(t.head) + " out of range", sentence_line);
    detail::assign_offsets(cur, space_after);
    current_doc().sentences.push_back(std::move(cur));
    cur = {};
    space_after.clear();
    in_sentence = false;
  };

  for (auto line : detail::lines(text)) {
    ++lineno;
    if (detail::trim(line).empty()) {
      finish();
      continue;
    }
    if (line.front() == '#') {
      const auto body = detail::trim(line.substr(1));
      auto value_of = [&](std::string_view key) -> std::optional<std::string> {
        if (body.rfind(key, 0) != 0) return std::nullopt;
        auto rest = detail::trim(body.substr(key.size()));
        if (rest.empty() || rest.front() != '=') return std::nullopt;  // e.g. text_en
        return std::string(detail::trim(rest.substr(1)));
      };
      if (const auto id = value_of("newdoc id")) {
        finish();
        docs.push_back({*id, {}});
      } else if (body == "newdoc") {
        finish();
        docs.push_back({"doc-" + std::to_string(docs.size() + 1), {}});
      } else if (const auto sid = value_of("sent_id")) {
        cur.sent_id = *sid;
      } else if (const auto txt = value_of("text")) {
        cur.text = *txt;
      }
      continue;
    }

    const auto cols = detail::split(line, '\t');
    if (cols.size() != 10)
      throw ParseError("expected 10 tab-separated columns, got " + std::to_string(cols.size()), lineno);
    if (!in_sentence) {
      in_sentence = true;
      sentence_line = lineno;
    }
    const auto id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;

    Token t;
    const auto index = detail::parse_int<int>(id);
    if (!index) throw ParseError("non-integer token id '" + std::string(id) + "'", lineno);
    if (*index != cur.size() + 1) throw ParseError("token ids must be consecutive", lineno);
    const auto head = detail::parse_int<int>(cols[6]);
    if (!head) throw ParseError("non-integer head '" + std::string(cols[6]) + "'", lineno);
    t.index = *index;
    t.form = std::string(cols[1]);
    t.lemma = std::string(cols[2]);
    t.upos = std::string(cols[3]);
    t.head = *head;
    t.deprel = std::string(cols[7]);
    cur.tokens.push_back(std::move(t));
    space_after.push_back(std::string_view(cols[9]).find("SpaceAfter=No") == std::string_view::npos);
  }
  finish();
  return docs;
}

}  // namespace nr
