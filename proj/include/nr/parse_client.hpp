#pragma once

// Client for an external parse service exposing
//   POST /parse  {"doc_id": str, "text": str}  ->  text/plain CoNLL-U

#include <string>
#include <string_view>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "nr/conllu.hpp"
#include "nr/error.hpp"

namespace nr {

struct RawDocument {
  std::string doc_id;
  std::string text;
};

/// Splits raw text into documents at blank lines; ids are doc-1, doc-2, ...
inline std::vector<RawDocument> split_raw_documents(std::string_view text) {
  std::vector<RawDocument> out;
  std::string cur;
  auto flush = [&]() {
    if (!detail::trim(cur).empty())
      out.push_back({"doc-" + std::to_string(out.size() + 1), std::string(detail::trim(cur))});
    cur.clear();
  };
  for (auto line : detail::lines(text)) {
    if (detail::trim(line).empty()) {
      flush();
      continue;
    }
    if (!cur.empty()) cur += ' ';
    cur += line;
  }
  flush();
  return out;
}

/// True when the text has at least one token row (a tab-separated line
/// outside comments).
inline bool looks_like_conllu(std::string_view text) {
  for (auto line : detail::lines(text)) {
    if (line.empty() || line.front() == '#') continue;
    if (line.find('\t') != std::string_view::npos) return true;
  }
  return false;
}

class ParseServiceClient {
 public:
  explicit ParseServiceClient(std::string base_url) : base_url_(std::move(base_url)) {}

  /// One parsed document; the requested doc_id overrides any id in the reply.
  Document parse(const RawDocument& doc) const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    const nlohmann::json body = {{"doc_id", doc.doc_id}, {"text", doc.text}};
    const auto res = client.Post("/parse", body.dump(), "application/json");
    if (!res) throw IoError("parse service at " + base_url_ + " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw IoError("parse service returned HTTP " + std::to_string(res->status) + ": " + res->body);
    auto docs = parse_conllu(res->body);
    Document merged{doc.doc_id, {}};
    for (auto& d : docs)
      for (auto& s : d.sentences) merged.sentences.push_back(std::move(s));
    return merged;
  }

 private:
  std::string base_url_;
};

}  // namespace nr
