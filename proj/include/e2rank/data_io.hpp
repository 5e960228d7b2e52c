#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "e2rank/error.hpp"
#include "e2rank/types.hpp"

namespace e2rank {

using Json = nlohmann::json;

// Calls fn(record, line_number) for every non-blank line of a JSON-lines file.
// Any exception escaping fn that is not already an e2rank::Error is reported
// as a ParseError for that line.
inline void for_each_jsonl(std::istream& in, const std::string& source,
                           const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::exception& e) {
      throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(source, line_no, "record is not a JSON object");
    try {
      fn(record, line_no);
    } catch (const Error&) {
      throw;
    } catch (const Json::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
}

inline void for_each_jsonl(const std::string& path,
                           const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  for_each_jsonl(in, path, fn);
}

namespace detail {

inline std::string string_field(const Json& rec, const char* key, const std::string& source,
                                std::size_t line) {
  const auto it = rec.find(key);
  if (it == rec.end()) throw ParseError(source, line, std::string("missing field \"") + key + "\"");
  if (!it->is_string()) throw ParseError(source, line, std::string("field \"") + key + "\" is not a string");
  return it->get<std::string>();
}

// {"id","text"} or BEIR-style {"_id","title","text"}; a nonempty title is
// joined to the text with one space.
template <typename Record>
Record read_text_record(const Json& rec, const std::string& source, std::size_t line) {
  Record out;
  if (rec.contains("id")) {
    out.id = string_field(rec, "id", source, line);
  } else if (rec.contains("_id")) {
    out.id = string_field(rec, "_id", source, line);
  } else {
    throw ParseError(source, line, "missing field \"id\"");
  }
  if (out.id.empty()) throw ParseError(source, line, "empty id");
  out.text = string_field(rec, "text", source, line);
  if (rec.contains("title")) {
    const std::string title = string_field(rec, "title", source, line);
    if (!title.empty()) out.text = title + " " + out.text;
  }
  return out;
}

template <typename Record>
std::vector<Record> read_text_records(std::istream& in, const std::string& source) {
  std::vector<Record> out;
  std::unordered_set<std::string> seen;
  for_each_jsonl(in, source, [&](const Json& rec, std::size_t line) {
    Record r = read_text_record<Record>(rec, source, line);
    if (!seen.insert(r.id).second) throw ParseError(source, line, "duplicate id \"" + r.id + "\"");
    out.push_back(std::move(r));
  });
  return out;
}

template <typename Record>
std::vector<Record> read_text_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_text_records<Record>(in, path);
}

}  // namespace detail

inline std::vector<Document> read_corpus(std::istream& in, const std::string& source = "<corpus>") {
  return detail::read_text_records<Document>(in, source);
}
inline std::vector<Document> read_corpus(const std::string& path) {
  return detail::read_text_records<Document>(path);
}
inline std::vector<Query> read_queries(std::istream& in, const std::string& source = "<queries>") {
  return detail::read_text_records<Query>(in, source);
}
inline std::vector<Query> read_queries(const std::string& path) {
  return detail::read_text_records<Query>(path);
}

// Id lookup over a corpus; keeps the original order.
class DocumentStore {
 public:
  DocumentStore() = default;
  explicit DocumentStore(std::vector<Document> docs) : docs_(std::move(docs)) {
    for (std::size_t i = 0; i < docs_.size(); ++i) {
      if (!position_.emplace(docs_[i].id, i).second) {
        throw InvalidArgument("DocumentStore: duplicate id \"" + docs_[i].id + "\"");
      }
    }
  }

  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool contains(const std::string& id) const { return position_.count(id) != 0; }

  const Document& at(const std::string& id) const {
    const auto it = position_.find(id);
    if (it == position_.end()) throw InvalidArgument("unknown document \"" + id + "\"");
    return docs_[it->second];
  }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> position_;
};

template <typename Record>
std::string to_jsonl(const std::vector<Record>& records) {
  std::string out;
  for (const auto& r : records) {
    out += Json{{"id", r.id}, {"text", r.text}}.dump();
    out += '\n';
  }
  return out;
}

}  // namespace e2rank
