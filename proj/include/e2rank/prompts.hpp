#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "e2rank/encoder.hpp"
#include "e2rank/error.hpp"
#include "e2rank/types.hpp"

namespace e2rank {

// Layout of a listwise prompt. Rendering joins the nonempty parts with
// newlines:
//
//   prefix
//   instruction
//   documents_header
//   doc_format(1, d_1)
//   ...
//   doc_format(k, d_k)
//   query_format(q)
//   suffix
//
// Chat-template markers are carried as plain prefix/suffix text.
struct PromptTemplate {
  std::string prefix = "<|im_start|>user";
  std::string instruction =
      "Given a web search query and some relevant documents, rerank the documents that answer the query:";
  std::string documents_header = "Documents:";
  std::string doc_format = "[{i}] {doc}";
  std::string query_format = "Search Query: {query}";
  std::string suffix = "<|im_end|>\n<|im_start|>assistant";

  // Reduces to the plain query-embedding input "instruction query".
  static PromptTemplate plain_query(std::string instruction) {
    PromptTemplate t;
    t.prefix.clear();
    t.instruction = std::move(instruction);
    t.documents_header.clear();
    t.query_format = "{query}";
    t.suffix.clear();
    return t;
  }

  void validate() const;
};

namespace detail {

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

inline std::string replace_once(std::string format, std::string_view marker, std::string_view value) {
  const std::size_t pos = format.find(marker);
  if (pos != std::string::npos) format.replace(pos, marker.size(), value);
  return format;
}

}  // namespace detail

inline void PromptTemplate::validate() const {
  if (detail::count_occurrences(doc_format, "{i}") != 1 ||
      detail::count_occurrences(doc_format, "{doc}") != 1) {
    throw InvalidArgument("PromptTemplate: doc_format must contain {i} and {doc} exactly once");
  }
  if (detail::count_occurrences(query_format, "{query}") != 1) {
    throw InvalidArgument("PromptTemplate: query_format must contain {query} exactly once");
  }
}

// Documents are indexed 1..k in the order given.
struct ListwisePrompt {
  std::string instruction;
  std::vector<Document> documents;
  Query query;
};

inline std::string render_doc_line(const PromptTemplate& t, std::size_t index, std::string_view doc) {
  // {i} is substituted first so that document text can never inject an index.
  const std::size_t i_pos = t.doc_format.find("{i}");
  const std::size_t d_pos = t.doc_format.find("{doc}");
  std::string out;
  if (i_pos < d_pos) {
    out = t.doc_format.substr(0, i_pos) + std::to_string(index) +
          t.doc_format.substr(i_pos + 3, d_pos - i_pos - 3) + std::string(doc) + t.doc_format.substr(d_pos + 5);
  } else {
    out = t.doc_format.substr(0, d_pos) + std::string(doc) +
          t.doc_format.substr(d_pos + 5, i_pos - d_pos - 5) + std::to_string(index) + t.doc_format.substr(i_pos + 3);
  }
  return out;
}

inline std::string render_listwise(const ListwisePrompt& p, const PromptTemplate& t) {
  t.validate();
  std::string out;
  auto line = [&](std::string_view part) {
    if (part.empty()) return;
    if (!out.empty()) out += '\n';
    out += part;
  };
  line(t.prefix);
  line(p.instruction);
  line(t.documents_header);
  for (std::size_t i = 0; i < p.documents.size(); ++i) {
    line(render_doc_line(t, i + 1, p.documents[i].text));
  }
  line(detail::replace_once(t.query_format, "{query}", p.query.text));
  line(t.suffix);
  return out;
}

// Packages the template instruction, the documents (truncated like standalone
// documents) and the query.
inline ListwisePrompt make_listwise_prompt(const PromptTemplate& t, std::vector<Document> docs,
                                           const Query& query, const Encoder& encoder) {
  for (Document& d : docs) d.text = std::string(encoder.truncate_document(d.text));
  return ListwisePrompt{t.instruction, std::move(docs), query};
}

inline std::vector<TokenId> prompt_tokens(const ListwisePrompt& p, const PromptTemplate& t,
                                          const Encoder& encoder) {
  return encoder.tokens(render_listwise(p, t));
}

inline Vector encode_prompt(const ListwisePrompt& p, const PromptTemplate& t, const Encoder& encoder) {
  return encoder.encode_tokens(prompt_tokens(p, t, encoder));
}

// Plain-text template file with sections introduced by a line "[name]"
// (prefix, instruction, documents_header, doc_format, query_format, suffix).
// Section bodies are the following lines joined with '\n'; sections not
// present keep their defaults.
inline PromptTemplate parse_template(std::istream& in, const std::string& source) {
  PromptTemplate t;
  std::string* current = nullptr;
  std::vector<std::string> lines;
  auto flush = [&] {
    if (!current) return;
    std::string body;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i) body += '\n';
      body += lines[i];
    }
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    *current = body;
    lines.clear();
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string* section = nullptr;
    if (line == "[prefix]") section = &t.prefix;
    else if (line == "[instruction]") section = &t.instruction;
    else if (line == "[documents_header]") section = &t.documents_header;
    else if (line == "[doc_format]") section = &t.doc_format;
    else if (line == "[query_format]") section = &t.query_format;
    else if (line == "[suffix]") section = &t.suffix;
    if (section) {
      flush();
      current = section;
      continue;
    }
    if (!current) {
      if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
      throw ParseError(source, line_no, "text before the first [section] header");
    }
    lines.push_back(line);
  }
  flush();
  try {
    t.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(source, 0, e.what());
  }
  return t;
}

inline PromptTemplate load_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_template(in, path);
}

}  // namespace e2rank
