#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "e2rank/error.hpp"
#include "e2rank/index.hpp"
#include "e2rank/tokenizer.hpp"

namespace e2rank {

// qid -> doc id -> grade (>= 0).
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct RunEntry {
  std::string query_id;
  std::string doc_id;
  int rank = 0;
  double score = 0.0;

  bool operator==(const RunEntry&) const = default;
};

// Ranked lists per query, queries kept in insertion order.
class Run {
 public:
  void add(const std::string& qid, std::span<const ScoredDoc> ranked) {
    std::vector<RunEntry> entries;
    entries.reserve(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      entries.push_back({qid, ranked[i].doc_id, static_cast<int>(i + 1), ranked[i].score});
    }
    add(qid, std::move(entries));
  }

  void add(const std::string& qid, std::vector<RunEntry> entries) {
    if (by_query_.count(qid)) throw InvalidArgument("Run: query \"" + qid + "\" added twice");
    order_.push_back(qid);
    by_query_.emplace(qid, std::move(entries));
  }

  const std::vector<std::string>& queries() const noexcept { return order_; }
  bool contains(const std::string& qid) const { return by_query_.count(qid) != 0; }

  const std::vector<RunEntry>& entries(const std::string& qid) const {
    const auto it = by_query_.find(qid);
    if (it == by_query_.end()) throw InvalidArgument("Run: no query \"" + qid + "\"");
    return it->second;
  }

  std::vector<ScoredDoc> scored(const std::string& qid) const {
    std::vector<ScoredDoc> out;
    for (const auto& e : entries(qid)) out.push_back({e.doc_id, e.score});
    return out;
  }

  bool operator==(const Run& o) const { return order_ == o.order_ && by_query_ == o.by_query_; }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::vector<RunEntry>> by_query_;
};

// ---- NDCG ------------------------------------------------------------------------

inline double gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }
inline double discount(std::size_t position) { return std::log2(static_cast<double>(position) + 1.0); }

// DCG over the run prefix divided by the DCG of the ideal ordering of every
// judged document for the query. 0 when nothing is judged relevant.
inline double ndcg_at_k(std::span<const RunEntry> ranked, const std::map<std::string, int>& judged, std::size_t k = 10) {
  if (k == 0) throw InvalidArgument("ndcg_at_k: k must be >= 1");
  std::vector<int> grades;
  for (const auto& [doc, grade] : judged) grades.push_back(grade);
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) ideal += gain(grades[i]) / discount(i + 1);
  if (ideal == 0.0) return 0.0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    const auto it = judged.find(ranked[i].doc_id);
    const int grade = it == judged.end() ? 0 : it->second;
    dcg += gain(grade) / discount(i + 1);
  }
  return dcg / ideal;
}

struct QueryScore {
  std::string query_id;
  double ndcg = 0.0;
};

// Per-query NDCG for every query in qrels with a nonzero ideal DCG, in qid
// order. Queries absent from the run score 0.
inline std::vector<QueryScore> per_query_ndcg(const Run& run, const Qrels& qrels, std::size_t k = 10) {
  std::vector<QueryScore> out;
  static const std::vector<RunEntry> kEmpty;
  for (const auto& [qid, judged] : qrels) {
    const bool evaluable = std::any_of(judged.begin(), judged.end(), [](const auto& p) { return p.second > 0; });
    if (!evaluable) continue;
    const auto& entries = run.contains(qid) ? run.entries(qid) : kEmpty;
    out.push_back({qid, ndcg_at_k(entries, judged, k)});
  }
  return out;
}

inline double mean_ndcg(const Run& run, const Qrels& qrels, std::size_t k = 10) {
  const auto scores = per_query_ndcg(run, qrels, k);
  if (scores.empty()) throw InvalidArgument("mean_ndcg: no evaluable queries");
  double sum = 0.0;
  for (const auto& s : scores) sum += s.ndcg;
  return sum / static_cast<double>(scores.size());
}

// ---- TREC files ------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Shortest round-trip text that always reads as a real ("1.0", not "1").
inline std::string format_metric(double v) {
  std::string s = format_double(v);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline double parse_double(std::string_view s, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(source, line, "bad number \"" + std::string(s) + "\"");
  }
  return v;
}

inline long long parse_int(std::string_view s, const std::string& source, std::size_t line) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(source, line, "bad integer \"" + std::string(s) + "\"");
  }
  return v;
}

}  // namespace detail

// "qid Q0 docid rank score tag". Within each query the entries are put in rank
// order; if ranks are not 1..n or scores increase with rank, a warning is
// recorded and the list is re-ranked by descending score.
inline Run read_run(std::istream& in, const std::string& source, std::vector<std::string>* warnings = nullptr) {
  struct Row {
    RunEntry entry;
    std::size_t line;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cols = split_whitespace(line);
    if (cols.empty()) continue;
    if (cols.size() != 6) {
      throw ParseError(source, line_no, "expected 6 columns, found " + std::to_string(cols.size()));
    }
    RunEntry e;
    e.query_id = std::string(cols[0]);
    e.doc_id = std::string(cols[2]);
    const long long rank = detail::parse_int(cols[3], source, line_no);
    if (rank < 1 || rank > 1'000'000'000) throw ParseError(source, line_no, "rank must be positive");
    e.rank = static_cast<int>(rank);
    e.score = detail::parse_double(cols[4], source, line_no);
    auto [it, inserted] = rows.try_emplace(e.query_id);
    if (inserted) order.push_back(e.query_id);
    it->second.push_back({std::move(e), line_no});
  }
  Run run;
  for (const auto& qid : order) {
    auto& list = rows[qid];
    std::unordered_set<std::string> docs;
    for (const auto& r : list) {
      if (!docs.insert(r.entry.doc_id).second) {
        throw ParseError(source, r.line, "duplicate doc \"" + r.entry.doc_id + "\" for query \"" + qid + "\"");
      }
    }
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.entry.rank < b.entry.rank; });
    bool consistent = true;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].entry.rank != static_cast<int>(i + 1)) consistent = false;
      if (i > 0 && list[i].entry.score > list[i - 1].entry.score) consistent = false;
    }
    if (!consistent) {
      if (warnings) warnings->push_back(source + ": query \"" + qid + "\" ranks disagree with scores; re-ranked by score");
      std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.entry.score > b.entry.score; });
    }
    std::vector<RunEntry> entries;
    for (std::size_t i = 0; i < list.size(); ++i) {
      entries.push_back(list[i].entry);
      entries.back().rank = static_cast<int>(i + 1);
    }
    run.add(qid, std::move(entries));
  }
  return run;
}

inline Run read_run(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_run(in, path, warnings);
}

inline std::string format_run(const Run& run, std::string_view tag = "e2rank") {
  std::string out;
  for (const auto& qid : run.queries()) {
    for (const auto& e : run.entries(qid)) {
      out += e.query_id + " Q0 " + e.doc_id + ' ' + std::to_string(e.rank) + ' ' + format_double(e.score) + ' ';
      out += tag;
      out += '\n';
    }
  }
  return out;
}

// "qid 0 docid grade".
inline Qrels read_qrels(std::istream& in, const std::string& source) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cols = split_whitespace(line);
    if (cols.empty()) continue;
    if (cols.size() != 4) throw ParseError(source, line_no, "expected 4 columns, found " + std::to_string(cols.size()));
    const long long grade = detail::parse_int(cols[3], source, line_no);
    if (grade < 0 || grade > 30) throw ParseError(source, line_no, "grade must be in 0..30");
    qrels[std::string(cols[0])][std::string(cols[2])] = static_cast<int>(grade);
  }
  return qrels;
}

inline Qrels read_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_qrels(in, path);
}

inline std::string format_qrels(const Qrels& qrels) {
  std::string out;
  for (const auto& [qid, judged] : qrels) {
    for (const auto& [doc, grade] : judged) out += qid + " 0 " + doc + ' ' + std::to_string(grade) + '\n';
  }
  return out;
}

// Per-query lines (optional) followed by the mean.
inline std::string format_evaluation(const Run& run, const Qrels& qrels, std::size_t k, bool per_query) {
  std::string out;
  if (per_query) {
    for (const auto& s : per_query_ndcg(run, qrels, k)) out += s.query_id + ' ' + format_metric(s.ndcg) + '\n';
  }
  out += "ndcg@" + std::to_string(k) + ' ' + format_metric(mean_ndcg(run, qrels, k)) + '\n';
  return out;
}

}  // namespace e2rank
