#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e2rank/data_io.hpp"
#include "e2rank/error.hpp"
#include "e2rank/metrics.hpp"

namespace e2rank {

// Permutation of 1-based candidate indices, most relevant first.
class RankingLabel {
 public:
  RankingLabel() = default;

  explicit RankingLabel(std::vector<int> permutation) : permutation_(std::move(permutation)) {
    validate_permutation(permutation_, permutation_.size());
  }

  std::span<const int> permutation() const noexcept { return permutation_; }
  std::size_t size() const noexcept { return permutation_.size(); }

  // ranks()[index - 1] is the rank of candidate `index`.
  std::vector<int> ranks() const {
    std::vector<int> r(permutation_.size());
    for (std::size_t pos = 0; pos < permutation_.size(); ++pos) {
      r[static_cast<std::size_t>(permutation_[pos] - 1)] = static_cast<int>(pos + 1);
    }
    return r;
  }

  bool operator==(const RankingLabel&) const = default;

  static void validate_permutation(std::span<const int> perm, std::size_t k) {
    using Kind = PermutationError::Kind;
    if (perm.empty()) throw PermutationError(Kind::NoIndices, "no bracketed indices");
    std::vector<char> seen(k + 1, 0);
    for (int idx : perm) {
      if (idx < 1 || static_cast<std::size_t>(idx) > k) {
        throw PermutationError(Kind::OutOfRange, "index " + std::to_string(idx) + " outside 1.." + std::to_string(k));
      }
      if (seen[static_cast<std::size_t>(idx)]++) {
        throw PermutationError(Kind::Duplicate, "duplicate index " + std::to_string(idx));
      }
    }
    if (perm.size() != k) {
      for (std::size_t idx = 1; idx <= k; ++idx) {
        if (!seen[idx]) throw PermutationError(Kind::Missing, "missing index " + std::to_string(idx));
      }
    }
  }

 private:
  std::vector<int> permutation_;
};

// Extracts "[n]" tokens in order; anything between them is ignored. Succeeds
// only when the indices form a permutation of 1..k.
inline RankingLabel parse_permutation(std::string_view text, std::size_t k) {
  using Kind = PermutationError::Kind;
  if (k == 0) throw InvalidArgument("parse_permutation: k must be >= 1");
  std::vector<int> perm;
  std::size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string_view::npos) {
    std::size_t p = pos + 1;
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    const std::size_t digits_begin = p;
    while (p < text.size() && text[p] >= '0' && text[p] <= '9') ++p;
    const std::size_t digits_end = p;
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (digits_end > digits_begin && p < text.size() && text[p] == ']') {
      const std::string_view digits = text.substr(digits_begin, digits_end - digits_begin);
      long long value = 0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (ec != std::errc() || value > static_cast<long long>(k)) {
        throw PermutationError(Kind::OutOfRange, "index " + std::string(digits) + " outside 1.." + std::to_string(k));
      }
      perm.push_back(static_cast<int>(value));
      pos = p + 1;
    } else {
      pos += 1;
    }
  }
  RankingLabel::validate_permutation(perm, k);
  return RankingLabel(std::move(perm));
}

inline std::string format_permutation(const RankingLabel& label) {
  std::string out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (i) out += " > ";
    out += '[' + std::to_string(label.permutation()[i]) + ']';
  }
  return out;
}

// Fraction of labels whose top index equals the gold positive.
inline double labeling_accuracy(std::span<const RankingLabel> labels, std::span<const int> gold_positive) {
  if (labels.size() != gold_positive.size()) throw InvalidArgument("labeling_accuracy: length mismatch");
  if (labels.empty()) throw InvalidArgument("labeling_accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].permutation()[0] == gold_positive[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// Indices by descending score; ties keep the lower index first.
inline RankingLabel label_from_scores(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("label_from_scores: empty scores");
  std::vector<int> perm(scores.size());
  std::iota(perm.begin(), perm.end(), 1);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a - 1)] > scores[static_cast<std::size_t>(b - 1)];
  });
  return RankingLabel(std::move(perm));
}

// ---- label files -------------------------------------------------------------

struct LabelRecord {
  std::string qid;
  RankingLabel label;
};

// JSON-lines {"qid": string, "permutation": [ints]}, each validated against the
// candidate count of its query.
inline std::vector<LabelRecord> read_labels(std::istream& in, const std::string& source,
                                            const std::map<std::string, std::size_t>& candidate_counts) {
  std::vector<LabelRecord> out;
  for_each_jsonl(in, source, [&](const Json& rec, std::size_t line) {
    LabelRecord r;
    r.qid = detail::string_field(rec, "qid", source, line);
    const auto count = candidate_counts.find(r.qid);
    if (count == candidate_counts.end()) throw ParseError(source, line, "unknown qid \"" + r.qid + "\"");
    const auto it = rec.find("permutation");
    if (it == rec.end() || !it->is_array()) throw ParseError(source, line, "missing array field \"permutation\"");
    std::vector<int> perm;
    for (const auto& v : *it) {
      if (!v.is_number_integer()) throw ParseError(source, line, "non-integer permutation entry");
      perm.push_back(v.get<int>());
    }
    try {
      RankingLabel::validate_permutation(perm, count->second);
    } catch (const PermutationError& e) {
      throw ParseError(source, line, e.what());
    }
    r.label = RankingLabel(std::move(perm));
    out.push_back(std::move(r));
  });
  return out;
}

inline std::string label_to_json(const LabelRecord& r) {
  return Json{{"qid", r.qid}, {"permutation", std::vector<int>(r.label.permutation().begin(), r.label.permutation().end())}}
      .dump();
}

// ---- raw LLM output ingestion --------------------------------------------------

// {"qid", "text", "k"?, "gold"?}: one generated ranking per line. gold is the
// 1-based prompt index of the dataset positive.
struct RawLabel {
  std::string qid;
  std::string text;
  std::optional<std::size_t> k;
  std::optional<int> gold;
};

inline std::vector<RawLabel> read_raw_labels(std::istream& in, const std::string& source) {
  std::vector<RawLabel> out;
  for_each_jsonl(in, source, [&](const Json& rec, std::size_t line) {
    RawLabel r;
    r.qid = detail::string_field(rec, "qid", source, line);
    r.text = detail::string_field(rec, "text", source, line);
    if (rec.contains("k")) {
      if (!rec.at("k").is_number_unsigned() || rec.at("k").get<std::size_t>() == 0) {
        throw ParseError(source, line, "\"k\" must be a positive integer");
      }
      r.k = rec.at("k").get<std::size_t>();
    }
    if (rec.contains("gold")) {
      if (!rec.at("gold").is_number_integer()) throw ParseError(source, line, "\"gold\" must be an integer");
      r.gold = rec.at("gold").get<int>();
    }
    out.push_back(std::move(r));
  });
  return out;
}

struct LabelIngestReport {
  std::size_t total = 0;
  std::size_t parsed = 0;
  std::map<PermutationError::Kind, std::size_t> rejected;
  std::size_t with_gold = 0;
  std::optional<double> accuracy;  // over parsed records that carry gold
};

struct LabelIngestResult {
  std::vector<LabelRecord> labels;
  LabelIngestReport report;
};

// Parses every record; malformed permutations are dropped and counted by kind.
inline LabelIngestResult ingest_labels(const std::vector<RawLabel>& raw, std::size_t default_k) {
  LabelIngestResult out;
  std::vector<RankingLabel> gold_labels;
  std::vector<int> gold;
  for (const auto& r : raw) {
    ++out.report.total;
    const std::size_t k = r.k.value_or(default_k);
    try {
      LabelRecord rec{r.qid, parse_permutation(r.text, k)};
      ++out.report.parsed;
      if (r.gold) {
        gold_labels.push_back(rec.label);
        gold.push_back(*r.gold);
      }
      out.labels.push_back(std::move(rec));
    } catch (const PermutationError& e) {
      ++out.report.rejected[e.kind()];
    }
  }
  out.report.with_gold = gold.size();
  if (!gold.empty()) out.report.accuracy = labeling_accuracy(gold_labels, gold);
  return out;
}

inline std::string permutation_error_name(PermutationError::Kind kind) {
  switch (kind) {
    case PermutationError::Kind::NoIndices: return "no_indices";
    case PermutationError::Kind::OutOfRange: return "out_of_range";
    case PermutationError::Kind::Duplicate: return "duplicate";
    case PermutationError::Kind::Missing: return "missing";
  }
  return "unknown";
}

inline std::string format_ingest_report(const LabelIngestReport& r) {
  std::string out = "records " + std::to_string(r.total) + "\nparsed " + std::to_string(r.parsed) + "\n";
  for (auto kind : {PermutationError::Kind::NoIndices, PermutationError::Kind::OutOfRange,
                    PermutationError::Kind::Duplicate, PermutationError::Kind::Missing}) {
    const auto it = r.rejected.find(kind);
    out += "rejected_" + permutation_error_name(kind) + " " + std::to_string(it == r.rejected.end() ? 0 : it->second) + "\n";
  }
  out += "with_gold " + std::to_string(r.with_gold) + "\n";
  if (r.accuracy) out += "labeling_accuracy " + format_metric(*r.accuracy) + "\n";
  return out;
}

}  // namespace e2rank
