#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "e2rank/binary_io.hpp"
#include "e2rank/encoder.hpp"
#include "e2rank/error.hpp"
#include "e2rank/linalg.hpp"
#include "e2rank/parallel.hpp"
#include "e2rank/types.hpp"

namespace e2rank {

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

// Descending score, then ascending doc id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

// Exact store of document embeddings with brute-force cosine search.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;

  EmbeddingIndex(std::vector<std::string> doc_ids, std::vector<Vector> rows) {
    if (doc_ids.empty()) throw InvalidArgument("EmbeddingIndex: empty index");
    if (doc_ids.size() != rows.size()) throw InvalidArgument("EmbeddingIndex: ids and rows differ in count");
    dim_ = rows.front().dim();
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
      if (rows[i].dim() != dim_) throw DimensionError("EmbeddingIndex: row " + doc_ids[i] + " has a different dim");
      if (doc_ids[i].empty()) throw InvalidArgument("EmbeddingIndex: empty doc id");
      if (doc_ids[i].size() > 0xffff) throw InvalidArgument("EmbeddingIndex: doc id longer than 65535 bytes");
      if (!position_.emplace(doc_ids[i], i).second) {
        throw InvalidArgument("EmbeddingIndex: duplicate doc id \"" + doc_ids[i] + "\"");
      }
      units_.push_back(unit(rows[i]));
    }
    doc_ids_ = std::move(doc_ids);
    rows_ = std::move(rows);
  }

  std::size_t size() const noexcept { return doc_ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const Vector& row(std::size_t i) const { return rows_.at(i); }
  bool contains(const std::string& id) const { return position_.count(id) != 0; }

  const Vector& embedding(const std::string& id) const {
    const auto it = position_.find(id);
    if (it == position_.end()) throw InvalidArgument("no embedding for doc \"" + id + "\"");
    return rows_[it->second];
  }

  // cosine(query, row) computed from the cached unit rows; equal bit-for-bit to linalg::cosine.
  double score(std::span<const double> query_unit, const std::string& id) const {
    const auto it = position_.find(id);
    if (it == position_.end()) throw InvalidArgument("no embedding for doc \"" + id + "\"");
    return dot(query_unit, units_[it->second]);
  }

  std::vector<ScoredDoc> top_k(std::span<const double> query, std::size_t k) const {
    if (k == 0) throw InvalidArgument("top_k: k must be >= 1");
    require_same_dim(query, std::span<const double>(units_.front()));
    const auto q = unit(query);
    std::vector<ScoredDoc> all;
    all.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) all.push_back({doc_ids_[i], dot(q, units_[i])});
    const std::size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), ranks_before);
    all.resize(n);
    return all;
  }

  bool operator==(const EmbeddingIndex& o) const { return doc_ids_ == o.doc_ids_ && rows_ == o.rows_; }

 private:
  std::vector<std::string> doc_ids_;
  std::vector<Vector> rows_;
  std::vector<std::vector<double>> units_;
  std::unordered_map<std::string, std::size_t> position_;
  std::size_t dim_ = 0;
};

namespace detail {

inline void require_unique_docs(const std::vector<Document>& docs) {
  if (docs.empty()) throw InvalidArgument("build_index: empty document list");
  std::unordered_set<std::string> seen;
  for (const auto& d : docs) {
    if (!seen.insert(d.id).second) throw InvalidArgument("build_index: duplicate doc id \"" + d.id + "\"");
  }
}

}  // namespace detail

inline EmbeddingIndex build_index(const std::vector<Document>& docs, const Encoder& encoder) {
  detail::require_unique_docs(docs);
  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.id);
  std::vector<Vector> rows(docs.size());
  parallel_for(docs.size(), [&](std::size_t i) { rows[i] = encoder.encode_document(docs[i]); });
  return EmbeddingIndex(std::move(ids), std::move(rows));
}

inline EmbeddingIndex build_index(const std::vector<Document>& docs, const ExternalEmbeddingSet& external) {
  detail::require_unique_docs(docs);
  std::vector<std::string> ids;
  std::vector<Vector> rows;
  for (const auto& d : docs) {
    ids.push_back(d.id);
    rows.push_back(external.at(d.id));
  }
  return EmbeddingIndex(std::move(ids), std::move(rows));
}

// ---- persistence ---------------------------------------------------------------

inline constexpr std::string_view kIndexMagic = "E2IX";
inline constexpr std::uint32_t kIndexVersion = 1;

inline std::string save_index(const EmbeddingIndex& idx) {
  ByteWriter w;
  w.put_bytes(kIndexMagic);
  w.put_u32(kIndexVersion);
  w.put_u32(static_cast<std::uint32_t>(idx.size()));
  w.put_u32(static_cast<std::uint32_t>(idx.dim()));
  for (const auto& id : idx.doc_ids()) {
    w.put_u16(static_cast<std::uint16_t>(id.size()));
    w.put_bytes(id);
  }
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (double v : idx.row(i).values()) w.put_f64(v);
  }
  return w.take();
}

inline EmbeddingIndex load_index(std::string_view bytes) {
  using Kind = BinaryFormatError::Kind;
  ByteReader r(bytes);
  if (r.get_bytes(4) != kIndexMagic) throw BinaryFormatError(Kind::BadMagic, "index: bad magic");
  const std::uint32_t version = r.get_u32();
  if (version != kIndexVersion) {
    throw BinaryFormatError(Kind::BadVersion, "index: unsupported version " + std::to_string(version));
  }
  const std::uint32_t n = r.get_u32();
  const std::uint32_t dim = r.get_u32();
  if (n == 0) throw BinaryFormatError(Kind::Empty, "index: zero documents");
  if (dim == 0) throw BinaryFormatError(Kind::InvalidHeader, "index: zero dimension");
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint16_t len = r.get_u16();
    ids.emplace_back(r.get_bytes(len));
  }
  if (r.remaining() < static_cast<std::uint64_t>(n) * dim * 8) {
    throw BinaryFormatError(Kind::Truncated, "index: truncated payload");
  }
  if (r.remaining() > static_cast<std::uint64_t>(n) * dim * 8) {
    throw BinaryFormatError(Kind::TrailingBytes, "index: trailing bytes");
  }
  std::vector<Vector> rows;
  rows.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<double> values(dim);
    for (double& v : values) {
      v = r.get_f64();
      if (!std::isfinite(v)) throw BinaryFormatError(Kind::NonFinite, "index: non-finite value");
    }
    rows.emplace_back(std::move(values));
  }
  try {
    return EmbeddingIndex(std::move(ids), std::move(rows));
  } catch (const Error& e) {
    throw BinaryFormatError(Kind::InvalidHeader, std::string("index: ") + e.what());
  }
}

inline void save_index_file(const EmbeddingIndex& idx, const std::string& path) { write_file(path, save_index(idx)); }
inline EmbeddingIndex load_index_file(const std::string& path) { return load_index(read_file(path)); }

}  // namespace e2rank
