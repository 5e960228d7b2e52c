#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e2rank/binary_io.hpp"
#include "e2rank/data_io.hpp"
#include "e2rank/error.hpp"
#include "e2rank/linalg.hpp"
#include "e2rank/rng.hpp"
#include "e2rank/tokenizer.hpp"
#include "e2rank/types.hpp"

namespace e2rank {

// Reference encoder: token table E (V x D) and projection W (D x D), both
// row-major. The EOS state of a sequence is the mean of the E rows of its
// tokens with eos appended; the embedding is W times that state.
struct EncoderParams {
  std::uint32_t vocab = 0;
  std::uint32_t dim = 0;
  std::vector<double> token_table;
  std::vector<double> projection;

  EncoderParams() = default;
  EncoderParams(std::uint32_t vocab_size, std::uint32_t embedding_dim)
      : vocab(vocab_size),
        dim(embedding_dim),
        token_table(static_cast<std::size_t>(vocab_size) * embedding_dim, 0.0),
        projection(static_cast<std::size_t>(embedding_dim) * embedding_dim, 0.0) {
    validate_shape();
  }

  // Uniform in [-0.1, 0.1], token table first then projection, row-major.
  static EncoderParams random(std::uint32_t vocab_size, std::uint32_t embedding_dim,
                              std::uint64_t seed) {
    EncoderParams p(vocab_size, embedding_dim);
    Pcg32 rng(seed);
    for (double& v : p.token_table) v = rng.uniform(-0.1, 0.1);
    for (double& v : p.projection) v = rng.uniform(-0.1, 0.1);
    return p;
  }

  TokenId eos_id() const noexcept { return vocab - 1; }

  std::span<const double> row(TokenId t) const {
    return std::span<const double>(token_table).subspan(static_cast<std::size_t>(t) * dim, dim);
  }
  std::span<double> row(TokenId t) {
    return std::span<double>(token_table).subspan(static_cast<std::size_t>(t) * dim, dim);
  }

  void validate_shape() const {
    if (vocab < 2) throw InvalidArgument("EncoderParams: vocab must be >= 2");
    if (dim == 0) throw InvalidArgument("EncoderParams: dim must be positive");
    if (token_table.size() != static_cast<std::size_t>(vocab) * dim ||
        projection.size() != static_cast<std::size_t>(dim) * dim) {
      throw InvalidArgument("EncoderParams: matrix sizes do not match vocab/dim");
    }
  }

  void validate() const {
    validate_shape();
    for (double v : token_table) {
      if (!std::isfinite(v)) throw InvalidArgument("EncoderParams: non-finite token table entry");
    }
    for (double v : projection) {
      if (!std::isfinite(v)) throw InvalidArgument("EncoderParams: non-finite projection entry");
    }
  }

  bool operator==(const EncoderParams&) const = default;
};

// Mean of the token rows plus the eos row; tokens are summed in order, eos last.
inline std::vector<double> pool(std::span<const TokenId> tokens, const EncoderParams& params) {
  const std::size_t d = params.dim;
  std::vector<double> h(d, 0.0);
  auto add_row = [&](TokenId t) {
    if (t >= params.vocab) throw InvalidArgument("token id " + std::to_string(t) + " out of vocab");
    const auto r = params.row(t);
    for (std::size_t j = 0; j < d; ++j) h[j] += r[j];
  };
  for (TokenId t : tokens) add_row(t);
  add_row(params.eos_id());
  const double count = static_cast<double>(tokens.size() + 1);
  for (double& v : h) v /= count;
  return h;
}

inline std::vector<double> project(std::span<const double> h, const EncoderParams& params) {
  const std::size_t d = params.dim;
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) sum += params.projection[i * d + j] * h[j];
    out[i] = sum;
  }
  return out;
}

inline Vector encode(std::span<const TokenId> tokens, const EncoderParams& params) {
  return Vector(project(pool(tokens, params), params));
}

// ---- checkpoints -----------------------------------------------------------

inline constexpr std::string_view kCheckpointMagic = "E2RK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string save_checkpoint(const EncoderParams& params) {
  params.validate();
  ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put_u32(kCheckpointVersion);
  w.put_u32(params.vocab);
  w.put_u32(params.dim);
  for (double v : params.token_table) w.put_f64(v);
  for (double v : params.projection) w.put_f64(v);
  return w.take();
}

inline EncoderParams load_checkpoint(std::string_view bytes) {
  using Kind = BinaryFormatError::Kind;
  ByteReader r(bytes);
  if (r.get_bytes(4) != kCheckpointMagic) throw BinaryFormatError(Kind::BadMagic, "checkpoint: bad magic");
  const std::uint32_t version = r.get_u32();
  if (version != kCheckpointVersion) {
    throw BinaryFormatError(Kind::BadVersion, "checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t vocab = r.get_u32();
  const std::uint32_t dim = r.get_u32();
  if (vocab < 2 || dim == 0) throw BinaryFormatError(Kind::InvalidHeader, "checkpoint: invalid V/D");
  const std::uint64_t expected = (static_cast<std::uint64_t>(vocab) * dim + static_cast<std::uint64_t>(dim) * dim) * 8;
  if (r.remaining() < expected) throw BinaryFormatError(Kind::Truncated, "checkpoint: truncated payload");
  if (r.remaining() > expected) throw BinaryFormatError(Kind::TrailingBytes, "checkpoint: trailing bytes");
  EncoderParams p(vocab, dim);
  for (double& v : p.token_table) v = r.get_f64();
  for (double& v : p.projection) v = r.get_f64();
  for (double v : p.token_table) {
    if (!std::isfinite(v)) throw BinaryFormatError(Kind::NonFinite, "checkpoint: non-finite value");
  }
  for (double v : p.projection) {
    if (!std::isfinite(v)) throw BinaryFormatError(Kind::NonFinite, "checkpoint: non-finite value");
  }
  return p;
}

inline void save_checkpoint_file(const EncoderParams& params, const std::string& path) {
  write_file(path, save_checkpoint(params));
}

inline EncoderParams load_checkpoint_file(const std::string& path) {
  return load_checkpoint(read_file(path));
}

// ---- text-level encoder ----------------------------------------------------

class Encoder {
 public:
  static constexpr std::size_t kDefaultMaxDocTokens = 1024;

  explicit Encoder(EncoderParams params, TokenizerConfig tokenizer = {},
                   std::size_t max_doc_tokens = kDefaultMaxDocTokens)
      : params_(std::move(params)), tokenizer_(tokenizer), max_doc_tokens_(max_doc_tokens) {
    params_.validate();
    tokenizer_.validate();
    if (tokenizer_.vocab_size != params_.vocab) {
      throw InvalidArgument("Encoder: tokenizer vocab_size " + std::to_string(tokenizer_.vocab_size) +
                            " != checkpoint vocab " + std::to_string(params_.vocab));
    }
  }

  const EncoderParams& params() const noexcept { return params_; }
  const TokenizerConfig& tokenizer() const noexcept { return tokenizer_; }
  std::size_t max_doc_tokens() const noexcept { return max_doc_tokens_; }
  std::uint32_t dim() const noexcept { return params_.dim; }

  std::vector<TokenId> tokens(std::string_view text) const { return tokenize(text, tokenizer_); }

  std::string_view truncate_document(std::string_view text) const {
    return truncate_tokens(text, max_doc_tokens_);
  }

  std::vector<TokenId> document_tokens(const Document& doc) const {
    return tokens(truncate_document(doc.text));
  }

  std::vector<TokenId> query_tokens(const Query& query, std::string_view instruction) const {
    std::string text(instruction);
    text += ' ';
    text += query.text;
    return tokens(text);
  }

  Vector encode_tokens(std::span<const TokenId> ids) const { return encode(ids, params_); }
  Vector encode_text(std::string_view text) const { return encode_tokens(tokens(text)); }
  Vector encode_document(const Document& doc) const { return encode_tokens(document_tokens(doc)); }
  Vector encode_query(const Query& query, std::string_view instruction) const {
    return encode_tokens(query_tokens(query, instruction));
  }

 private:
  EncoderParams params_;
  TokenizerConfig tokenizer_;
  std::size_t max_doc_tokens_;
};

// Encoder whose tokenizer vocabulary matches the parameters.
inline Encoder encoder_for(EncoderParams params) {
  TokenizerConfig tok;
  tok.vocab_size = params.vocab;
  return Encoder(std::move(params), tok);
}

inline Encoder load_encoder_file(const std::string& path) { return encoder_for(load_checkpoint_file(path)); }

// ---- externally supplied embeddings ----------------------------------------

class ExternalEmbeddingSet {
 public:
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool contains(const std::string& id) const { return vectors_.count(id) != 0; }

  const Vector& at(const std::string& id) const {
    const auto it = vectors_.find(id);
    if (it == vectors_.end()) {
      throw EmbeddingSetError(EmbeddingSetError::Kind::MissingId, "no external embedding for id \"" + id + "\"");
    }
    return it->second;
  }

  void insert(const std::string& id, std::vector<double> values) {
    using Kind = EmbeddingSetError::Kind;
    if (values.empty()) throw EmbeddingSetError(Kind::DimMismatch, "empty vector for id \"" + id + "\"");
    for (double v : values) {
      if (!std::isfinite(v)) throw EmbeddingSetError(Kind::NonFinite, "non-finite value for id \"" + id + "\"");
    }
    if (dim_ != 0 && values.size() != dim_) {
      throw EmbeddingSetError(Kind::DimMismatch, "id \"" + id + "\" has dim " + std::to_string(values.size()) +
                                                     ", expected " + std::to_string(dim_));
    }
    if (vectors_.count(id)) throw EmbeddingSetError(Kind::DuplicateId, "duplicate id \"" + id + "\"");
    dim_ = values.size();
    vectors_.emplace(id, Vector(std::move(values)));
  }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Vector> vectors_;
};

// JSON-lines {"id": string, "vector": [reals]}.
inline ExternalEmbeddingSet load_external_embeddings(std::istream& in, const std::string& source) {
  ExternalEmbeddingSet set;
  for_each_jsonl(in, source, [&](const Json& rec, std::size_t line) {
    const std::string id = detail::string_field(rec, "id", source, line);
    const auto it = rec.find("vector");
    if (it == rec.end() || !it->is_array()) throw ParseError(source, line, "missing array field \"vector\"");
    std::vector<double> values;
    values.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number()) throw ParseError(source, line, "non-numeric vector entry");
      values.push_back(v.get<double>());
    }
    set.insert(id, std::move(values));
  });
  return set;
}

inline ExternalEmbeddingSet load_external_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_external_embeddings(in, path);
}

}  // namespace e2rank
