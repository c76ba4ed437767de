#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loyalty/matrix.hpp"

namespace loyalty {

enum class EmbeddingProvider { file, stub, service };

EmbeddingProvider parse_provider(std::string_view name);
std::string_view to_string(EmbeddingProvider provider);

struct EmbeddingConfig {
  EmbeddingProvider provider = EmbeddingProvider::stub;
  std::size_t d_text = 200;
  std::string model_name;  // service only
  std::size_t len_max = 200;
  std::uint64_t seed = 0;  // stub only
};

// Frozen text feature map: one row per record, never modified by training.
struct EmbeddingMatrix {
  Matrix rows;
  std::vector<std::string> ids;
  std::string fingerprint;

  std::size_t width() const { return rows.cols; }
  // Throws DataError when rows/ids disagree, an entry is non-finite or the
  // fingerprint is empty.
  void validate() const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

// The four pre-trained Japanese checkpoints the service may serve.
const std::array<std::string_view, 4>& candidate_models();

// Accepts a bare checkpoint name or one prefixed with "cl-tohoku/" and returns
// the bare name. Throws UsageError listing the valid names otherwise.
std::string normalize_model_name(std::string_view name);

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = kFnvOffsetBasis);

// Feature-hashing stand-in for the frozen encoder. Every byte 1-, 2- and
// 3-gram of the text is hashed with FNV-1a 64; the hash picks bucket
// hash % d_text and its top bit picks the sign (+1 when clear). The signed
// counts are L2-normalised; empty text stays the zero vector. A non-zero seed
// is folded into the FNV basis as 8 little-endian bytes, giving independent
// encoders with the same mechanics.
std::vector<double> embed_stub_row(std::string_view text, const EmbeddingConfig& cfg);

// Rows are computed in parallel and are identical to embed_stub_row.
EmbeddingMatrix embed_stub(const std::vector<std::string>& ids, const std::vector<std::string>& texts,
                           const EmbeddingConfig& cfg);

inline constexpr std::size_t kServiceBatchSize = 64;

// Queries POST {endpoint}/v1/embed in batches of at most 64 texts. Throws
// RuntimeFailure on transport errors, non-200 replies, dimension changes
// between batches or non-finite values; UsageError on an unknown model.
EmbeddingMatrix embed_via_service(const std::vector<std::string>& ids, const std::vector<std::string>& texts,
                                  const EmbeddingConfig& cfg, const std::string& endpoint);

std::string stub_fingerprint(const EmbeddingConfig& cfg);

// Binary, little-endian: "EMB1", u32 N, u32 d_text, u16 fingerprint length +
// bytes, N x (u16 id length + bytes), N*d_text float64 row-major.
void save_embeddings(const EmbeddingMatrix& matrix, const std::string& path);
EmbeddingMatrix load_embeddings(const std::string& path);
std::string serialize_embeddings(const EmbeddingMatrix& matrix);
EmbeddingMatrix deserialize_embeddings(std::string_view bytes);

// FNV-1a over the serialized form.
std::uint64_t checksum(const EmbeddingMatrix& matrix);

// Rows reordered to follow `ids`; throws DataError on a missing id.
EmbeddingMatrix align_to(const EmbeddingMatrix& matrix, std::span<const std::string> ids);

}  // namespace loyalty
