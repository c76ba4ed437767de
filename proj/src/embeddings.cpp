#include "loyalty/embeddings.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "loyalty/error.hpp"

namespace loyalty {
namespace {

constexpr std::string_view kMagic = "EMB1";

void put_u16(std::string& out, std::size_t v) {
  if (v > 0xFFFF) throw DataError("embedding file: string longer than 65535 bytes");
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::size_t v) {
  if (v > 0xFFFFFFFFu) throw DataError("embedding file: count exceeds u32");
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t uint(std::size_t width) {
    need(width);
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < width; ++k) v |= std::uint64_t{static_cast<unsigned char>(bytes_[pos_ + k])} << (8 * k);
    pos_ += width;
    return v;
  }
  std::string str(std::size_t len) {
    need(len);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("embedding file: corrupt (truncated)");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

EmbeddingProvider parse_provider(std::string_view name) {
  if (name == "file") return EmbeddingProvider::file;
  if (name == "stub") return EmbeddingProvider::stub;
  if (name == "service") return EmbeddingProvider::service;
  throw UsageError("unknown embedding provider '" + std::string(name) + "' (expected stub, service or file)");
}

std::string_view to_string(EmbeddingProvider provider) {
  switch (provider) {
    case EmbeddingProvider::file: return "file";
    case EmbeddingProvider::stub: return "stub";
    case EmbeddingProvider::service: return "service";
  }
  return "?";
}

void EmbeddingMatrix::validate() const {
  if (rows.rows != ids.size()) {
    throw DataError("embedding matrix: " + std::to_string(rows.rows) + " rows but " + std::to_string(ids.size()) +
                    " ids");
  }
  if (fingerprint.empty()) throw DataError("embedding matrix: empty fingerprint");
  for (std::size_t i = 0; i < rows.data.size(); ++i) {
    if (!std::isfinite(rows.data[i])) {
      throw DataError("embedding matrix: non-finite value in row '" + ids[i / rows.cols] + "'");
    }
  }
}

const std::array<std::string_view, 4>& candidate_models() {
  static const std::array<std::string_view, 4> names = {
      "bert-base-japanese-v3",
      "bert-base-japanese-char-v3",
      "bert-large-japanese-v2",
      "bert-large-japanese-char-v2",
  };
  return names;
}

std::string normalize_model_name(std::string_view name) {
  std::string_view bare = name;
  if (bare.starts_with("cl-tohoku/")) bare.remove_prefix(std::string_view("cl-tohoku/").size());
  for (auto candidate : candidate_models()) {
    if (bare == candidate) return std::string(candidate);
  }
  std::string msg = "unknown model '" + std::string(name) + "'; valid models:";
  for (auto candidate : candidate_models()) msg += " " + std::string(candidate);
  throw UsageError(msg);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string stub_fingerprint(const EmbeddingConfig& cfg) {
  return "stub:fnv1a64-byte-ngram-1-3:d=" + std::to_string(cfg.d_text) + ":seed=" + std::to_string(cfg.seed);
}

std::vector<double> embed_stub_row(std::string_view text, const EmbeddingConfig& cfg) {
  if (cfg.d_text == 0) throw UsageError("d_text must be positive");
  std::uint64_t basis = kFnvOffsetBasis;
  if (cfg.seed != 0) {
    std::string seed_bytes;
    for (int k = 0; k < 8; ++k) seed_bytes.push_back(static_cast<char>((cfg.seed >> (8 * k)) & 0xFF));
    basis = fnv1a64(seed_bytes, basis);
  }
  std::vector<double> row(cfg.d_text, 0.0);
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
      const auto h = fnv1a64(text.substr(i, n), basis);
      row[h % cfg.d_text] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  double sq = 0.0;
  for (double v : row) sq += v * v;
  if (sq > 0.0) {
    const double norm = std::sqrt(sq);
    for (double& v : row) v /= norm;
  }
  return row;
}

EmbeddingMatrix embed_stub(const std::vector<std::string>& ids, const std::vector<std::string>& texts,
                           const EmbeddingConfig& cfg) {
  if (ids.size() != texts.size()) throw UsageError("embed_stub: ids and texts differ in length");
  if (cfg.d_text == 0) throw UsageError("d_text must be positive");
  EmbeddingMatrix out;
  out.rows = Matrix(texts.size(), cfg.d_text);
  out.ids = ids;
  out.fingerprint = stub_fingerprint(cfg);
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = embed_stub_row(texts[static_cast<std::size_t>(i)], cfg);
    std::copy(row.begin(), row.end(), out.rows.row(static_cast<std::size_t>(i)).begin());
  }
  return out;
}

EmbeddingMatrix embed_via_service(const std::vector<std::string>& ids, const std::vector<std::string>& texts,
                                  const EmbeddingConfig& cfg, const std::string& endpoint) {
  if (ids.size() != texts.size()) throw UsageError("embed_via_service: ids and texts differ in length");
  const auto model = normalize_model_name(cfg.model_name);
  if (endpoint.empty()) throw UsageError("embedding service endpoint not set");

  httplib::Client client(endpoint);
  client.set_connection_timeout(10);
  client.set_read_timeout(600);

  EmbeddingMatrix out;
  out.ids = ids;
  std::vector<double> values;
  std::size_t dim = 0;
  std::string service_fingerprint;

  for (std::size_t start = 0; start < texts.size(); start += kServiceBatchSize) {
    const std::size_t end = std::min(texts.size(), start + kServiceBatchSize);
    nlohmann::json request = {
        {"model", model},
        {"texts", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                           texts.begin() + static_cast<std::ptrdiff_t>(end))},
        {"max_tokens", cfg.len_max},
        {"pooling", "pooler"},
    };
    const std::string context = "embedding service " + endpoint + " (batch at row " + std::to_string(start) + ")";
    auto res = client.Post("/v1/embed", request.dump(), "application/json");
    if (!res) throw RuntimeFailure(context + ": " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw RuntimeFailure(context + ": HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw RuntimeFailure(context + ": malformed JSON reply: " + e.what());
    }
    if (!reply.contains("dim") || !reply.contains("vectors") || !reply["dim"].is_number_unsigned()) {
      throw RuntimeFailure(context + ": reply lacks dim/vectors");
    }
    const auto batch_dim = reply["dim"].get<std::size_t>();
    if (batch_dim == 0) throw RuntimeFailure(context + ": service reported dim 0");
    if (dim != 0 && batch_dim != dim) {
      throw RuntimeFailure(context + ": dimension mismatch between batches (" + std::to_string(dim) + " then " +
                           std::to_string(batch_dim) + ")");
    }
    dim = batch_dim;
    if (reply.contains("model_fingerprint") && reply["model_fingerprint"].is_string()) {
      service_fingerprint = reply["model_fingerprint"].get<std::string>();
    }
    const auto& vectors = reply["vectors"];
    if (!vectors.is_array() || vectors.size() != end - start) {
      throw RuntimeFailure(context + ": expected " + std::to_string(end - start) + " vectors");
    }
    for (const auto& vec : vectors) {
      if (!vec.is_array() || vec.size() != dim) throw RuntimeFailure(context + ": vector width differs from dim");
      for (const auto& x : vec) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
          throw RuntimeFailure(context + ": non-finite value in payload");
        }
        values.push_back(x.get<double>());
      }
    }
  }
  out.rows.rows = texts.size();
  out.rows.cols = dim;
  out.rows.data = std::move(values);
  out.fingerprint = "service:" + model + ":" + (service_fingerprint.empty() ? "unknown" : service_fingerprint) +
                    ":len_max=" + std::to_string(cfg.len_max);
  return out;
}

std::string serialize_embeddings(const EmbeddingMatrix& matrix) {
  matrix.validate();
  if (matrix.rows.cols == 0) throw DataError("embedding matrix: d_text must be positive");
  std::string out(kMagic);
  put_u32(out, matrix.rows.rows);
  put_u32(out, matrix.rows.cols);
  put_u16(out, matrix.fingerprint.size());
  out += matrix.fingerprint;
  for (const auto& id : matrix.ids) {
    put_u16(out, id.size());
    out += id;
  }
  out.reserve(out.size() + 8 * matrix.rows.data.size());
  for (double v : matrix.rows.data) put_f64(out, v);
  return out;
}

EmbeddingMatrix deserialize_embeddings(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("embedding file: bad magic number (expected EMB1)");
  }
  Reader in(bytes.substr(kMagic.size()));
  EmbeddingMatrix m;
  const auto n = in.uint(4);
  const auto d = in.uint(4);
  if (d == 0) throw DataError("embedding file: invalid header (d_text = 0)");
  m.fingerprint = in.str(in.uint(2));
  if (m.fingerprint.empty()) throw DataError("embedding file: invalid header (empty fingerprint)");
  std::unordered_set<std::string> seen;
  for (std::uint64_t i = 0; i < n; ++i) {
    m.ids.push_back(in.str(in.uint(2)));
    if (!seen.insert(m.ids.back()).second) throw DataError("embedding file: duplicate id '" + m.ids.back() + "'");
  }
  m.rows = Matrix(n, d);
  for (double& v : m.rows.data) v = in.f64();
  if (!in.at_end()) throw DataError("embedding file: id/value count mismatch (trailing bytes)");
  m.validate();
  return m;
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::string& path) {
  const auto bytes = serialize_embeddings(matrix);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RuntimeFailure("write failed for '" + path + "'");
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_embeddings(buffer.str());
}

std::uint64_t checksum(const EmbeddingMatrix& matrix) { return fnv1a64(serialize_embeddings(matrix)); }

EmbeddingMatrix align_to(const EmbeddingMatrix& matrix, std::span<const std::string> ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < matrix.ids.size(); ++i) index.emplace(matrix.ids[i], i);
  EmbeddingMatrix out;
  out.fingerprint = matrix.fingerprint;
  out.ids.assign(ids.begin(), ids.end());
  out.rows = Matrix(ids.size(), matrix.rows.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = index.find(ids[i]);
    if (it == index.end()) throw DataError("embeddings: no row for id '" + ids[i] + "'");
    const auto src = matrix.rows.row(it->second);
    std::copy(src.begin(), src.end(), out.rows.row(i).begin());
  }
  return out;
}

}  // namespace loyalty
