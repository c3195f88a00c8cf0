#pragma once

// Criteria retrieval: embed the user's side of a dialogue and every subtype
// criteria document, then pick the document with the highest cosine
// similarity.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cadence/domain.hpp"

namespace cadence {

struct CriteriaDocument {
  std::size_t index = 0;
  std::string subtype_name;
  std::string text;

  friend bool operator==(const CriteriaDocument&, const CriteriaDocument&) = default;
};

struct CriteriaCorpus {
  std::vector<CriteriaDocument> documents;
  std::string source_id;

  /// Builds a corpus with indices 0..N-1 in the given order.
  static CriteriaCorpus from_texts(std::string source_id,
                                   std::vector<std::pair<std::string, std::string>> named_texts);
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  double norm() const;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// Throws Error(kDomain) for empty text, Error(kTransport/kTimeout) for
  /// retryable transport failures.
  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::size_t dimension() const = 0;
};

/// Offline embedder: lowercase word tokens split on non-alphanumeric bytes,
/// CJK codepoints as single-character tokens, FNV-1a into 256 buckets, term
/// counts, L2 normalisation. Bit-stable across runs and platforms.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kBuckets = 256;

  EmbeddingVector embed(std::string_view text) override;
  std::size_t dimension() const override { return kBuckets; }

  /// Bucketed term counts before normalisation.
  static std::vector<double> term_counts(std::string_view text);
  static std::vector<std::string> tokenize(std::string_view text);
  static std::uint32_t fnv1a(std::string_view bytes);

  /// Number of embed() calls served, for observing whether retrieval ran.
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

struct RemoteEmbedderConfig {
  std::string endpoint;  // e.g. http://localhost:11434/api/embeddings
  std::string model;
  std::size_t dimension = 0;  // 0: learn from the first response
  int timeout_ms = 10000;
};

/// Speaks {"model","prompt"} -> {"embedding":[...]} over HTTP(S).
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  EmbeddingVector embed(std::string_view text) override;
  std::size_t dimension() const override { return dimension_.load(); }

 private:
  RemoteEmbedderConfig config_;
  std::atomic<std::size_t> dimension_;
};

struct RetrievalResult {
  std::size_t index = 0;
  CriteriaDocument document;
  double score = 0.0;
};

/// User-turn texts in order joined by '\n'. Throws Error(kDomain) when the
/// dialogue has no user turn.
std::string extract_user_content(const Dialogue& dialogue);

EmbeddingVector embed(std::string_view text, EmbeddingProvider& provider);

/// a.b / (|a||b|). Throws Error(kDomain) on dimension mismatch or zero norm.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Scores closer than this count as tied, so rounding in the dot products
/// cannot reorder mathematically equal candidates.
inline constexpr double kTieTolerance = 1e-12;

/// Argmax of cosine similarity over the corpus; ties go to the lowest index.
/// Documents whose embedding has zero norm are skipped; if all are, throws
/// Error(kDomain).
RetrievalResult retrieve_criteria(std::string_view user_content, const CriteriaCorpus& corpus,
                                  EmbeddingProvider& provider);

/// Same selection over embeddings computed elsewhere.
std::size_t select_best(const EmbeddingVector& query, std::span<const EmbeddingVector> documents,
                        double* best_score = nullptr);

using WarningSink = std::function<void(std::string_view)>;

/// Reads a JSONL corpus of {"subtype_name", "text"} records. Duplicate
/// subtype names are reported through warn and kept.
CriteriaCorpus load_corpus(const std::filesystem::path& path, const WarningSink& warn = {});

}  // namespace cadence
