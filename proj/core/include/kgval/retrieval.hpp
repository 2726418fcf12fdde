#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgval/http.hpp"
#include "kgval/types.hpp"

namespace kgval {

struct Document {
    std::string id;
    std::string body;
    OriginKind origin = OriginKind::None;
};

struct ChunkingConfig {
    std::size_t max_chunk_chars = 1000;
    std::size_t overlap_chars = 200;
    std::vector<std::string> separators{"\n\n", "\n", ". ", " "};

    void validate() const;
};

/// Byte range of one chunk inside the document body.
struct ChunkSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    // Bytes shared with the previous chunk; zero when the two are split at a separator.
    std::size_t overlap = 0;

    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const ChunkSpan&, const ChunkSpan&) = default;
};

/// Recursive splitting. Pieces between occurrences of the first separator are packed
/// greedily up to `max_chunk_chars`; a piece that is still too long is split with the
/// next separator, and without any separator left it is cut every
/// `max_chunk_chars - overlap_chars` bytes so consecutive cuts overlap. The separator
/// at a split point belongs to neither neighbour. Hard cuts never split a UTF-8
/// sequence.
std::vector<ChunkSpan> chunk_spans(std::string_view body, const ChunkingConfig& cfg);

std::vector<std::string> chunk_document(const Document& doc, const ChunkingConfig& cfg);

class EmbeddingVector {
public:
    EmbeddingVector() = default;
    /// Throws InvalidArgument when any entry is not finite.
    explicit EmbeddingVector(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<double> values_;
};

/// (a.b) / (|a| |b|) clamped to [-1, 1]. Throws DimensionMismatch or ZeroVector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
};

/// Deterministic offline provider: character trigrams of the lower-cased text are
/// hashed (FNV-1a) into `dimension` buckets and the counts are L2-normalised.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dimension = 64);

    std::size_t dimension() const override { return dimension_; }
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::size_t dimension_;
};

/// OpenAI-compatible `/embeddings` client. The dimension is fixed by the first
/// response unless given up front.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(std::string endpoint_url, std::string model,
                            std::shared_ptr<HttpTransport> transport,
                            std::string api_key_source = "EMBED_API_KEY",
                            std::optional<std::size_t> dimension = std::nullopt,
                            std::size_t batch_size = 64);

    std::size_t dimension() const override;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::vector<EmbeddingVector> request(const std::vector<std::string>& texts);

    std::string endpoint_url_;
    std::string model_;
    std::shared_ptr<HttpTransport> transport_;
    std::string api_key_source_;
    std::optional<std::size_t> dimension_;
    std::size_t batch_size_;
    RetryPolicy retry_{};
    mutable std::mutex mu_;
};

/// Embeds `texts` (non-empty list, no empty strings) and checks every vector has
/// the provider's dimension.
std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                   EmbeddingProvider& provider);

/// Immutable chunk/vector store with exact top-k cosine search.
class CorpusIndex {
public:
    static CorpusIndex build(const std::vector<Document>& docs, const ChunkingConfig& cfg,
                             EmbeddingProvider& provider);

    /// Index over pre-embedded chunks; sizes and dimensions must agree.
    CorpusIndex(std::vector<ContextChunk> chunks, std::vector<EmbeddingVector> vectors,
                std::size_t dimension);

    const std::vector<ContextChunk>& chunks() const noexcept { return chunks_; }
    const std::vector<EmbeddingVector>& vectors() const noexcept { return vectors_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return chunks_.size(); }
    bool empty() const noexcept { return chunks_.empty(); }

    /// Positions of the best `k` chunks, by descending score, ties by position.
    std::vector<std::size_t> top_k_indices(const EmbeddingVector& query, std::size_t k) const;

    std::vector<ContextChunk> top_k(const EmbeddingVector& query, std::size_t k) const;
    std::vector<ContextChunk> top_k(std::string_view query, std::size_t k,
                                    EmbeddingProvider& provider) const;

private:
    std::vector<ContextChunk> chunks_;
    std::vector<EmbeddingVector> vectors_;
    std::size_t dimension_ = 0;
};

}  // namespace kgval
