#include "kgval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstdlib>
#include <numeric>

#include <nlohmann/json.hpp>

#include "kgval/error.hpp"

namespace kgval {

void ChunkingConfig::validate() const {
    if (max_chunk_chars == 0) throw ConfigError("max_chunk_chars must be positive");
    if (overlap_chars >= max_chunk_chars) {
        throw ConfigError("overlap_chars must be smaller than max_chunk_chars");
    }
    for (const auto& s : separators) {
        if (s.empty()) throw ConfigError("chunk separators must be non-empty");
    }
}

namespace {

bool is_continuation(std::string_view body, std::size_t pos) {
    return pos < body.size() && (static_cast<unsigned char>(body[pos]) & 0xC0) == 0x80;
}

class Splitter {
public:
    Splitter(std::string_view body, const ChunkingConfig& cfg) : body_(body), cfg_(cfg) {}

    std::vector<ChunkSpan> run() {
        if (!body_.empty()) split(0, body_.size(), 0);
        return std::move(out_);
    }

private:
    void emit(std::size_t b, std::size_t e, std::size_t overlap) {
        if (e > b) out_.push_back(ChunkSpan{b, e, overlap});
    }

    void split(std::size_t begin, std::size_t end, std::size_t level) {
        if (end - begin <= cfg_.max_chunk_chars) {
            emit(begin, end, 0);
            return;
        }
        const std::string_view span = body_.substr(begin, end - begin);
        while (level < cfg_.separators.size() &&
               span.find(cfg_.separators[level]) == std::string_view::npos) {
            ++level;
        }
        if (level == cfg_.separators.size()) {
            hard_cut(begin, end);
            return;
        }

        const std::string& sep = cfg_.separators[level];
        std::size_t group_begin = begin;
        std::size_t group_end = begin;
        bool have_group = false;
        std::size_t piece_begin = begin;
        for (;;) {
            std::size_t hit = body_.find(sep, piece_begin);
            const std::size_t piece_end = (hit == std::string_view::npos || hit >= end) ? end : hit;
            if (!have_group) {
                group_begin = piece_begin;
                group_end = piece_end;
                have_group = true;
            } else if (piece_end - group_begin <= cfg_.max_chunk_chars) {
                group_end = piece_end;
            } else {
                flush(group_begin, group_end, level);
                group_begin = piece_begin;
                group_end = piece_end;
            }
            if (piece_end == end) break;
            piece_begin = piece_end + sep.size();
        }
        flush(group_begin, group_end, level);
    }

    void flush(std::size_t b, std::size_t e, std::size_t level) {
        if (e - b <= cfg_.max_chunk_chars) {
            emit(b, e, 0);
        } else {
            split(b, e, level + 1);
        }
    }

    void hard_cut(std::size_t begin, std::size_t end) {
        const std::size_t max = cfg_.max_chunk_chars;
        std::size_t start = begin;
        std::size_t overlap = 0;
        for (;;) {
            std::size_t stop = std::min(start + max, end);
            while (stop > start + 1 && stop < end && is_continuation(body_, stop)) --stop;
            emit(start, stop, overlap);
            if (stop == end) return;

            std::size_t next = stop - std::min(cfg_.overlap_chars, stop - start);
            while (next < stop && is_continuation(body_, next)) ++next;
            if (next <= start) next = stop;
            overlap = stop - next;
            start = next;
        }
    }

    std::string_view body_;
    const ChunkingConfig& cfg_;
    std::vector<ChunkSpan> out_;
};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::vector<ChunkSpan> chunk_spans(std::string_view body, const ChunkingConfig& cfg) {
    cfg.validate();
    return Splitter(body, cfg).run();
}

std::vector<std::string> chunk_document(const Document& doc, const ChunkingConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& s : chunk_spans(doc.body, cfg)) out.push_back(doc.body.substr(s.begin, s.size()));
    return out;
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidArgument("embedding contains a non-finite value");
    }
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) throw ZeroVector();
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw InvalidArgument("embedding dimension must be positive");
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (text.empty()) throw EmptyText();
        std::string padded = " ";
        for (unsigned char c : text) padded += static_cast<char>(std::tolower(c));
        padded += ' ';
        std::vector<double> v(dimension_, 0.0);
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            v[fnv1a(std::string_view(padded).substr(i, 3)) % dimension_] += 1.0;
        }
        const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        for (double& x : v) x /= norm;
        out.emplace_back(std::move(v));
    }
    return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string endpoint_url, std::string model,
                                                 std::shared_ptr<HttpTransport> transport,
                                                 std::string api_key_source,
                                                 std::optional<std::size_t> dimension,
                                                 std::size_t batch_size)
    : endpoint_url_(std::move(endpoint_url)),
      model_(std::move(model)),
      transport_(std::move(transport)),
      api_key_source_(std::move(api_key_source)),
      dimension_(dimension),
      batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::size_t RemoteEmbeddingProvider::dimension() const {
    std::lock_guard lock(mu_);
    if (!dimension_) throw ConfigError("remote embedding dimension unknown before first request");
    return *dimension_;
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); i += batch_size_) {
        std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                       texts.begin() + static_cast<std::ptrdiff_t>(
                                                           std::min(texts.size(), i + batch_size_)));
        auto part = request(batch);
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::request(const std::vector<std::string>& texts) {
    std::string base = endpoint_url_;
    while (!base.empty() && base.back() == '/') base.pop_back();
    HttpRequest req;
    req.method = "POST";
    req.url = base + "/embeddings";
    req.body = nlohmann::json{{"model", model_}, {"input", texts}}.dump();
    req.headers.emplace_back("Content-Type", "application/json");
    if (const char* key = std::getenv(api_key_source_.c_str()); key && *key) {
        req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
    const HttpResponse res = send_with_retry(*transport_, req, retry_);

    auto j = nlohmann::json::parse(res.body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() ||
        j["data"].size() != texts.size()) {
        throw TransportError(res.status, "unexpected embeddings payload");
    }
    std::vector<std::optional<EmbeddingVector>> slots(texts.size());
    for (std::size_t pos = 0; pos < j["data"].size(); ++pos) {
        const auto& item = j["data"][pos];
        const std::size_t idx = item.value("index", pos);
        if (idx >= slots.size()) throw TransportError(res.status, "embedding index out of range");
        slots[idx] = EmbeddingVector(item.at("embedding").get<std::vector<double>>());
    }
    std::vector<EmbeddingVector> out;
    std::lock_guard lock(mu_);
    for (auto& s : slots) {
        if (!s) throw TransportError(res.status, "embedding response is missing an index");
        if (!dimension_) dimension_ = s->size();
        if (s->size() != *dimension_) throw DimensionMismatch(*dimension_, s->size());
        out.push_back(std::move(*s));
    }
    return out;
}

std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                   EmbeddingProvider& provider) {
    if (texts.empty()) throw InvalidArgument("nothing to embed");
    for (const auto& t : texts) {
        if (t.empty()) throw EmptyText();
    }
    auto out = provider.embed_batch(texts);
    if (out.size() != texts.size()) throw Error("embedding provider returned the wrong count");
    const std::size_t d = provider.dimension();
    for (const auto& v : out) {
        if (v.size() != d) throw DimensionMismatch(d, v.size());
    }
    return out;
}

CorpusIndex CorpusIndex::build(const std::vector<Document>& docs, const ChunkingConfig& cfg,
                               EmbeddingProvider& provider) {
    std::vector<ContextChunk> chunks;
    for (const auto& doc : docs) {
        for (auto& text : chunk_document(doc, cfg)) {
            chunks.push_back(ContextChunk{std::move(text), doc.id, std::nullopt, doc.origin});
        }
    }
    if (chunks.empty()) return CorpusIndex({}, {}, 0);
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    auto vectors = embed(texts, provider);
    const std::size_t d = provider.dimension();
    return CorpusIndex(std::move(chunks), std::move(vectors), d);
}

CorpusIndex::CorpusIndex(std::vector<ContextChunk> chunks, std::vector<EmbeddingVector> vectors,
                         std::size_t dimension)
    : chunks_(std::move(chunks)), vectors_(std::move(vectors)), dimension_(dimension) {
    if (chunks_.size() != vectors_.size()) throw InvalidArgument("chunk/vector count mismatch");
    for (const auto& v : vectors_) {
        if (v.size() != dimension_) throw DimensionMismatch(dimension_, v.size());
    }
}

std::vector<std::size_t> CorpusIndex::top_k_indices(const EmbeddingVector& query,
                                                    std::size_t k) const {
    if (empty()) throw InvalidArgument("top_k on an empty index");
    if (k == 0) throw InvalidArgument("k must be at least 1");
    std::vector<double> scores(vectors_.size());
    for (std::size_t i = 0; i < vectors_.size(); ++i) scores[i] = cosine_similarity(query, vectors_[i]);

    std::vector<std::size_t> order(vectors_.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    order.resize(n);
    return order;
}

std::vector<ContextChunk> CorpusIndex::top_k(const EmbeddingVector& query, std::size_t k) const {
    std::vector<ContextChunk> out;
    for (std::size_t i : top_k_indices(query, k)) {
        ContextChunk c = chunks_[i];
        c.score = cosine_similarity(query, vectors_[i]);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ContextChunk> CorpusIndex::top_k(std::string_view query, std::size_t k,
                                             EmbeddingProvider& provider) const {
    auto q = embed({std::string(query)}, provider);
    return top_k(q.front(), k);
}

}  // namespace kgval
