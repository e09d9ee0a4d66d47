#pragma once

#include "ctm/corpus.hpp"
#include "ctm/doc_matrix.hpp"
#include "ctm/preprocess.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctm {

/// Document vectors aligned to corpus order.
struct EmbeddingMatrix {
    std::vector<std::string> ids;
    Eigen::MatrixXd vectors; ///< n_docs x dim
    std::string provider_tag;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors.cols()); }
    DocMatrix as_doc_matrix() const { return {ids, vectors}; }
};

// CTME binary layout, all little-endian:
//   "CTME" | version u16 | count u32 | dim u32 |
//   count x ( id_len u16 | id bytes | dim x float32 )
inline constexpr char kCtmeMagic[4] = {'C', 'T', 'M', 'E'};
inline constexpr std::uint16_t kCtmeVersion = 1;

/// Serializes rows in their current order. Values are rounded to float32.
std::string encode_ctme(const EmbeddingMatrix& matrix);
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

/// Reads a CTME or JSONL ({"id": ..., "vector": [...]}) embedding file and
/// reorders rows to `ids`. Throws ParseError for unknown magic/version or a
/// dim mismatch, ValidationError for a missing, extra or duplicated id.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const std::vector<std::string>& ids);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Corpus& corpus);

/// Rows decoded in file order, without alignment.
EmbeddingMatrix decode_embeddings(std::string_view bytes);

/// Unit-norm pseudo-random Gaussian direction for a term.
Eigen::VectorXd hash_term_vector(const std::string& term, std::size_t dim, std::uint64_t seed);

/// L2-normalized sum of term vectors over each document's unigrams (with
/// multiplicity). Documents without unigrams get the zero vector and their
/// ids are appended to `empty_ids` when provided.
EmbeddingMatrix hash_embed(const std::vector<CleanDoc>& docs, std::size_t dim, std::uint64_t seed,
                           std::vector<std::string>* empty_ids = nullptr);
EmbeddingMatrix hash_embed(const Corpus& corpus, const CleanConfig& config, std::size_t dim,
                           std::uint64_t seed, std::vector<std::string>* empty_ids = nullptr);

} // namespace ctm
