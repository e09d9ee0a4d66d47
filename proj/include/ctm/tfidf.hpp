#pragma once

#include "ctm/preprocess.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctm {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Term universe of a matrix. Terms are sorted lexicographically and
/// column j of the matrix holds terms[j].
struct Vocabulary {
    std::vector<std::string> terms;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::size_t> doc_freq; ///< documents containing each term

    std::size_t size() const noexcept { return terms.size(); }
    std::optional<std::size_t> find(const std::string& term) const;
};

enum class MatrixKind { counts, tfidf };

struct TermMatrix {
    MatrixKind kind = MatrixKind::counts;
    std::vector<std::string> doc_ids;
    Vocabulary vocabulary;
    SparseRowMatrix weights;
    /// tf-idf only: weights before row normalization, same sparsity as `weights`.
    SparseRowMatrix raw_weights;

    std::size_t n_docs() const noexcept { return static_cast<std::size_t>(weights.rows()); }
    std::size_t n_terms() const noexcept { return static_cast<std::size_t>(weights.cols()); }
    double weight(std::size_t doc, const std::string& term) const;
};

struct TfidfOptions {
    double max_df = 0.8;  ///< upper document-frequency proportion (inclusive)
    double min_df = 0.11; ///< lower document-frequency proportion (inclusive)
    bool median_cut = true;
};

/// Raw occurrence counts; the vocabulary covers exactly the terms that occur.
TermMatrix count_matrix(const std::vector<CleanDoc>& docs);

/// Drops terms whose df/N lies outside [min_df, max_df].
TermMatrix filter_document_frequency(const TermMatrix& counts, double max_df, double min_df);

/// Smoothed inverse document frequency ln((1 + N) / (1 + df)) + 1.
double smoothed_idf(std::size_t n_docs, std::size_t doc_freq);

/// df thresholds, then tf * idf, then (optionally) the median cut, then L2
/// row normalization. Throws ValidationError when every term is filtered out.
TermMatrix fit_tfidf(const TermMatrix& counts, const TfidfOptions& options = {});

/// Drops terms whose maximum pre-normalization weight is strictly below the
/// median of all nonzero pre-normalization weights, then renormalizes rows.
TermMatrix median_filter(const TermMatrix& tfidf);

/// Keeps the listed columns (ascending order), reindexing the vocabulary.
TermMatrix select_terms(const TermMatrix& matrix, const std::vector<std::size_t>& columns);

Eigen::MatrixXd to_dense(const TermMatrix& matrix);

/// Matrix Market coordinate text (1-based indices).
std::string to_matrix_market(const SparseRowMatrix& matrix, std::string_view comment = {});
SparseRowMatrix parse_matrix_market(std::string_view text);

/// Writes `<stem>.mtx` and `<stem>.vocab.txt` (line number = column).
void write_term_matrix(const TermMatrix& matrix, const std::filesystem::path& mtx_path,
                       const std::filesystem::path& vocab_path);

/// Inverse of write_term_matrix; doc_freq is recovered from column support.
TermMatrix read_term_matrix(const std::filesystem::path& mtx_path,
                            const std::filesystem::path& vocab_path, MatrixKind kind,
                            std::vector<std::string> doc_ids);

} // namespace ctm
