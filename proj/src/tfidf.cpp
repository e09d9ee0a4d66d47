#include "ctm/tfidf.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace ctm {

namespace {

using Triplet = Eigen::Triplet<double>;

Vocabulary make_vocabulary(std::vector<std::string> terms, std::vector<std::size_t> doc_freq) {
    Vocabulary vocab;
    vocab.terms = std::move(terms);
    vocab.doc_freq = std::move(doc_freq);
    vocab.index.reserve(vocab.terms.size());
    for (std::size_t j = 0; j < vocab.terms.size(); ++j) vocab.index.emplace(vocab.terms[j], j);
    return vocab;
}

SparseRowMatrix from_triplets(Eigen::Index rows, Eigen::Index cols,
                              const std::vector<Triplet>& triplets) {
    SparseRowMatrix m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.prune(0.0);
    m.makeCompressed();
    return m;
}

SparseRowMatrix keep_columns(const SparseRowMatrix& src, const std::vector<std::size_t>& columns) {
    std::vector<std::ptrdiff_t> remap(static_cast<std::size_t>(src.cols()), -1);
    for (std::size_t j = 0; j < columns.size(); ++j) remap[columns[j]] = static_cast<std::ptrdiff_t>(j);
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(src.nonZeros()));
    for (Eigen::Index r = 0; r < src.outerSize(); ++r) {
        for (SparseRowMatrix::InnerIterator it(src, r); it; ++it) {
            if (auto c = remap[static_cast<std::size_t>(it.col())]; c >= 0) {
                triplets.emplace_back(r, c, it.value());
            }
        }
    }
    return from_triplets(src.rows(), static_cast<Eigen::Index>(columns.size()), triplets);
}

SparseRowMatrix l2_normalize_rows(const SparseRowMatrix& src) {
    SparseRowMatrix out = src;
    for (Eigen::Index r = 0; r < out.outerSize(); ++r) {
        double sq = 0.0;
        for (SparseRowMatrix::InnerIterator it(out, r); it; ++it) sq += it.value() * it.value();
        if (sq <= 0.0) continue;
        const double inv = 1.0 / std::sqrt(sq);
        for (SparseRowMatrix::InnerIterator it(out, r); it; ++it) it.valueRef() *= inv;
    }
    return out;
}

} // namespace

std::optional<std::size_t> Vocabulary::find(const std::string& term) const {
    auto it = index.find(term);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

double TermMatrix::weight(std::size_t doc, const std::string& term) const {
    auto col = vocabulary.find(term);
    if (!col) return 0.0;
    return weights.coeff(static_cast<Eigen::Index>(doc), static_cast<Eigen::Index>(*col));
}

TermMatrix count_matrix(const std::vector<CleanDoc>& docs) {
    std::map<std::string, std::size_t> df;
    std::vector<std::map<std::string, double>> row_counts(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (const auto& term : docs[d].terms) row_counts[d][term] += 1.0;
        for (const auto& [term, count] : row_counts[d]) ++df[term];
    }
    if (df.empty()) throw ValidationError("every document is empty; no terms to count");

    std::vector<std::string> terms;
    std::vector<std::size_t> doc_freq;
    for (const auto& [term, n] : df) {
        terms.push_back(term);
        doc_freq.push_back(n);
    }

    TermMatrix m;
    m.kind = MatrixKind::counts;
    m.vocabulary = make_vocabulary(std::move(terms), std::move(doc_freq));
    std::vector<Triplet> triplets;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        m.doc_ids.push_back(docs[d].id);
        for (const auto& [term, count] : row_counts[d]) {
            triplets.emplace_back(static_cast<Eigen::Index>(d),
                                  static_cast<Eigen::Index>(m.vocabulary.index.at(term)), count);
        }
    }
    m.weights = from_triplets(static_cast<Eigen::Index>(docs.size()),
                              static_cast<Eigen::Index>(m.vocabulary.size()), triplets);
    return m;
}

TermMatrix select_terms(const TermMatrix& matrix, const std::vector<std::size_t>& columns) {
    TermMatrix out;
    out.kind = matrix.kind;
    out.doc_ids = matrix.doc_ids;
    std::vector<std::string> terms;
    std::vector<std::size_t> doc_freq;
    for (std::size_t c : columns) {
        terms.push_back(matrix.vocabulary.terms[c]);
        doc_freq.push_back(matrix.vocabulary.doc_freq[c]);
    }
    out.vocabulary = make_vocabulary(std::move(terms), std::move(doc_freq));
    out.weights = keep_columns(matrix.weights, columns);
    if (matrix.raw_weights.size() > 0) out.raw_weights = keep_columns(matrix.raw_weights, columns);
    return out;
}

TermMatrix filter_document_frequency(const TermMatrix& counts, double max_df, double min_df) {
    if (!(min_df >= 0.0 && min_df < max_df && max_df <= 1.0)) {
        throw ValidationError("document-frequency bounds must satisfy 0 <= min_df < max_df <= 1");
    }
    const double n = static_cast<double>(counts.n_docs());
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < counts.vocabulary.size(); ++j) {
        const double frac = static_cast<double>(counts.vocabulary.doc_freq[j]) / n;
        if (frac <= max_df && frac >= min_df) keep.push_back(j);
    }
    if (keep.empty()) {
        throw ValidationError("document-frequency thresholds removed every term");
    }
    return select_terms(counts, keep);
}

double smoothed_idf(std::size_t n_docs, std::size_t doc_freq) {
    return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(doc_freq))) + 1.0;
}

TermMatrix fit_tfidf(const TermMatrix& counts, const TfidfOptions& options) {
    if (counts.kind != MatrixKind::counts) throw ValidationError("fit_tfidf expects a count matrix");
    TermMatrix out = filter_document_frequency(counts, options.max_df, options.min_df);
    out.kind = MatrixKind::tfidf;

    const std::size_t n = counts.n_docs();
    std::vector<double> idf(out.vocabulary.size());
    for (std::size_t j = 0; j < idf.size(); ++j) idf[j] = smoothed_idf(n, out.vocabulary.doc_freq[j]);

    out.raw_weights = out.weights;
    for (Eigen::Index r = 0; r < out.raw_weights.outerSize(); ++r) {
        for (SparseRowMatrix::InnerIterator it(out.raw_weights, r); it; ++it) {
            it.valueRef() *= idf[static_cast<std::size_t>(it.col())];
        }
    }
    out.weights = l2_normalize_rows(out.raw_weights);
    return options.median_cut ? median_filter(out) : out;
}

TermMatrix median_filter(const TermMatrix& tfidf) {
    if (tfidf.kind != MatrixKind::tfidf || tfidf.raw_weights.size() == 0) {
        throw ValidationError("median_filter expects a tf-idf matrix with pre-normalization weights");
    }
    const SparseRowMatrix& raw = tfidf.raw_weights;
    std::vector<double> values(raw.valuePtr(), raw.valuePtr() + raw.nonZeros());
    if (values.empty()) return tfidf;

    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    const double median = m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);

    std::vector<double> col_max(static_cast<std::size_t>(raw.cols()), 0.0);
    for (Eigen::Index r = 0; r < raw.outerSize(); ++r) {
        for (SparseRowMatrix::InnerIterator it(raw, r); it; ++it) {
            auto& mx = col_max[static_cast<std::size_t>(it.col())];
            mx = std::max(mx, it.value());
        }
    }
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < col_max.size(); ++j) {
        if (!(col_max[j] < median)) keep.push_back(j);
    }
    TermMatrix out = select_terms(tfidf, keep);
    out.weights = l2_normalize_rows(out.raw_weights);
    return out;
}

Eigen::MatrixXd to_dense(const TermMatrix& matrix) {
    return Eigen::MatrixXd(matrix.weights);
}

std::string to_matrix_market(const SparseRowMatrix& matrix, std::string_view comment) {
    std::string out = "%%MatrixMarket matrix coordinate real general\n";
    if (!comment.empty()) {
        out += "% ";
        out += comment;
        out += '\n';
    }
    out += std::to_string(matrix.rows()) + ' ' + std::to_string(matrix.cols()) + ' ' +
           std::to_string(matrix.nonZeros()) + '\n';
    for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
        for (SparseRowMatrix::InnerIterator it(matrix, r); it; ++it) {
            out += std::to_string(r + 1) + ' ' + std::to_string(it.col() + 1) + ' ' +
                   format_double(it.value()) + '\n';
        }
    }
    return out;
}

SparseRowMatrix parse_matrix_market(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket matrix coordinate real", 0) != 0) {
        throw ParseError("not a Matrix Market coordinate real file", 1);
    }
    ++line_no;
    long long rows = -1, cols = -1, nnz = -1;
    std::vector<Triplet> triplets;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream fields(line);
        if (rows < 0) {
            if (!(fields >> rows >> cols >> nnz)) throw ParseError("bad size line", line_no);
            triplets.reserve(static_cast<std::size_t>(nnz));
            continue;
        }
        long long r = 0, c = 0;
        std::string value;
        if (!(fields >> r >> c >> value) || r < 1 || r > rows || c < 1 || c > cols) {
            throw ParseError("bad entry", line_no);
        }
        triplets.emplace_back(r - 1, c - 1, parse_double(value));
    }
    if (rows < 0) throw ParseError("missing size line", line_no);
    if (static_cast<long long>(triplets.size()) != nnz) {
        throw ParseError("entry count does not match header", line_no);
    }
    return from_triplets(rows, cols, triplets);
}

void write_term_matrix(const TermMatrix& matrix, const std::filesystem::path& mtx_path,
                       const std::filesystem::path& vocab_path) {
    write_file(mtx_path, to_matrix_market(matrix.weights,
                                          matrix.kind == MatrixKind::counts ? "kind: counts"
                                                                            : "kind: tfidf"));
    std::string vocab;
    for (const auto& t : matrix.vocabulary.terms) {
        vocab += t;
        vocab += '\n';
    }
    write_file(vocab_path, vocab);
}

TermMatrix read_term_matrix(const std::filesystem::path& mtx_path,
                            const std::filesystem::path& vocab_path, MatrixKind kind,
                            std::vector<std::string> doc_ids) {
    TermMatrix m;
    m.kind = kind;
    m.weights = parse_matrix_market(read_file(mtx_path));
    std::vector<std::string> terms;
    std::istringstream in(read_file(vocab_path));
    for (std::string line; std::getline(in, line);) terms.push_back(line);
    if (static_cast<Eigen::Index>(terms.size()) != m.weights.cols()) {
        throw ParseError("vocabulary size does not match matrix columns in '" + vocab_path.string() + "'", 0);
    }
    if (static_cast<Eigen::Index>(doc_ids.size()) != m.weights.rows()) {
        throw ValidationError("document ids do not match matrix rows in '" + mtx_path.string() + "'");
    }
    std::vector<std::size_t> df(terms.size(), 0);
    for (Eigen::Index r = 0; r < m.weights.outerSize(); ++r) {
        for (SparseRowMatrix::InnerIterator it(m.weights, r); it; ++it) ++df[static_cast<std::size_t>(it.col())];
    }
    m.vocabulary = make_vocabulary(std::move(terms), std::move(df));
    m.doc_ids = std::move(doc_ids);
    return m;
}

} // namespace ctm
