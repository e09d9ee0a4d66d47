#pragma once

#include "ctm/doc_matrix.hpp"
#include "ctm/tfidf.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ctm {

struct LdaConfig {
    std::size_t n_topics = 8;
    std::optional<double> alpha; ///< defaults to 50 / n_topics
    double beta = 0.01;
    std::size_t n_iterations = 1000;
    std::size_t burn_in = 500;
    std::size_t thinning = 10;          ///< sweeps between retained samples
    std::size_t likelihood_every = 50;  ///< sweeps between log-likelihood checkpoints
    std::uint64_t seed = 0;

    double effective_alpha() const { return alpha.value_or(50.0 / static_cast<double>(n_topics)); }
    void validate() const;
};

struct LikelihoodCheckpoint {
    std::size_t sweep = 0; ///< 0 is the random initialization
    double log_likelihood = 0.0;
};

/// Fitted collapsed-Gibbs LDA. theta is n_docs x K, phi is K x V; both are
/// posterior means averaged over the retained post-burn-in samples.
struct LdaModel {
    LdaConfig config;
    std::vector<std::string> doc_ids;
    std::vector<std::string> terms;
    Eigen::MatrixXd theta;
    Eigen::MatrixXd phi;
    std::vector<std::vector<std::uint32_t>> tokens;      ///< term ids, per document
    std::vector<std::vector<std::uint32_t>> assignments; ///< topic per token (final sweep)
    std::vector<LikelihoodCheckpoint> trace;
    std::size_t n_samples = 0;
};

/// Collapsed Gibbs sampling over the count matrix. Deterministic given the seed.
LdaModel fit_lda(const TermMatrix& counts, const LdaConfig& config);

/// theta with its document ids.
DocMatrix doc_topic_matrix(const LdaModel& model);

/// Per topic, the k terms with highest phi; ties go to the lexicographically smaller term.
std::vector<std::vector<std::string>> lda_top_terms(const LdaModel& model, std::size_t k);

/// True when per-document topic counts from `assignments` sum to each document's length
/// and per-topic term counts agree with per-document topic counts.
bool assignment_counts_consistent(const LdaModel& model);

/// Joint log-likelihood log p(w, z) of the model's current assignments.
double joint_log_likelihood(const LdaModel& model);

/// Writes theta.csv, phi.csv and config.json into `dir`.
void save_lda_model(const LdaModel& model, const std::filesystem::path& dir);

/// Reads theta.csv back as a document-topic matrix.
DocMatrix load_theta(const std::filesystem::path& dir);

} // namespace ctm
