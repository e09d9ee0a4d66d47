#pragma once

#include "ctm/doc_matrix.hpp"
#include "ctm/embeddings.hpp"
#include "ctm/tfidf.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ctm {

struct KMeansOptions {
    std::size_t k = 8;
    std::size_t restarts = 16;
    std::size_t max_iters = 300;
    double tol = 1e-6;        ///< stop when no centroid moves this far
    std::uint64_t seed = 0;
    std::size_t threads = 1;  ///< restarts run concurrently; the result does not depend on it
};

struct ClusterResult {
    std::vector<int> labels;
    Eigen::MatrixXd centroids; ///< k x dim
    double inertia = 0.0;
    std::size_t n_iterations = 0;
    std::uint64_t seed = 0;
    std::size_t best_restart = 0;
    /// Inertia after each assignment step of the winning restart.
    std::vector<double> inertia_history;
};

/// k-means++ seeding and Lloyd iterations, best of `restarts` by inertia
/// (ties to the lower restart index). Empty clusters take over the point
/// farthest from its centroid. Throws ValidationError if n < k or X is not finite.
ClusterResult kmeans(const Eigen::MatrixXd& X, const KMeansOptions& options);

/// Sum of squared distances from each row to its labelled centroid.
double inertia_of(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                  const Eigen::MatrixXd& centroids);

/// Mean silhouette with Euclidean distance; singleton clusters score 0.
/// Labels must be 0..k-1 with every cluster non-empty, at least two clusters
/// and at least three points.
double silhouette(const Eigen::MatrixXd& X, const std::vector<int>& labels);

/// Per-point distance to the second-nearest centroid minus distance to the nearest.
std::vector<double> centroid_margins(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centroids);

/// Chance-corrected agreement of two partitions of the same points.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct MethodScore {
    std::string method;
    double silhouette = 0.0;
    std::size_t k = 0;
    std::size_t n_docs = 0;
};

struct MethodComparison {
    std::vector<MethodScore> rows;
};

inline constexpr const char* kMethodTfidf = "tfidf";
inline constexpr const char* kMethodEmbedding = "embedding";
inline constexpr const char* kMethodFused = "fused_latent";

/// k-means + silhouette on TF-IDF rows, raw embedding rows and the fused
/// latent space, each scored in its own space with the same k and seed.
MethodComparison compare_methods(const TermMatrix& tfidf, const EmbeddingMatrix& embeddings,
                                 const DocMatrix& latent, const KMeansOptions& options);

std::string to_csv(const MethodComparison& comparison);

struct KSweepRow {
    std::size_t k = 0;
    double silhouette = 0.0;
    double inertia = 0.0;
};

std::vector<KSweepRow> k_sweep(const Eigen::MatrixXd& X, const std::vector<std::size_t>& ks,
                               KMeansOptions options);

} // namespace ctm
