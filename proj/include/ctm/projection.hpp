#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ctm {

enum class ProjectionMethod { pca, neighbor_embed };

std::string to_string(ProjectionMethod method);

struct Projection2D {
    Eigen::MatrixXd coords; ///< n x 2, rows in input order
    ProjectionMethod method = ProjectionMethod::pca;
    std::map<std::string, double> params;
    std::uint64_t seed = 0;
};

struct PcaResult {
    Projection2D projection;
    Eigen::Vector2d eigenvalues;  ///< top-2 covariance eigenvalues, descending
    Eigen::MatrixXd loadings;     ///< d x 2
    double total_variance = 0.0;  ///< trace of the covariance
};

/// Projection of the centered rows onto the top two covariance eigenvectors
/// (sample covariance, n - 1). Each component's largest-magnitude loading is
/// positive. Throws ValidationError for n < 3, d < 2, or identical rows.
PcaResult pca(const Eigen::MatrixXd& X);
Projection2D pca_2d(const Eigen::MatrixXd& X);

struct NeighborEmbedOptions {
    std::size_t n_neighbors = 15;
    double min_dist = 0.1;
    double spread = 1.0;
    std::size_t epochs = 200;
    std::size_t negative_samples = 5;
    double learning_rate = 1.0;
    std::uint64_t seed = 0;
};

/// Exact k nearest neighbours of every row (self excluded), ties to the lower index.
std::vector<std::vector<std::size_t>> exact_knn(const Eigen::MatrixXd& X, std::size_t k);

/// Low-dimensional kernel 1 / (1 + a d^(2b)) fitted to the min_dist/spread target curve.
struct KernelShape {
    double a = 0.0;
    double b = 0.0;
};
KernelShape fit_kernel_shape(double min_dist, double spread);

/// Local scale for one point: sum_j exp(-max(0, d_j - rho) / sigma) = log2(k).
double solve_sigma(const std::vector<double>& distances, double rho, double target);

/// Symmetrized fuzzy k-NN graph (w1 + w2 - w1 w2), n x n.
Eigen::SparseMatrix<double> fuzzy_neighbor_graph(const Eigen::MatrixXd& X, std::size_t n_neighbors);

/// UMAP-style layout: fuzzy k-NN graph, PCA initialization, seeded SGD on the
/// fuzzy cross-entropy with negative sampling. Throws ValidationError when
/// n <= n_neighbors or n_neighbors < 2.
Projection2D neighbor_embed_2d(const Eigen::MatrixXd& X, const NeighborEmbedOptions& options);

/// Mean fraction of each point's k input-space neighbours that are also its
/// k neighbours in the layout.
double knn_recall(const Eigen::MatrixXd& X, const Eigen::MatrixXd& coords, std::size_t k);

} // namespace ctm
