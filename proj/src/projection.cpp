#include "ctm/projection.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void fix_sign(MatrixXd& loadings, MatrixXd& coords, Index component) {
    Index arg = 0;
    loadings.col(component).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, component) < 0.0) {
        loadings.col(component) *= -1.0;
        coords.col(component) *= -1.0;
    }
}

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

} // namespace

std::string to_string(ProjectionMethod method) {
    return method == ProjectionMethod::pca ? "pca" : "neighbor-embed";
}

PcaResult pca(const MatrixXd& X) {
    const Index n = X.rows(), d = X.cols();
    if (n < 3) throw ValidationError("pca: need at least three rows");
    if (d < 2) throw ValidationError("pca: need at least two columns");
    bool identical = true;
    for (Index i = 1; i < n && identical; ++i) identical = X.row(i) == X.row(0);
    const MatrixXd centered = X.rowwise() - X.colwise().mean();
    const double denom = static_cast<double>(n - 1);

    PcaResult out;
    out.total_variance = centered.squaredNorm() / denom;
    if (identical || !(out.total_variance > 0.0)) {
        throw ValidationError("pca: all rows are identical (rank 0)");
    }

    MatrixXd loadings = MatrixXd::Zero(d, 2);
    MatrixXd coords = MatrixXd::Zero(n, 2);
    if (d <= n) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> solver(centered.transpose() * centered / denom);
        for (Index c = 0; c < 2; ++c) {
            out.eigenvalues(c) = std::max(0.0, solver.eigenvalues()(d - 1 - c));
            loadings.col(c) = solver.eigenvectors().col(d - 1 - c);
        }
        coords = centered * loadings;
    } else {
        // Fewer rows than columns: diagonalize the Gram matrix instead.
        Eigen::SelfAdjointEigenSolver<MatrixXd> solver(centered * centered.transpose() / denom);
        for (Index c = 0; c < 2; ++c) {
            const double lambda = std::max(0.0, solver.eigenvalues()(n - 1 - c));
            out.eigenvalues(c) = lambda;
            if (lambda <= 0.0) continue;
            const VectorXd u = solver.eigenvectors().col(n - 1 - c);
            coords.col(c) = u * std::sqrt(denom * lambda);
            loadings.col(c) = centered.transpose() * u / std::sqrt(denom * lambda);
        }
    }
    fix_sign(loadings, coords, 0);
    fix_sign(loadings, coords, 1);

    out.loadings = std::move(loadings);
    out.projection.coords = std::move(coords);
    out.projection.method = ProjectionMethod::pca;
    return out;
}

Projection2D pca_2d(const MatrixXd& X) {
    return pca(X).projection;
}

std::vector<std::vector<std::size_t>> exact_knn(const MatrixXd& X, std::size_t k) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (k >= n) throw ValidationError("knn: k must be below the number of points");
    std::vector<std::vector<std::size_t>> out(n);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            cand.emplace_back((X.row(static_cast<Index>(i)) - X.row(static_cast<Index>(j))).squaredNorm(), j);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        out[i].reserve(k);
        for (std::size_t m = 0; m < k; ++m) out[i].push_back(cand[m].second);
    }
    return out;
}

KernelShape fit_kernel_shape(double min_dist, double spread) {
    if (!(spread > 0.0) || min_dist < 0.0) throw ValidationError("kernel shape: need spread > 0 and min_dist >= 0");
    constexpr int kPoints = 300;
    std::vector<double> xs(kPoints), ys(kPoints);
    for (int i = 0; i < kPoints; ++i) {
        xs[i] = 3.0 * spread * i / (kPoints - 1);
        ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
    }
    auto residuals = [&](double a, double b, VectorXd& r, MatrixXd* jac) {
        r.resize(kPoints);
        if (jac) jac->resize(kPoints, 2);
        for (int i = 0; i < kPoints; ++i) {
            const double x = xs[i];
            const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
            const double g = 1.0 / (1.0 + a * p);
            r(i) = g - ys[i];
            if (jac) {
                (*jac)(i, 0) = -p * g * g;
                (*jac)(i, 1) = x > 0.0 ? -a * p * 2.0 * std::log(x) * g * g : 0.0;
            }
        }
    };

    // Levenberg-Marquardt on the two parameters.
    double a = 1.0, b = 1.0, lambda = 1e-3;
    VectorXd r, r_try;
    MatrixXd jac;
    residuals(a, b, r, &jac);
    double cost = r.squaredNorm();
    for (int iter = 0; iter < 500; ++iter) {
        const Eigen::Matrix2d jtj = jac.transpose() * jac;
        const Eigen::Vector2d jtr = jac.transpose() * r;
        Eigen::Matrix2d damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
        const Eigen::Vector2d step = damped.ldlt().solve(-jtr);
        const double a_try = a + step(0), b_try = b + step(1);
        if (a_try > 0.0 && b_try > 0.0) {
            residuals(a_try, b_try, r_try, nullptr);
            const double cost_try = r_try.squaredNorm();
            if (cost_try < cost) {
                const bool converged = cost - cost_try < 1e-15 * std::max(1.0, cost);
                a = a_try;
                b = b_try;
                cost = cost_try;
                residuals(a, b, r, &jac);
                lambda = std::max(lambda * 0.3, 1e-12);
                if (converged) break;
                continue;
            }
        }
        lambda *= 10.0;
        if (lambda > 1e12) break;
    }
    return {a, b};
}

double solve_sigma(const std::vector<double>& distances, double rho, double target) {
    auto mass = [&](double sigma) {
        double s = 0.0;
        for (double d : distances) s += std::exp(-std::max(0.0, d - rho) / sigma);
        return s;
    };
    double lo = 0.0, hi = 1.0;
    while (mass(hi) < target && hi < 1e300) hi *= 2.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (mass(mid) > target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return std::max(0.5 * (lo + hi), std::numeric_limits<double>::min());
}

Eigen::SparseMatrix<double> fuzzy_neighbor_graph(const MatrixXd& X, std::size_t n_neighbors) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (n_neighbors < 2 || n <= n_neighbors) {
        throw ValidationError("neighbor graph: need 2 <= n_neighbors < n");
    }
    const auto knn = exact_knn(X, n_neighbors);
    const double target = std::log2(static_cast<double>(n_neighbors));

    std::vector<Eigen::Triplet<double>> directed;
    directed.reserve(n * n_neighbors);
    std::vector<double> dist(n_neighbors);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < n_neighbors; ++m) {
            dist[m] = (X.row(static_cast<Index>(i)) - X.row(static_cast<Index>(knn[i][m]))).norm();
        }
        const double rho = dist.front();
        const double sigma = solve_sigma(dist, rho, target);
        for (std::size_t m = 0; m < n_neighbors; ++m) {
            directed.emplace_back(static_cast<Index>(i), static_cast<Index>(knn[i][m]),
                                  std::exp(-std::max(0.0, dist[m] - rho) / sigma));
        }
    }
    Eigen::SparseMatrix<double> w(static_cast<Index>(n), static_cast<Index>(n));
    w.setFromTriplets(directed.begin(), directed.end());
    Eigen::SparseMatrix<double> wt = w.transpose();
    Eigen::SparseMatrix<double> sym = w + wt - w.cwiseProduct(wt);
    sym.prune(0.0);
    sym.makeCompressed();
    return sym;
}

Projection2D neighbor_embed_2d(const MatrixXd& X, const NeighborEmbedOptions& options) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (options.n_neighbors < 2 || n <= options.n_neighbors) {
        throw ValidationError("neighbor_embed_2d: need 2 <= n_neighbors < n (n = " + std::to_string(n) +
                              ", n_neighbors = " + std::to_string(options.n_neighbors) + ")");
    }
    const auto graph = fuzzy_neighbor_graph(X, options.n_neighbors);
    const KernelShape kernel = fit_kernel_shape(options.min_dist, options.spread);
    const double a = kernel.a, b = kernel.b;

    MatrixXd y = pca_2d(X).coords;
    const double extent = y.cwiseAbs().maxCoeff();
    if (extent > 0.0) y *= 10.0 / extent;

    struct Edge {
        std::size_t head, tail;
        double weight;
    };
    std::vector<Edge> edges;
    double max_w = 0.0;
    for (Index c = 0; c < graph.outerSize(); ++c) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(graph, c); it; ++it) {
            edges.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()), it.value()});
            max_w = std::max(max_w, it.value());
        }
    }
    const double epochs = static_cast<double>(options.epochs);
    const double negative_rate = static_cast<double>(std::max<std::size_t>(1, options.negative_samples));
    std::vector<double> per_sample(edges.size()), next_sample(edges.size()), per_negative(edges.size()),
        next_negative(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        per_sample[e] = edges[e].weight > 0.0 ? max_w / edges[e].weight : std::numeric_limits<double>::infinity();
        next_sample[e] = per_sample[e];
        per_negative[e] = per_sample[e] / negative_rate;
        next_negative[e] = per_negative[e];
    }

    Rng rng(options.seed);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const double alpha = options.learning_rate * (1.0 - static_cast<double>(epoch) / epochs);
        const double now = static_cast<double>(epoch);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (next_sample[e] > now) continue;
            const std::size_t i = edges[e].head, j = edges[e].tail;

            Eigen::Vector2d diff = y.row(static_cast<Index>(i)) - y.row(static_cast<Index>(j));
            double d2 = diff.squaredNorm();
            if (d2 > 0.0) {
                const double coef = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
                for (Index c = 0; c < 2; ++c) {
                    const double g = clip(coef * diff(c));
                    y(static_cast<Index>(i), c) += g * alpha;
                    y(static_cast<Index>(j), c) -= g * alpha;
                }
            }
            next_sample[e] += per_sample[e];

            const auto n_neg = static_cast<std::size_t>((now - next_negative[e]) / per_negative[e]);
            for (std::size_t s = 0; s < n_neg; ++s) {
                const std::size_t k = uniform_index(rng, n);
                if (k == i) continue;
                diff = y.row(static_cast<Index>(i)) - y.row(static_cast<Index>(k));
                d2 = diff.squaredNorm();
                const double coef = d2 > 0.0 ? 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0)) : 0.0;
                for (Index c = 0; c < 2; ++c) {
                    const double g = coef > 0.0 ? clip(coef * diff(c)) : 4.0;
                    y(static_cast<Index>(i), c) += g * alpha;
                }
            }
            next_negative[e] += static_cast<double>(n_neg) * per_negative[e];
        }
    }
    if (!y.allFinite()) throw NumericalError("neighbor_embed_2d: layout diverged");

    Projection2D out;
    out.coords = std::move(y);
    out.method = ProjectionMethod::neighbor_embed;
    out.seed = options.seed;
    out.params = {{"n_neighbors", static_cast<double>(options.n_neighbors)},
                  {"min_dist", options.min_dist},
                  {"spread", options.spread},
                  {"epochs", epochs},
                  {"negative_samples", static_cast<double>(options.negative_samples)},
                  {"a", a},
                  {"b", b}};
    return out;
}

double knn_recall(const MatrixXd& X, const MatrixXd& coords, std::size_t k) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (static_cast<std::size_t>(coords.rows()) != n) throw ValidationError("knn_recall: row counts differ");
    if (k < 1 || n <= k) throw ValidationError("knn_recall: need 1 <= k < n");
    const auto high = exact_knn(X, k);
    const auto low = exact_knn(coords, k);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> a = high[i], b = low[i];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<std::size_t> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
        total += static_cast<double>(common.size()) / static_cast<double>(k);
    }
    return total / static_cast<double>(n);
}

} // namespace ctm
