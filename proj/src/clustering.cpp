#include "ctm/clustering.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

namespace ctm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

double sq_dist(const MatrixXd& a, Index i, const MatrixXd& b, Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

// Nearest centroid (ties to the lower index); returns the squared distance.
double nearest(const MatrixXd& X, Index i, const MatrixXd& centroids, int& label) {
    double best = std::numeric_limits<double>::infinity();
    label = 0;
    for (Index c = 0; c < centroids.rows(); ++c) {
        const double d = sq_dist(X, i, centroids, c);
        if (d < best) {
            best = d;
            label = static_cast<int>(c);
        }
    }
    return best;
}

MatrixXd plus_plus_seeds(const MatrixXd& X, std::size_t k, Rng& rng) {
    const Index n = X.rows();
    MatrixXd centroids(static_cast<Index>(k), X.cols());
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    Index pick = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(n)));
    for (std::size_t c = 0; c < k; ++c) {
        if (c > 0) {
            double total = 0.0;
            for (double v : d2) total += v;
            if (total > 0.0) {
                const double u = uniform01(rng) * total;
                double acc = 0.0;
                pick = n - 1;
                for (Index i = 0; i < n; ++i) {
                    acc += d2[static_cast<std::size_t>(i)];
                    if (u < acc) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(n)));
            }
        }
        centroids.row(static_cast<Index>(c)) = X.row(pick);
        for (Index i = 0; i < n; ++i) {
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], sq_dist(X, i, centroids, static_cast<Index>(c)));
        }
    }
    return centroids;
}

struct RestartOutcome {
    std::vector<int> labels;
    MatrixXd centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> history;
};

double assign(const MatrixXd& X, const MatrixXd& centroids, std::vector<int>& labels) {
    double inertia = 0.0;
    for (Index i = 0; i < X.rows(); ++i) inertia += nearest(X, i, centroids, labels[static_cast<std::size_t>(i)]);
    return inertia;
}

// Recomputes centroids as cluster means. An empty cluster takes the point
// farthest from its current centroid among clusters that can spare one.
void update_centroids(const MatrixXd& X, std::vector<int>& labels, MatrixXd& centroids) {
    const Index k = centroids.rows();
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];

    for (Index c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        Index far = -1;
        double far_d = -1.0;
        for (Index i = 0; i < X.rows(); ++i) {
            const int l = labels[static_cast<std::size_t>(i)];
            if (sizes[static_cast<std::size_t>(l)] < 2) continue;
            const double d = sq_dist(X, i, centroids, l);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far < 0) break;
        --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
        labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
        sizes[static_cast<std::size_t>(c)] = 1;
    }

    MatrixXd sums = MatrixXd::Zero(k, X.cols());
    for (Index i = 0; i < X.rows(); ++i) sums.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
    for (Index c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) {
            centroids.row(c) = sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        }
    }
}

RestartOutcome run_restart(const MatrixXd& X, const KMeansOptions& options, std::uint64_t seed) {
    Rng rng(seed);
    RestartOutcome out;
    out.centroids = plus_plus_seeds(X, options.k, rng);
    out.labels.assign(static_cast<std::size_t>(X.rows()), 0);
    out.inertia = assign(X, out.centroids, out.labels);
    out.history.push_back(out.inertia);

    for (std::size_t it = 1; it <= options.max_iters; ++it) {
        const MatrixXd previous = out.centroids;
        update_centroids(X, out.labels, out.centroids);
        const double shift = (out.centroids - previous).rowwise().norm().maxCoeff();
        out.inertia = assign(X, out.centroids, out.labels);
        out.history.push_back(out.inertia);
        out.iterations = it;

        std::vector<bool> used(options.k, false);
        for (int l : out.labels) used[static_cast<std::size_t>(l)] = true;
        const bool none_empty = std::all_of(used.begin(), used.end(), [](bool b) { return b; });
        if (shift < options.tol && none_empty) break;
    }
    return out;
}

} // namespace

ClusterResult kmeans(const MatrixXd& X, const KMeansOptions& options) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (options.k < 1) throw ValidationError("kmeans: k must be >= 1");
    if (n < options.k) {
        throw ValidationError("kmeans: " + std::to_string(n) + " points cannot form " +
                              std::to_string(options.k) + " clusters");
    }
    if (!X.allFinite()) throw ValidationError("kmeans: input has non-finite values");
    const std::size_t restarts = std::max<std::size_t>(1, options.restarts);

    std::vector<RestartOutcome> outcomes(restarts);
    auto run = [&](std::size_t r) { outcomes[r] = run_restart(X, options, mix64(options.seed + r)); };
    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, restarts);
    if (threads == 1) {
        for (std::size_t r = 0; r < restarts; ++r) run(r);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t r = t; r < restarts; r += threads) run(r);
            });
        }
    }

    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts; ++r) {
        if (outcomes[r].inertia < outcomes[best].inertia) best = r;
    }
    ClusterResult result;
    result.labels = std::move(outcomes[best].labels);
    result.centroids = std::move(outcomes[best].centroids);
    result.inertia = outcomes[best].inertia;
    result.n_iterations = outcomes[best].iterations;
    result.inertia_history = std::move(outcomes[best].history);
    result.seed = options.seed;
    result.best_restart = best;
    return result;
}

double inertia_of(const MatrixXd& X, const std::vector<int>& labels, const MatrixXd& centroids) {
    double total = 0.0;
    for (Index i = 0; i < X.rows(); ++i) total += sq_dist(X, i, centroids, labels[static_cast<std::size_t>(i)]);
    return total;
}

double silhouette(const MatrixXd& X, const std::vector<int>& labels) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (labels.size() != n) throw ValidationError("silhouette: label count differs from row count");
    if (n < 3) throw ValidationError("silhouette: need at least three points");
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) throw ValidationError("silhouette: negative label");
        max_label = std::max(max_label, l);
    }
    const auto k = static_cast<std::size_t>(max_label + 1);
    std::vector<std::size_t> sizes(k, 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    if (k < 2) throw ValidationError("silhouette: need at least two clusters");
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) throw ValidationError("silhouette: cluster " + std::to_string(c) + " is empty");
    }

    double total = 0.0;
    std::vector<double> dist_sum(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        if (sizes[own] == 1) continue;
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[static_cast<std::size_t>(labels[j])] +=
                (X.row(static_cast<Index>(i)) - X.row(static_cast<Index>(j))).norm();
        }
        const double a = dist_sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own) b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

std::vector<double> centroid_margins(const MatrixXd& X, const MatrixXd& centroids) {
    std::vector<double> margins;
    margins.reserve(static_cast<std::size_t>(X.rows()));
    for (Index i = 0; i < X.rows(); ++i) {
        double first = std::numeric_limits<double>::infinity();
        double second = std::numeric_limits<double>::infinity();
        for (Index c = 0; c < centroids.rows(); ++c) {
            const double d = std::sqrt(sq_dist(X, i, centroids, c));
            if (d < first) {
                second = first;
                first = d;
            } else if (d < second) {
                second = d;
            }
        }
        margins.push_back(std::isfinite(second) ? second - first : 0.0);
    }
    return margins;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ValidationError("adjusted_rand_index: partitions differ in size");
    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [cell, count] : table) index += choose2(count);
    for (const auto& [label, count] : rows) sum_rows += choose2(count);
    for (const auto& [label, count] : cols) sum_cols += choose2(count);
    const double expected = sum_rows * sum_cols / choose2(static_cast<double>(a.size()));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

MethodComparison compare_methods(const TermMatrix& tfidf, const EmbeddingMatrix& embeddings,
                                 const DocMatrix& latent, const KMeansOptions& options) {
    const std::size_t n = latent.rows();
    if (tfidf.n_docs() != n || embeddings.ids.size() != n) {
        throw ValidationError("compare_methods: representations are not row-aligned");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if ((!tfidf.doc_ids.empty() && tfidf.doc_ids[i] != latent.ids[i]) || embeddings.ids[i] != latent.ids[i]) {
            throw ValidationError("compare_methods: row " + std::to_string(i) + " ids differ");
        }
    }
    MethodComparison out;
    auto score = [&](const char* name, const MatrixXd& X) {
        const auto clusters = kmeans(X, options);
        out.rows.push_back({name, silhouette(X, clusters.labels), options.k, n});
    };
    score(kMethodTfidf, to_dense(tfidf));
    score(kMethodEmbedding, embeddings.vectors);
    score(kMethodFused, latent.values);
    return out;
}

std::string to_csv(const MethodComparison& comparison) {
    std::string out = "method,silhouette,k,n_docs\n";
    for (const auto& row : comparison.rows) {
        out += row.method + ',' + format_double(row.silhouette) + ',' + std::to_string(row.k) + ',' +
               std::to_string(row.n_docs) + '\n';
    }
    return out;
}

std::vector<KSweepRow> k_sweep(const MatrixXd& X, const std::vector<std::size_t>& ks, KMeansOptions options) {
    std::vector<KSweepRow> rows;
    for (std::size_t k : ks) {
        options.k = k;
        const auto clusters = kmeans(X, options);
        rows.push_back({k, silhouette(X, clusters.labels), clusters.inertia});
    }
    return rows;
}

} // namespace ctm
