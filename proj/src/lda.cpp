#include "ctm/lda.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace ctm {

namespace {

// Count tables of the collapsed sampler.
struct GibbsState {
    std::size_t n_topics;
    std::size_t n_terms;
    std::vector<std::vector<std::uint32_t>> tokens;
    std::vector<std::vector<std::uint32_t>> z;
    std::vector<std::uint32_t> doc_topic;  // n_docs x K
    std::vector<std::uint32_t> topic_term; // K x V
    std::vector<std::uint32_t> topic_total;

    std::uint32_t& ndk(std::size_t d, std::size_t k) { return doc_topic[d * n_topics + k]; }
    std::uint32_t& nkv(std::size_t k, std::size_t v) { return topic_term[k * n_terms + v]; }

    bool consistent() const {
        std::vector<std::uint64_t> per_topic(n_topics, 0);
        for (std::size_t d = 0; d < tokens.size(); ++d) {
            std::uint64_t total = 0;
            for (std::size_t k = 0; k < n_topics; ++k) {
                total += doc_topic[d * n_topics + k];
                per_topic[k] += doc_topic[d * n_topics + k];
            }
            if (total != tokens[d].size()) return false;
        }
        for (std::size_t k = 0; k < n_topics; ++k) {
            std::uint64_t total = 0;
            for (std::size_t v = 0; v < n_terms; ++v) total += topic_term[k * n_terms + v];
            if (total != per_topic[k] || total != topic_total[k]) return false;
        }
        return true;
    }
};

double log_likelihood(const std::vector<std::uint32_t>& doc_topic,
                      const std::vector<std::uint32_t>& topic_term,
                      const std::vector<std::uint32_t>& topic_total, std::size_t n_docs,
                      std::size_t n_topics, std::size_t n_terms, double alpha, double beta) {
    const double k = static_cast<double>(n_topics);
    const double v = static_cast<double>(n_terms);
    double ll = k * (std::lgamma(v * beta) - v * std::lgamma(beta));
    for (std::size_t t = 0; t < n_topics; ++t) {
        for (std::size_t w = 0; w < n_terms; ++w) ll += std::lgamma(topic_term[t * n_terms + w] + beta);
        ll -= std::lgamma(topic_total[t] + v * beta);
    }
    ll += static_cast<double>(n_docs) * (std::lgamma(k * alpha) - k * std::lgamma(alpha));
    for (std::size_t d = 0; d < n_docs; ++d) {
        double len = 0.0;
        for (std::size_t t = 0; t < n_topics; ++t) {
            const double c = doc_topic[d * n_topics + t];
            ll += std::lgamma(c + alpha);
            len += c;
        }
        ll -= std::lgamma(len + k * alpha);
    }
    return ll;
}

} // namespace

void LdaConfig::validate() const {
    if (n_topics < 1) throw ValidationError("lda: n_topics must be >= 1");
    if (!(effective_alpha() > 0.0)) throw ValidationError("lda: alpha must be positive");
    if (!(beta > 0.0)) throw ValidationError("lda: beta must be positive");
    if (burn_in >= n_iterations) throw ValidationError("lda: burn_in must be below n_iterations");
    if (thinning < 1) throw ValidationError("lda: thinning must be >= 1");
    if (likelihood_every < 1) throw ValidationError("lda: likelihood_every must be >= 1");
}

LdaModel fit_lda(const TermMatrix& counts, const LdaConfig& config) {
    config.validate();
    if (counts.kind != MatrixKind::counts) throw ValidationError("lda: expects a count matrix");
    if (counts.n_docs() == 0 || counts.n_terms() == 0 || counts.weights.nonZeros() == 0) {
        throw ValidationError("lda: corpus has no tokens");
    }

    const std::size_t n_docs = counts.n_docs();
    const std::size_t K = config.n_topics;
    const std::size_t V = counts.n_terms();
    const double alpha = config.effective_alpha();
    const double beta = config.beta;
    const double v_beta = static_cast<double>(V) * beta;

    GibbsState s{K, V, {}, {}, std::vector<std::uint32_t>(n_docs * K, 0),
                 std::vector<std::uint32_t>(K * V, 0), std::vector<std::uint32_t>(K, 0)};
    s.tokens.resize(n_docs);
    s.z.resize(n_docs);
    std::size_t total_tokens = 0;
    for (Eigen::Index r = 0; r < counts.weights.outerSize(); ++r) {
        auto& doc = s.tokens[static_cast<std::size_t>(r)];
        for (SparseRowMatrix::InnerIterator it(counts.weights, r); it; ++it) {
            const double c = it.value();
            if (c < 0.0 || c != std::floor(c)) throw ValidationError("lda: counts must be non-negative integers");
            doc.insert(doc.end(), static_cast<std::size_t>(c), static_cast<std::uint32_t>(it.col()));
        }
        total_tokens += doc.size();
    }
    if (K > total_tokens) {
        spdlog::warn("lda: {} topics exceed the {} available tokens", K, total_tokens);
    }

    Rng rng(config.seed);
    for (std::size_t d = 0; d < n_docs; ++d) {
        s.z[d].resize(s.tokens[d].size());
        for (std::size_t i = 0; i < s.tokens[d].size(); ++i) {
            const auto k = static_cast<std::uint32_t>(uniform_index(rng, K));
            s.z[d][i] = k;
            ++s.ndk(d, k);
            ++s.nkv(k, s.tokens[d][i]);
            ++s.topic_total[k];
        }
    }

    LdaModel model;
    model.config = config;
    model.doc_ids = counts.doc_ids;
    model.terms = counts.vocabulary.terms;
    model.theta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_docs), static_cast<Eigen::Index>(K));
    model.phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(V));

    auto checkpoint = [&](std::size_t sweep) {
        model.trace.push_back({sweep, log_likelihood(s.doc_topic, s.topic_term, s.topic_total,
                                                     n_docs, K, V, alpha, beta)});
    };
    checkpoint(0);

    std::vector<double> cumulative(K);
    for (std::size_t sweep = 1; sweep <= config.n_iterations; ++sweep) {
        for (std::size_t d = 0; d < n_docs; ++d) {
            auto& doc = s.tokens[d];
            auto& zd = s.z[d];
            for (std::size_t i = 0; i < doc.size(); ++i) {
                const std::uint32_t v = doc[i];
                std::uint32_t k = zd[i];
                --s.ndk(d, k);
                --s.nkv(k, v);
                --s.topic_total[k];

                double acc = 0.0;
                for (std::size_t t = 0; t < K; ++t) {
                    acc += (s.ndk(d, t) + alpha) * (s.nkv(t, v) + beta) / (s.topic_total[t] + v_beta);
                    cumulative[t] = acc;
                }
                const double u = uniform01(rng) * acc;
                k = static_cast<std::uint32_t>(
                    std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
                if (k >= K) k = static_cast<std::uint32_t>(K - 1);

                zd[i] = k;
                ++s.ndk(d, k);
                ++s.nkv(k, v);
                ++s.topic_total[k];
            }
        }
        assert(s.consistent());

        if (sweep % config.likelihood_every == 0) checkpoint(sweep);

        const bool retained = sweep > config.burn_in &&
                              ((sweep - config.burn_in) % config.thinning == 0 ||
                               (sweep == config.n_iterations && model.n_samples == 0));
        if (!retained) continue;
        ++model.n_samples;
        for (std::size_t d = 0; d < n_docs; ++d) {
            const double denom = static_cast<double>(s.tokens[d].size()) + static_cast<double>(K) * alpha;
            for (std::size_t t = 0; t < K; ++t) {
                model.theta(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t)) +=
                    (s.ndk(d, t) + alpha) / denom;
            }
        }
        for (std::size_t t = 0; t < K; ++t) {
            const double denom = s.topic_total[t] + v_beta;
            for (std::size_t v = 0; v < V; ++v) {
                model.phi(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v)) +=
                    (s.nkv(t, v) + beta) / denom;
            }
        }
    }

    // Average the retained samples and renormalize away accumulated rounding.
    model.theta /= static_cast<double>(model.n_samples);
    model.phi /= static_cast<double>(model.n_samples);
    for (Eigen::Index r = 0; r < model.theta.rows(); ++r) model.theta.row(r) /= model.theta.row(r).sum();
    for (Eigen::Index r = 0; r < model.phi.rows(); ++r) model.phi.row(r) /= model.phi.row(r).sum();

    model.tokens = std::move(s.tokens);
    model.assignments = std::move(s.z);
    return model;
}

DocMatrix doc_topic_matrix(const LdaModel& model) {
    return {model.doc_ids, model.theta};
}

std::vector<std::vector<std::string>> lda_top_terms(const LdaModel& model, std::size_t k) {
    const std::size_t V = model.terms.size();
    if (k < 1 || k > V) throw ValidationError("lda_top_terms: k must lie in [1, V]");
    std::vector<std::vector<std::string>> out;
    for (Eigen::Index t = 0; t < model.phi.rows(); ++t) {
        std::vector<std::size_t> order(V);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double pa = model.phi(t, static_cast<Eigen::Index>(a));
            const double pb = model.phi(t, static_cast<Eigen::Index>(b));
            if (pa != pb) return pa > pb;
            return model.terms[a] < model.terms[b];
        });
        std::vector<std::string> top;
        for (std::size_t i = 0; i < k; ++i) top.push_back(model.terms[order[i]]);
        out.push_back(std::move(top));
    }
    return out;
}

namespace {

struct RecountedTables {
    std::vector<std::uint32_t> doc_topic, topic_term, topic_total;
};

RecountedTables recount(const LdaModel& model) {
    const std::size_t K = model.config.n_topics;
    const std::size_t V = model.terms.size();
    RecountedTables t{std::vector<std::uint32_t>(model.tokens.size() * K, 0),
                      std::vector<std::uint32_t>(K * V, 0), std::vector<std::uint32_t>(K, 0)};
    for (std::size_t d = 0; d < model.tokens.size(); ++d) {
        for (std::size_t i = 0; i < model.tokens[d].size(); ++i) {
            const auto k = model.assignments[d][i];
            ++t.doc_topic[d * K + k];
            ++t.topic_term[k * V + model.tokens[d][i]];
            ++t.topic_total[k];
        }
    }
    return t;
}

} // namespace

bool assignment_counts_consistent(const LdaModel& model) {
    if (model.tokens.size() != model.assignments.size()) return false;
    const std::size_t K = model.config.n_topics;
    for (std::size_t d = 0; d < model.tokens.size(); ++d) {
        if (model.tokens[d].size() != model.assignments[d].size()) return false;
        for (auto k : model.assignments[d]) {
            if (k >= K) return false;
        }
    }
    const auto t = recount(model);
    GibbsState s{K, model.terms.size(), model.tokens, model.assignments, t.doc_topic, t.topic_term,
                 t.topic_total};
    return s.consistent();
}

double joint_log_likelihood(const LdaModel& model) {
    const auto t = recount(model);
    return log_likelihood(t.doc_topic, t.topic_term, t.topic_total, model.tokens.size(),
                          model.config.n_topics, model.terms.size(), model.config.effective_alpha(),
                          model.config.beta);
}

void save_lda_model(const LdaModel& model, const std::filesystem::path& dir) {
    write_file(dir / "theta.csv", to_csv(doc_topic_matrix(model), "topic_"));

    DocMatrix phi_by_term{model.terms, model.phi.transpose()};
    std::string phi_csv = to_csv(phi_by_term, "topic_");
    phi_csv.replace(0, 2, "term");
    write_file(dir / "phi.csv", phi_csv);

    nlohmann::ordered_json cfg;
    cfg["n_topics"] = model.config.n_topics;
    cfg["alpha"] = model.config.effective_alpha();
    cfg["beta"] = model.config.beta;
    cfg["n_iterations"] = model.config.n_iterations;
    cfg["burn_in"] = model.config.burn_in;
    cfg["thinning"] = model.config.thinning;
    cfg["seed"] = model.config.seed;
    cfg["n_samples"] = model.n_samples;
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (const auto& c : model.trace) trace.push_back({{"sweep", c.sweep}, {"log_likelihood", c.log_likelihood}});
    cfg["log_likelihood"] = std::move(trace);
    write_file(dir / "config.json", cfg.dump(2) + "\n");
}

DocMatrix load_theta(const std::filesystem::path& dir) {
    return parse_doc_matrix_csv(read_file(dir / "theta.csv"));
}

} // namespace ctm
