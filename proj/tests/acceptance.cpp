// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "ctm/clustering.hpp"
#include "ctm/fusion.hpp"
#include "ctm/lda.hpp"
#include "ctm/pipeline.hpp"
#include "ctm/projection.hpp"
#include "ctm/reporting.hpp"
#include "ctm/tfidf.hpp"
#include "ctm/util.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"
#include "planted_lda.hpp"
#include "support.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace ctm;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

fs::path fixture_dir() { return testing::source_dir() / "fixtures" / "planted200"; }

std::vector<int> truth_labels() {
    const auto truth = nlohmann::json::parse(read_file(fixture_dir() / "truth.json"));
    return truth["labels"].get<std::vector<int>>();
}

std::vector<int> cluster_labels(const fs::path& out_dir) {
    std::vector<int> labels;
    const auto records = parse_csv(read_file(out_dir / "cluster" / "labels.csv"));
    for (std::size_t r = 1; r < records.size(); ++r) labels.push_back(static_cast<int>(parse_integer(records[r].fields[1])));
    return labels;
}

std::map<std::string, double> silhouettes(const fs::path& out_dir) {
    std::map<std::string, double> out;
    const auto records = parse_csv(read_file(out_dir / "cluster" / "comparison.csv"));
    for (std::size_t r = 1; r < records.size(); ++r) out[records[r].fields[0]] = parse_double(records[r].fields[1]);
    return out;
}

/// Shared state: the fixture run at its configured seed.
struct FixtureRun {
    PipelineConfig config;
    double seconds = 0.0;
};

FixtureRun run_fixture(const fs::path& out_dir, std::optional<std::uint64_t> seed = {}) {
    FixtureRun run;
    run.config = load_config(fixture_dir() / "config.toml");
    run.config.out_dir = out_dir;
    run.config.threads = 1;
    if (seed) run.config.seed = *seed;
    const auto start = Clock::now();
    run_all(run.config);
    run.seconds = seconds_since(start);
    return run;
}

Verdict planted_recovery(const FixtureRun& run) {
    const double ari = adjusted_rand_index(cluster_labels(run.config.out_dir), truth_labels());
    return {ari >= 0.80 && run.seconds <= 120.0,
            "ARI " + fmt(ari) + " (need >= 0.80), runtime " + fmt(run.seconds, 3) + " s (limit 120)"};
}

Verdict silhouette_ordering(const fs::path& scratch) {
    int held = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const FixtureRun run = run_fixture(scratch / ("seed" + std::to_string(seed)), seed);
        const auto s = silhouettes(run.config.out_dir);
        const double fused = s.at(kMethodFused), tfidf = s.at(kMethodTfidf);
        if (fused > tfidf) ++held;
        detail += " seed " + std::to_string(seed) + ": " + fmt(fused, 3) + " vs " + fmt(tfidf, 3) + ";";
    }
    return {held >= 4, "fused > tfidf in " + std::to_string(held) + "/5 (need 4);" + detail};
}

Verdict silhouette_oracle() {
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng() % 48);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 5);
        const int k = 2 + static_cast<int>(rng() % 2);
        const Eigen::MatrixXd x = testing::random_matrix(rng, n, d);
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i % k);
        std::shuffle(labels.begin(), labels.end(), rng);
        worst = std::max(worst, std::abs(silhouette(x, labels) - testing::brute_silhouette(x, labels)));
    }
    return {worst <= 1e-9, "max abs error " + fmt(worst, 3) + " over 20 datasets (limit 1e-9)"};
}

Verdict kmeans_optimum() {
    std::mt19937_64 rng(17);
    int hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng() % 6);
        const Eigen::MatrixXd x = testing::random_matrix(rng, n, 2);
        KMeansOptions o;
        o.k = 2;
        o.restarts = 16;
        o.seed = rng();
        const double best = testing::exhaustive_two_means(x);
        if (std::abs(kmeans(x, o).inertia - best) <= 1e-9 * best) ++hits;
    }
    return {hits >= 95, std::to_string(hits) + "/100 at the exhaustive optimum (need 95)"};
}

Verdict lda_recovery() {
    const auto start = Clock::now();
    const auto truth = testing::make_planted_lda(2024);
    LdaConfig c;
    c.n_topics = 2;
    c.alpha = 1.0;
    c.seed = 3;
    const auto match = testing::match_topics(truth, fit_lda(count_matrix(truth.docs), c));
    const double secs = seconds_since(start);
    return {match.min_cosine >= 0.9 && match.theta_mae <= 0.1 && secs <= 30.0,
            "min cosine " + fmt(match.min_cosine) + " (>= 0.9), theta MAE " + fmt(match.theta_mae) +
                " (<= 0.1), runtime " + fmt(secs, 3) + " s"};
}

std::vector<CleanDoc> as_docs(const std::vector<std::vector<std::string>>& terms) {
    std::vector<CleanDoc> docs;
    for (std::size_t i = 0; i < terms.size(); ++i) docs.push_back({"d" + std::to_string(i), terms[i]});
    return docs;
}

Verdict tfidf_oracle() {
    TfidfOptions opt;
    opt.max_df = 1.0;
    opt.min_df = 0.0;
    opt.median_cut = false;
    const TermMatrix m =
        fit_tfidf(count_matrix(as_docs({{"apple", "banana", "apple"}, {"banana", "cherry"}, {"cherry", "cherry", "date"}})), opt);
    const double i1 = std::log(2.0) + 1.0, i2 = std::log(4.0 / 3.0) + 1.0;
    const double n0 = std::sqrt(4 * i1 * i1 + i2 * i2), n1 = std::sqrt(2 * i2 * i2), n2 = std::sqrt(4 * i2 * i2 + i1 * i1);
    const double err = std::max({std::abs(m.weight(0, "apple") - 2 * i1 / n0), std::abs(m.weight(0, "banana") - i2 / n0),
                                 std::abs(m.weight(1, "banana") - i2 / n1), std::abs(m.weight(1, "cherry") - i2 / n1),
                                 std::abs(m.weight(2, "cherry") - 2 * i2 / n2), std::abs(m.weight(2, "date") - i1 / n2)});

    // df thresholds are inclusive; a is in 5/5 documents, b in 2/5, c in 1/5
    const auto toy = count_matrix(as_docs({{"a", "b", "c"}, {"a", "b"}, {"a"}, {"a"}, {"a"}}));
    TfidfOptions th;
    th.median_cut = false;
    th.max_df = 0.8;
    th.min_df = 0.4;
    const bool thresholds = fit_tfidf(toy, th).vocabulary.terms == std::vector<std::string>{"b"};

    // median cut: b,c peak above the median of all raw weights, a does not
    TfidfOptions mc;
    mc.max_df = 1.0;
    mc.min_df = 0.0;
    const TermMatrix cut = fit_tfidf(count_matrix(as_docs({{"a", "b", "b", "c", "c"}, {"a", "b", "c"}, {"a"}})), mc);
    const bool median = cut.vocabulary.terms == std::vector<std::string>{"b", "c"};
    return {err <= 1e-12 && thresholds && median, "worked example max error " + fmt(err, 3) +
                                                      ", df thresholds " + (thresholds ? "ok" : "wrong") +
                                                      ", median cut " + (median ? "ok" : "wrong")};
}

Verdict autoencoder_checks() {
    std::mt19937_64 rng(13);
    const Eigen::MatrixXd x = testing::random_matrix(rng, 4, 6);
    AutoencoderParams p = AutoencoderParams::initialize(6, 5, 3, 21);
    Eigen::VectorXd flat = p.flatten();
    flat += 0.1 * testing::random_matrix(rng, flat.size(), 1);
    p.assign(flat);
    const double agreement = testing::gradient_agreement(p, x, 1e-5, 1e-4);

    int lowered = 0;
    for (int trial = 0; trial < 10; ++trial) {
        DocMatrix input;
        input.values = testing::random_matrix(rng, 50, 20);
        for (int i = 0; i < 50; ++i) input.ids.push_back("d" + std::to_string(i));
        AutoencoderConfig cfg{16, 32, 200, 1e-3, 0.9, Standardization::per_column, rng()};
        const AutoencoderResult r = train_autoencoder(input, cfg);
        if (r.final_loss < r.initial_loss) ++lowered;
    }
    return {agreement >= 0.99 && lowered == 10,
            "gradient agreement " + fmt(100 * agreement, 4) + "% (need 99%), loss lowered on " + std::to_string(lowered) + "/10"};
}

Verdict projection_quality(const FixtureRun& run) {
    const DocMatrix latent = parse_doc_matrix_csv(read_file(run.config.out_dir / "fuse" / "latent.csv"));
    NeighborEmbedOptions o = run.config.projection;
    o.seed = stage_seed(run.config, Stage::project);
    const double recall = knn_recall(latent.values, neighbor_embed_2d(latent.values, o).coords, 15);

    std::mt19937_64 rng(5);
    const Eigen::MatrixXd plane = testing::random_matrix(rng, 60, 2, 4.0) * testing::random_matrix(rng, 2, 12);
    const PcaResult pc = pca(plane);
    const Eigen::MatrixXd centered = plane.rowwise() - plane.colwise().mean();
    const double residual =
        (centered - pc.projection.coords * pc.loadings.transpose()).squaredNorm() / centered.squaredNorm();
    return {recall >= 0.30 && residual <= 1e-9,
            "latent knn recall@15 " + fmt(recall) + " (need 0.30), planted-plane residual " + fmt(residual, 3) + " of total"};
}

Verdict reporting_invariants(const FixtureRun& run, const fs::path& scratch) {
    const fs::path report = run.config.out_dir / "report";
    double share_sum = 0.0;
    const auto shares = parse_csv(read_file(report / "shares.csv"));
    for (std::size_t r = 1; r < shares.size(); ++r) share_sum += parse_double(shares[r].fields[1]);
    long long evo_sum = 0;
    const auto evo = parse_csv(read_file(report / "evolution.csv"));
    for (std::size_t r = 1; r < evo.size(); ++r) evo_sum += parse_integer(evo[r].fields[2]);
    const std::size_t n_docs = truth_labels().size();

    // rerun the report stage alone, then the whole pipeline in a second directory
    std::map<std::string, std::string> before;
    for (const char* f : kReportFiles) before[f] = read_file(report / f);
    run_stage(Stage::report, run.config);
    bool identical = true;
    for (const char* f : kReportFiles) identical = identical && before[f] == read_file(report / f);

    const FixtureRun again = run_fixture(scratch / "rerun");
    const bool same_manifest =
        read_file(run.config.out_dir / "manifest.json") == read_file(again.config.out_dir / "manifest.json");

    const bool pass = std::abs(share_sum - 100.0) <= 1e-6 && evo_sum == static_cast<long long>(n_docs) && identical &&
                      same_manifest;
    return {pass, "shares sum " + fmt(share_sum, 12) + ", evolution total " + std::to_string(evo_sum) + "/" +
                      std::to_string(n_docs) + ", export " + (identical ? "byte-identical" : "differs") +
                      ", rerun manifest " + (same_manifest ? "identical" : "differs")};
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    testing::ScratchDir scratch("acceptance");
    int failures = 0;
    std::optional<FixtureRun> fixture;
    auto report = [&](int id, const std::string& name, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::printf("%s criterion %d: %s: %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
        std::fflush(stdout);
    };
    auto with_fixture = [&](const std::function<Verdict(const FixtureRun&)>& check) {
        return [&, check] {
            if (!fixture) fixture = run_fixture(scratch / "fixture");
            return check(*fixture);
        };
    };

    report(1, "planted recovery end to end", with_fixture(planted_recovery));
    report(2, "fused silhouette beats tf-idf", [&] { return silhouette_ordering(scratch.path()); });
    report(3, "silhouette oracle", silhouette_oracle);
    report(4, "k-means global optimum", kmeans_optimum);
    report(5, "lda planted recovery", lda_recovery);
    report(6, "tf-idf hand oracle", tfidf_oracle);
    report(7, "autoencoder gradient and training", autoencoder_checks);
    report(8, "projection quality", with_fixture(projection_quality));
    report(9, "reporting invariants",
           with_fixture([&](const FixtureRun& run) { return reporting_invariants(run, scratch.path()); }));
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
