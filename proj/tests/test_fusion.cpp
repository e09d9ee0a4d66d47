#include "ctm/error.hpp"
#include "ctm/fusion.hpp"
#include "gradient_check.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctm;

namespace {

DocMatrix theta_of(const Eigen::MatrixXd& values) {
    DocMatrix m;
    for (Eigen::Index i = 0; i < values.rows(); ++i) m.ids.push_back("d" + std::to_string(i));
    m.values = values;
    return m;
}

EmbeddingMatrix emb_of(const Eigen::MatrixXd& values) {
    EmbeddingMatrix e;
    for (Eigen::Index i = 0; i < values.rows(); ++i) e.ids.push_back("d" + std::to_string(i));
    e.vectors = values;
    return e;
}

} // namespace

TEST_CASE("fuse layout") {
    Eigen::MatrixXd theta(2, 2), emb(2, 3);
    theta << 0.25, 0.75, 0.5, 0.5;
    emb << 1, 2, 3, 4, 5, 6;
    const FusedMatrix f = fuse(theta_of(theta), emb_of(emb), 1.0);
    CHECK(f.values.cols() == 5);
    CHECK(f.values(0, 0) == 0.25);
    CHECK(f.values(0, 1) == 0.75);
    CHECK(f.values(0, 2) == 1.0);
    CHECK(f.n_topics == 2);
    CHECK(f.embed_dim == 3);

    const FusedMatrix zero = fuse(theta_of(theta), emb_of(emb), 0.0);
    CHECK(zero.values.leftCols(2).cwiseAbs().maxCoeff() == 0.0);
    const FusedMatrix scaled = fuse(theta_of(theta), emb_of(emb), 15.0);
    CHECK(scaled.values.leftCols(2) == 15.0 * theta);
    CHECK(scaled.values.rightCols(3) == emb);

    CHECK_THROWS_AS(fuse(theta_of(theta), emb_of(Eigen::MatrixXd::Ones(3, 3)), 1.0), ValidationError);
    EmbeddingMatrix swapped = emb_of(emb);
    std::swap(swapped.ids[0], swapped.ids[1]);
    CHECK_THROWS_AS(fuse(theta_of(theta), swapped, 1.0), ValidationError);
    CHECK_THROWS_AS(fuse(theta_of(theta), emb_of(emb), -1.0), ValidationError);
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd x = testing::random_matrix(rng, 4, 6);
        AutoencoderParams p = AutoencoderParams::initialize(6, 5, 3, rng());
        // non-zero biases so every block is exercised
        Eigen::VectorXd flat = p.flatten();
        flat += 0.1 * testing::random_matrix(rng, flat.size(), 1);
        p.assign(flat);
        CHECK(testing::gradient_agreement(p, x, 1e-5, 1e-4) >= 0.99);
    }
}

TEST_CASE("flatten and assign are inverse") {
    AutoencoderParams p = AutoencoderParams::initialize(7, 4, 2, 1);
    const Eigen::VectorXd flat = p.flatten();
    CHECK(static_cast<std::size_t>(flat.size()) == p.parameter_count());
    CHECK(p.parameter_count() == 7 * 4 + 4 + 4 * 2 + 2 + 2 * 4 + 4 + 4 * 7 + 7);
    AutoencoderParams q = AutoencoderParams::zeros(7, 4, 2);
    q.assign(flat);
    CHECK(q.flatten() == flat);
}

TEST_CASE("training lowers the loss on random inputs") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        AutoencoderConfig cfg;
        cfg.seed = rng();
        const AutoencoderResult r = train_autoencoder(theta_of(testing::random_matrix(rng, 50, 20)), AutoencoderConfig{
                                                          16, 32, 200, 1e-3, 0.9, Standardization::per_column, cfg.seed});
        CHECK(r.final_loss < r.initial_loss);
        CHECK(r.loss_history.size() == 200);
        for (double l : r.loss_history) CHECK(std::isfinite(l));
    }
}

TEST_CASE("default architecture trains and is deterministic") {
    std::mt19937_64 rng(7);
    const DocMatrix x = theta_of(testing::random_matrix(rng, 30, 40));
    AutoencoderConfig cfg;
    cfg.seed = 4;
    cfg.epochs = 20;
    const AutoencoderResult a = train_autoencoder(x, cfg);
    const AutoencoderResult b = train_autoencoder(x, cfg);
    CHECK(a.params.flatten() == b.params.flatten());
    CHECK(a.latent.values == b.latent.values);
    CHECK(a.latent.values.cols() == 32);
    CHECK(a.latent.ids == x.ids);
    CHECK(encode(a.params, x).values == a.latent.values);
}

TEST_CASE("encode properties") {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd x = testing::random_matrix(rng, 6, 5);
    x.row(3) = x.row(1);
    AutoencoderParams p = AutoencoderParams::initialize(5, 8, 2, 3);
    fit_standardization(p, x, Standardization::per_column);
    const Eigen::MatrixXd z = encode(p, x);
    CHECK(z.row(3) == z.row(1));

    AutoencoderParams zero = AutoencoderParams::zeros(5, 8, 2);
    fit_standardization(zero, x, Standardization::per_column);
    CHECK(encode(zero, x).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(encode(p, testing::random_matrix(rng, 3, 4)), ValidationError);

    // row permutation carries through
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.indices() << 5, 4, 3, 2, 1, 0;
    CHECK((encode(p, perm * x) - perm * z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standardization") {
    Eigen::MatrixXd x(4, 3);
    x << 1, 5, 2, 2, 5, 4, 3, 5, 6, 4, 5, 8;
    AutoencoderParams p = AutoencoderParams::zeros(3, 2, 1);
    fit_standardization(p, x, Standardization::per_column);
    const Eigen::MatrixXd s = standardize(p, x);
    CHECK(s.col(1).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index c : {0, 2}) {
        CHECK(std::abs(s.col(c).mean()) <= 1e-12);
        CHECK(std::abs(s.col(c).squaredNorm() / 4.0 - 1.0) <= 1e-12);
    }
    // shared scale keeps the ratio between column spreads
    fit_standardization(p, x, Standardization::shared_scale);
    const Eigen::MatrixXd t = standardize(p, x);
    CHECK(std::abs(t.col(2).norm() / t.col(0).norm() - 2.0) <= 1e-12);
    CHECK(std::abs(t.squaredNorm() / 8.0 - 1.0) <= 1e-12); // mean variance over the two varying columns
}

TEST_CASE("training preconditions") {
    std::mt19937_64 rng(2);
    AutoencoderConfig cfg;
    cfg.latent = 5;
    cfg.hidden = 4;
    CHECK_THROWS_AS(train_autoencoder(theta_of(testing::random_matrix(rng, 10, 5)), cfg), ValidationError);
    cfg.latent = 2;
    CHECK_THROWS_AS(train_autoencoder(theta_of(testing::random_matrix(rng, 1, 5)), cfg), ValidationError);
    Eigen::MatrixXd bad = testing::random_matrix(rng, 10, 5);
    bad(2, 2) = std::nan("");
    CHECK_THROWS_AS(train_autoencoder(theta_of(bad), cfg), ValidationError);

    cfg.learning_rate = 1e6;
    cfg.epochs = 200;
    try {
        train_autoencoder(theta_of(testing::random_matrix(rng, 10, 5, 100.0)), cfg);
        FAIL("expected divergence");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("parameter json round trip") {
    std::mt19937_64 rng(3);
    AutoencoderConfig cfg;
    cfg.latent = 3;
    cfg.hidden = 6;
    cfg.epochs = 5;
    const DocMatrix x = theta_of(testing::random_matrix(rng, 12, 7));
    const AutoencoderResult r = train_autoencoder(x, cfg);
    const AutoencoderParams back = parse_autoencoder_json(to_json(r.params));
    CHECK(back.flatten() == r.params.flatten());
    CHECK(back.column_mean == r.params.column_mean);
    CHECK(back.column_scale == r.params.column_scale);
    CHECK(back.seed == r.params.seed);
    CHECK(encode(back, x).values == r.latent.values);
    CHECK(to_json(back) == to_json(r.params));
}
