#include "ctm/fusion.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <json.hpp>

#include <cmath>

namespace ctm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd relu(const MatrixXd& a) { return a.cwiseMax(0.0); }

MatrixXd relu_mask(const MatrixXd& a) {
    return (a.array() > 0.0).cast<double>().matrix();
}

MatrixXd affine(const MatrixXd& in, const MatrixXd& w, const VectorXd& b) {
    MatrixXd out = in * w.transpose();
    out.rowwise() += b.transpose();
    return out;
}

void fill_uniform(MatrixXd& w, double limit, Rng& rng) {
    for (Index c = 0; c < w.cols(); ++c) {
        for (Index r = 0; r < w.rows(); ++r) w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    }
}

template <typename Block>
void append(VectorXd& flat, Index& pos, const Block& block) {
    const Index n = block.size();
    flat.segment(pos, n) = Eigen::Map<const VectorXd>(block.data(), n);
    pos += n;
}

template <typename Block>
void extract(const VectorXd& flat, Index& pos, Block& block) {
    const Index n = block.size();
    Eigen::Map<VectorXd>(block.data(), n) = flat.segment(pos, n);
    pos += n;
}

struct Forward {
    MatrixXd a1, h1, z, a3, h3, y;
};

Forward forward(const AutoencoderParams& p, const MatrixXd& x) {
    Forward f;
    f.a1 = affine(x, p.w1, p.b1);
    f.h1 = relu(f.a1);
    f.z = affine(f.h1, p.w2, p.b2);
    f.a3 = affine(f.z, p.w3, p.b3);
    f.h3 = relu(f.a3);
    f.y = affine(f.h3, p.w4, p.b4);
    return f;
}

} // namespace

FusedMatrix fuse(const DocMatrix& theta, const EmbeddingMatrix& embeddings, double gamma) {
    if (!(gamma >= 0.0)) throw ValidationError("fuse: gamma must be non-negative");
    if (theta.rows() != embeddings.ids.size() || theta.ids.size() != theta.rows()) {
        throw ValidationError("fuse: theta has " + std::to_string(theta.rows()) +
                              " rows but the embedding matrix has " +
                              std::to_string(embeddings.ids.size()));
    }
    for (std::size_t i = 0; i < theta.ids.size(); ++i) {
        if (theta.ids[i] != embeddings.ids[i]) {
            throw ValidationError("fuse: row " + std::to_string(i) + " ids differ ('" + theta.ids[i] +
                                  "' vs '" + embeddings.ids[i] + "')");
        }
    }
    FusedMatrix out;
    out.ids = theta.ids;
    out.gamma = gamma;
    out.n_topics = theta.cols();
    out.embed_dim = embeddings.dim();
    out.values.resize(theta.values.rows(), theta.values.cols() + embeddings.vectors.cols());
    out.values.leftCols(theta.values.cols()) = gamma * theta.values;
    out.values.rightCols(embeddings.vectors.cols()) = embeddings.vectors;
    return out;
}

std::size_t AutoencoderParams::parameter_count() const {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() +
                                    b3.size() + w4.size() + b4.size());
}

VectorXd AutoencoderParams::flatten() const {
    VectorXd flat(static_cast<Index>(parameter_count()));
    Index pos = 0;
    append(flat, pos, w1);
    append(flat, pos, b1);
    append(flat, pos, w2);
    append(flat, pos, b2);
    append(flat, pos, w3);
    append(flat, pos, b3);
    append(flat, pos, w4);
    append(flat, pos, b4);
    return flat;
}

void AutoencoderParams::assign(const VectorXd& flat) {
    if (flat.size() != static_cast<Index>(parameter_count())) {
        throw ValidationError("autoencoder: flat parameter vector has the wrong length");
    }
    Index pos = 0;
    extract(flat, pos, w1);
    extract(flat, pos, b1);
    extract(flat, pos, w2);
    extract(flat, pos, b2);
    extract(flat, pos, w3);
    extract(flat, pos, b3);
    extract(flat, pos, w4);
    extract(flat, pos, b4);
}

AutoencoderParams AutoencoderParams::zeros(std::size_t input, std::size_t hidden, std::size_t latent) {
    const auto in = static_cast<Index>(input), h = static_cast<Index>(hidden), l = static_cast<Index>(latent);
    AutoencoderParams p;
    p.w1 = MatrixXd::Zero(h, in);
    p.b1 = VectorXd::Zero(h);
    p.w2 = MatrixXd::Zero(l, h);
    p.b2 = VectorXd::Zero(l);
    p.w3 = MatrixXd::Zero(h, l);
    p.b3 = VectorXd::Zero(h);
    p.w4 = MatrixXd::Zero(in, h);
    p.b4 = VectorXd::Zero(in);
    p.column_mean = VectorXd::Zero(in);
    p.column_scale = VectorXd::Ones(in);
    return p;
}

AutoencoderParams AutoencoderParams::initialize(std::size_t input, std::size_t hidden,
                                                std::size_t latent, std::uint64_t seed) {
    AutoencoderParams p = zeros(input, hidden, latent);
    p.seed = seed;
    Rng rng(seed);
    const double in = static_cast<double>(input), h = static_cast<double>(hidden),
                 l = static_cast<double>(latent);
    fill_uniform(p.w1, std::sqrt(6.0 / in), rng);
    fill_uniform(p.w2, std::sqrt(6.0 / (h + l)), rng);
    fill_uniform(p.w3, std::sqrt(6.0 / l), rng);
    fill_uniform(p.w4, std::sqrt(6.0 / (h + in)), rng);
    return p;
}

void fit_standardization(AutoencoderParams& params, const MatrixXd& X, Standardization mode) {
    const double n = static_cast<double>(X.rows());
    params.standardization = mode;
    params.column_mean = X.colwise().mean().transpose();
    VectorXd variance = (X.rowwise() - params.column_mean.transpose()).array().square().colwise().sum().transpose() / n;
    // Columns whose spread is at rounding level are treated as constant.
    const double floor = 1e-24 * std::max(1.0, params.column_mean.squaredNorm());
    params.column_scale.resize(X.cols());
    if (mode == Standardization::per_column) {
        for (Index c = 0; c < X.cols(); ++c) {
            params.column_scale(c) = variance(c) > floor ? std::sqrt(variance(c)) : 0.0;
        }
        return;
    }
    double total = 0.0;
    Index varying = 0;
    for (Index c = 0; c < X.cols(); ++c) {
        if (variance(c) > floor) {
            total += variance(c);
            ++varying;
        }
    }
    const double shared = varying ? std::sqrt(total / static_cast<double>(varying)) : 0.0;
    for (Index c = 0; c < X.cols(); ++c) params.column_scale(c) = variance(c) > floor ? shared : 0.0;
}

MatrixXd standardize(const AutoencoderParams& params, const MatrixXd& X) {
    if (X.cols() != params.column_mean.size()) {
        throw ValidationError("autoencoder: input width " + std::to_string(X.cols()) +
                              " does not match the trained width " +
                              std::to_string(params.column_mean.size()));
    }
    VectorXd inv(params.column_scale.size());
    for (Index c = 0; c < inv.size(); ++c) {
        inv(c) = params.column_scale(c) > 0.0 ? 1.0 / params.column_scale(c) : 0.0;
    }
    MatrixXd out = X.rowwise() - params.column_mean.transpose();
    out = out * inv.asDiagonal();
    return out;
}

double reconstruction_loss(const AutoencoderParams& params, const MatrixXd& standardized) {
    const Forward f = forward(params, standardized);
    return (f.y - standardized).squaredNorm() / static_cast<double>(standardized.size());
}

double loss_and_gradient(const AutoencoderParams& p, const MatrixXd& x, VectorXd& gradient) {
    const Forward f = forward(p, x);
    const MatrixXd diff = f.y - x;
    const double scale = 1.0 / static_cast<double>(x.size());

    const MatrixXd d_y = 2.0 * scale * diff;
    AutoencoderParams g = AutoencoderParams::zeros(p.input_dim(), p.hidden_dim(), p.latent_dim());
    g.w4 = d_y.transpose() * f.h3;
    g.b4 = d_y.colwise().sum().transpose();
    const MatrixXd d_a3 = (d_y * p.w4).cwiseProduct(relu_mask(f.a3));
    g.w3 = d_a3.transpose() * f.z;
    g.b3 = d_a3.colwise().sum().transpose();
    const MatrixXd d_z = d_a3 * p.w3;
    g.w2 = d_z.transpose() * f.h1;
    g.b2 = d_z.colwise().sum().transpose();
    const MatrixXd d_a1 = (d_z * p.w2).cwiseProduct(relu_mask(f.a1));
    g.w1 = d_a1.transpose() * x;
    g.b1 = d_a1.colwise().sum().transpose();

    gradient = g.flatten();
    return diff.squaredNorm() * scale;
}

AutoencoderResult train_autoencoder(const DocMatrix& X, const AutoencoderConfig& config) {
    const std::size_t width = X.cols();
    if (X.rows() < 2) throw ValidationError("autoencoder: need at least two rows");
    if (config.latent < 1 || config.latent >= width) {
        throw ValidationError("autoencoder: latent size " + std::to_string(config.latent) +
                              " must be below the input width " + std::to_string(width));
    }
    if (config.hidden < 1) throw ValidationError("autoencoder: hidden size must be >= 1");
    if (!X.values.allFinite()) throw ValidationError("autoencoder: input has non-finite values");

    AutoencoderResult result;
    result.params = AutoencoderParams::initialize(width, config.hidden, config.latent, config.seed);
    fit_standardization(result.params, X.values, config.standardization);
    const MatrixXd x = standardize(result.params, X.values);

    VectorXd theta = result.params.flatten();
    VectorXd velocity = VectorXd::Zero(theta.size());
    VectorXd grad;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double loss = loss_and_gradient(result.params, x, grad);
        if (!std::isfinite(loss)) {
            throw NumericalError("autoencoder diverged: non-finite loss at epoch " + std::to_string(epoch));
        }
        result.loss_history.push_back(loss);
        velocity = config.momentum * velocity - config.learning_rate * grad;
        theta += velocity;
        result.params.assign(theta);
    }
    result.initial_loss = result.loss_history.empty() ? reconstruction_loss(result.params, x)
                                                      : result.loss_history.front();
    result.final_loss = reconstruction_loss(result.params, x);
    if (!std::isfinite(result.final_loss)) {
        throw NumericalError("autoencoder diverged: non-finite loss at epoch " + std::to_string(config.epochs));
    }
    result.latent = encode(result.params, X);
    return result;
}

AutoencoderResult train_autoencoder(const FusedMatrix& X, const AutoencoderConfig& config) {
    return train_autoencoder(X.as_doc_matrix(), config);
}

MatrixXd encode(const AutoencoderParams& params, const MatrixXd& X) {
    const MatrixXd x = standardize(params, X);
    return affine(relu(affine(x, params.w1, params.b1)), params.w2, params.b2);
}

DocMatrix encode(const AutoencoderParams& params, const DocMatrix& X) {
    return {X.ids, encode(params, X.values)};
}

namespace {

nlohmann::ordered_json matrix_json(const MatrixXd& m) {
    std::vector<double> flat(m.data(), m.data() + m.size());
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
    MatrixXd m(j.at("rows").get<Index>(), j.at("cols").get<Index>());
    const auto flat = j.at("data").get<std::vector<double>>();
    if (static_cast<Index>(flat.size()) != m.size()) throw ParseError("autoencoder: matrix size mismatch", 0);
    std::copy(flat.begin(), flat.end(), m.data());
    return m;
}

VectorXd vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> as_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

std::string to_json(const AutoencoderParams& p) {
    nlohmann::ordered_json j;
    j["shapes"] = {{"input", p.input_dim()}, {"hidden", p.hidden_dim()}, {"latent", p.latent_dim()}};
    j["activation"] = {{"hidden", "relu"}, {"latent", "identity"}, {"output", "identity"}};
    j["seed"] = p.seed;
    j["standardization"] = {
        {"mode", p.standardization == Standardization::per_column ? "per_column" : "shared_scale"},
        {"mean", as_vector(p.column_mean)},
        {"scale", as_vector(p.column_scale)}};
    j["w1"] = matrix_json(p.w1);
    j["b1"] = as_vector(p.b1);
    j["w2"] = matrix_json(p.w2);
    j["b2"] = as_vector(p.b2);
    j["w3"] = matrix_json(p.w3);
    j["b3"] = as_vector(p.b3);
    j["w4"] = matrix_json(p.w4);
    j["b4"] = as_vector(p.b4);
    return j.dump(1) + "\n";
}

AutoencoderParams parse_autoencoder_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        AutoencoderParams p;
        p.seed = j.at("seed").get<std::uint64_t>();
        const auto& st = j.at("standardization");
        p.standardization = st.at("mode").get<std::string>() == "per_column" ? Standardization::per_column
                                                                             : Standardization::shared_scale;
        p.column_mean = vector_from_json(st.at("mean"));
        p.column_scale = vector_from_json(st.at("scale"));
        p.w1 = matrix_from_json(j.at("w1"));
        p.b1 = vector_from_json(j.at("b1"));
        p.w2 = matrix_from_json(j.at("w2"));
        p.b2 = vector_from_json(j.at("b2"));
        p.w3 = matrix_from_json(j.at("w3"));
        p.b3 = vector_from_json(j.at("b3"));
        p.w4 = matrix_from_json(j.at("w4"));
        p.b4 = vector_from_json(j.at("b4"));
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad autoencoder file: ") + e.what(), 0);
    }
}

} // namespace ctm
