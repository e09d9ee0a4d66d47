#pragma once

#include "ctm/doc_matrix.hpp"
#include "ctm/embeddings.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctm {

/// [gamma * theta | embedding], one row per document.
struct FusedMatrix {
    std::vector<std::string> ids;
    Eigen::MatrixXd values; ///< n_docs x (n_topics + embed_dim)
    double gamma = 0.0;
    std::size_t n_topics = 0;
    std::size_t embed_dim = 0;

    DocMatrix as_doc_matrix() const { return {ids, values}; }
};

/// Throws ValidationError when row counts or ids disagree, or gamma < 0.
FusedMatrix fuse(const DocMatrix& theta, const EmbeddingMatrix& embeddings, double gamma);

/// How inputs are scaled before the autoencoder sees them.
enum class Standardization {
    per_column,   ///< zero mean, unit variance per column
    shared_scale, ///< zero mean per column, one common scale (keeps relative column weights)
};

struct AutoencoderConfig {
    std::size_t latent = 32;
    std::size_t hidden = 128;
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    Standardization standardization = Standardization::per_column;
    std::uint64_t seed = 0;
};

/// input -> hidden (ReLU) -> latent (identity) -> hidden (ReLU) -> input (identity).
/// Weight matrices are (out x in); standardization statistics travel with the weights.
struct AutoencoderParams {
    Eigen::MatrixXd w1, w2, w3, w4;
    Eigen::VectorXd b1, b2, b3, b4;
    Eigen::VectorXd column_mean;
    Eigen::VectorXd column_scale; ///< 0 marks a constant column
    Standardization standardization = Standardization::per_column;
    std::uint64_t seed = 0;

    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(w1.cols()); }
    std::size_t hidden_dim() const noexcept { return static_cast<std::size_t>(w1.rows()); }
    std::size_t latent_dim() const noexcept { return static_cast<std::size_t>(w2.rows()); }
    std::size_t parameter_count() const;

    /// Weights and biases in the order w1 b1 w2 b2 w3 b3 w4 b4 (column-major blocks).
    Eigen::VectorXd flatten() const;
    void assign(const Eigen::VectorXd& flat);

    /// Seeded He/Glorot uniform weights, zero biases, identity standardization.
    static AutoencoderParams initialize(std::size_t input, std::size_t hidden, std::size_t latent,
                                        std::uint64_t seed);
    static AutoencoderParams zeros(std::size_t input, std::size_t hidden, std::size_t latent);
};

/// Fits the standardization statistics to X and stores them in params.
void fit_standardization(AutoencoderParams& params, const Eigen::MatrixXd& X, Standardization mode);
Eigen::MatrixXd standardize(const AutoencoderParams& params, const Eigen::MatrixXd& X);

/// Mean squared reconstruction error over all entries of an already standardized input.
double reconstruction_loss(const AutoencoderParams& params, const Eigen::MatrixXd& standardized);

/// Loss plus its gradient with respect to flatten().
double loss_and_gradient(const AutoencoderParams& params, const Eigen::MatrixXd& standardized,
                         Eigen::VectorXd& gradient);

struct AutoencoderResult {
    AutoencoderParams params;
    DocMatrix latent;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_history; ///< loss before each epoch's update
};

/// Full-batch gradient descent with momentum on the reconstruction error.
/// Throws ValidationError when latent >= input width or X has fewer than two
/// rows, NumericalError when the loss stops being finite.
AutoencoderResult train_autoencoder(const DocMatrix& X, const AutoencoderConfig& config);
AutoencoderResult train_autoencoder(const FusedMatrix& X, const AutoencoderConfig& config);

/// Standardizes with the stored statistics and runs the encoder half.
Eigen::MatrixXd encode(const AutoencoderParams& params, const Eigen::MatrixXd& X);
DocMatrix encode(const AutoencoderParams& params, const DocMatrix& X);

std::string to_json(const AutoencoderParams& params);
AutoencoderParams parse_autoencoder_json(std::string_view text);

} // namespace ctm
