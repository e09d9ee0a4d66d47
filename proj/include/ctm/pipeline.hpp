#pragma once

#include "ctm/clustering.hpp"
#include "ctm/fusion.hpp"
#include "ctm/lda.hpp"
#include "ctm/projection.hpp"
#include "ctm/reporting.hpp"
#include "ctm/tfidf.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctm {

enum class Stage { ingest, preprocess, vectorize, lda, embed, fuse, cluster, project, report };

inline constexpr std::array<Stage, 9> kAllStages = {Stage::ingest, Stage::preprocess, Stage::vectorize,
                                                    Stage::lda,    Stage::embed,      Stage::fuse,
                                                    Stage::cluster, Stage::project,   Stage::report};

std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);
/// Stages whose artifacts `stage` reads, in the order they are checked.
std::vector<Stage> stage_inputs(Stage stage);

struct EmbeddingSettings {
    enum class Mode { hash, file } mode = Mode::hash;
    std::filesystem::path path;        ///< file mode: CTME or JSONL embeddings
    std::size_t dim = 256;             ///< hash mode
    std::optional<std::uint64_t> seed; ///< hash mode; defaults to the stage seed
};

struct PipelineConfig {
    std::filesystem::path corpus;
    std::optional<std::filesystem::path> stoplist;
    std::optional<std::filesystem::path> exclusion;
    TfidfOptions tfidf;
    LdaConfig lda;
    EmbeddingSettings embeddings;
    double gamma = 15.0;
    AutoencoderConfig autoencoder;
    KMeansOptions clustering;
    std::vector<std::size_t> k_sweep;
    ProjectionMethod projection_method = ProjectionMethod::neighbor_embed;
    NeighborEmbedOptions projection;
    std::size_t top_terms = 30;
    TermScoring term_scoring = TermScoring::class_tfidf;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::filesystem::path out_dir = "out";

    /// Range checks; throws ConfigError naming the field.
    void validate() const;
};

/// Parses the TOML layout; relative paths resolve against base_dir. Unknown
/// keys are rejected.
PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Snapshot of every setting, paths as given after resolution.
nlohmann::ordered_json config_snapshot(const PipelineConfig& config);

std::uint64_t stage_seed(const PipelineConfig& config, Stage stage);

struct StageOutput {
    Stage stage;
    std::vector<ManifestEntry> files; ///< paths relative to out_dir
    std::string digest;               ///< hash over the file hashes
};

/// Runs one stage from the artifacts on disk and records it in
/// out_dir/manifest.json. Throws MissingStageError naming the first upstream
/// stage whose artifacts are absent or do not match the manifest.
StageOutput run_stage(Stage stage, const PipelineConfig& config);

/// All stages in order, each through run_stage.
std::vector<StageOutput> run_all(const PipelineConfig& config);

/// Maps an exception to the CLI exit code: 2 for configuration, validation and
/// missing-stage errors, 1 otherwise.
int exit_code_for(const std::exception& error) noexcept;

} // namespace ctm
