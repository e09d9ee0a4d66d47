#include "ctm/pipeline.hpp"

#include "ctm/corpus.hpp"
#include "ctm/embeddings.hpp"
#include "ctm/error.hpp"
#include "ctm/preprocess.hpp"
#include "ctm/util.hpp"

#define TOML_HEADER_ONLY 1
#include <toml.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace ctm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 9> kStageNames = {"ingest", "preprocess", "vectorize", "lda", "embed",
                                                         "fuse",   "cluster",    "project",   "report"};

// ---- config parsing ----

class Section {
public:
    Section(const toml::table* table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

    std::string field(std::string_view key) const {
        return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
    }

    const toml::node* find(std::string_view key) {
        seen_.insert(std::string(key));
        return table_ ? table_->get(key) : nullptr;
    }

    void number(std::string_view key, double& out) {
        if (auto* node = find(key)) {
            auto v = node->value<double>();
            if (!v || !(node->is_integer() || node->is_floating_point())) throw ConfigError(field(key), "expected a number");
            out = *v;
        }
    }

    template <typename Int>
    void count(std::string_view key, Int& out) {
        if (auto* node = find(key)) {
            if (!node->is_integer()) throw ConfigError(field(key), "expected an integer");
            const auto v = node->value<std::int64_t>().value_or(-1);
            if (v < 0) throw ConfigError(field(key), "must be non-negative");
            out = static_cast<Int>(v);
        }
    }

    void flag(std::string_view key, bool& out) {
        if (auto* node = find(key)) {
            if (!node->is_boolean()) throw ConfigError(field(key), "expected true or false");
            out = *node->value<bool>();
        }
    }

    std::optional<std::string> text(std::string_view key) {
        if (auto* node = find(key)) {
            if (!node->is_string()) throw ConfigError(field(key), "expected a string");
            return *node->value<std::string>();
        }
        return std::nullopt;
    }

    void reject_unknown(const std::set<std::string>& subsections = {}) const {
        if (!table_) return;
        for (const auto& [key, node] : *table_) {
            const std::string name(key.str());
            if (!seen_.count(name) && !subsections.count(name)) throw ConfigError(field(name), "unknown key");
        }
    }

private:
    const toml::table* table_;
    std::string prefix_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& value) {
    const fs::path p(value);
    return p.is_absolute() ? p : base / p;
}

// ---- manifest ----

fs::path manifest_path(const PipelineConfig& config) { return config.out_dir / "manifest.json"; }

json read_manifest(const PipelineConfig& config) {
    const fs::path path = manifest_path(config);
    if (!fs::exists(path)) return json::object();
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError("unreadable manifest '" + path.string() + "': " + e.what(), 0);
    }
}

std::string files_digest(const std::vector<ManifestEntry>& files) {
    std::string joined;
    for (const auto& f : files) joined += f.file + '\t' + f.sha256 + '\n';
    return sha256_hex(joined);
}

/// Throws MissingStageError unless every file recorded for `stage` exists with
/// the recorded hash. Returns the stage digest.
std::string check_upstream(const json& manifest, Stage stage, const PipelineConfig& config) {
    const std::string name(stage_name(stage));
    if (!manifest.contains("stages") || !manifest["stages"].contains(name)) {
        throw MissingStageError(name, "no manifest entry");
    }
    const auto& entry = manifest["stages"][name];
    for (const auto& f : entry["files"]) {
        const fs::path path = config.out_dir / f["file"].get<std::string>();
        if (!fs::exists(path)) throw MissingStageError(name, path.string() + " is missing");
        if (sha256_file(path) != f["sha256"].get<std::string>()) {
            throw MissingStageError(name, path.string() + " does not match the manifest");
        }
    }
    return entry["digest"].get<std::string>();
}

class StageWriter {
public:
    StageWriter(const PipelineConfig& config, Stage stage)
        : root_(config.out_dir), dir_(std::string(stage_name(stage))) {}

    fs::path dir() const { return root_ / dir_; }
    fs::path path(const std::string& name) const { return dir() / name; }

    void write(const std::string& name, const std::string& body) {
        write_file(path(name), body);
        files_.push_back({(dir_ / name).generic_string(), sha256_hex(body), body.size()});
    }

    /// Records a file some other routine already wrote.
    void record(const std::string& name) {
        const fs::path p = path(name);
        files_.push_back({(dir_ / name).generic_string(), sha256_file(p), fs::file_size(p)});
    }

    std::vector<ManifestEntry>& files() { return files_; }

private:
    fs::path root_;
    fs::path dir_;
    std::vector<ManifestEntry> files_;
};

// ---- artifact readers ----

Corpus read_ingested(const PipelineConfig& config) {
    const fs::path p = config.out_dir / "ingest" / "corpus.jsonl";
    return parse_corpus_jsonl(read_file(p), p.string());
}

std::vector<CleanDoc> read_clean_docs(const PipelineConfig& config) {
    return parse_clean_docs(read_file(config.out_dir / "preprocess" / "docs.jsonl"));
}

std::vector<std::string> ids_of(const std::vector<CleanDoc>& docs) {
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(d.id);
    return ids;
}

struct LabelFile {
    std::vector<std::string> ids;
    std::vector<int> labels;
};

LabelFile read_labels(const fs::path& path) {
    const auto records = parse_csv(read_file(path));
    if (records.empty() || records[0].fields != std::vector<std::string>{"id", "label"}) {
        throw ParseError("labels file '" + path.string() + "' lacks the header id,label", 1);
    }
    LabelFile out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& f = records[r].fields;
        if (f.size() != 2) throw ParseError("expected 2 fields in '" + path.string() + "'", records[r].line);
        out.ids.push_back(f[0]);
        out.labels.push_back(static_cast<int>(parse_integer(f[1])));
    }
    return out;
}

std::vector<double> read_column(const fs::path& path, std::size_t column) {
    const auto records = parse_csv(read_file(path));
    std::vector<double> out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].fields.size() <= column) throw ParseError("short row in '" + path.string() + "'", records[r].line);
        out.push_back(parse_double(records[r].fields[column]));
    }
    return out;
}

MethodComparison read_comparison(const fs::path& path) {
    const auto records = parse_csv(read_file(path));
    MethodComparison out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& f = records[r].fields;
        if (f.size() != 4) throw ParseError("expected 4 fields in '" + path.string() + "'", records[r].line);
        out.rows.push_back({f[0], parse_double(f[1]), static_cast<std::size_t>(parse_integer(f[2])),
                            static_cast<std::size_t>(parse_integer(f[3]))});
    }
    return out;
}

std::string coords_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& coords) {
    std::ostringstream out;
    out << "id,x,y\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out << csv_escape(ids[i]) << ',' << format_double(coords(r, 0)) << ',' << format_double(coords(r, 1)) << '\n';
    }
    return out.str();
}

// ---- stages ----

void stage_ingest(const PipelineConfig& config, StageWriter& w) {
    if (!fs::exists(config.corpus)) {
        throw ConfigError("corpus", "file '" + config.corpus.string() + "' does not exist");
    }
    const Corpus corpus = load_corpus(config.corpus);
    const CorpusStats stats = corpus_stats(corpus);
    json per_year = json::object();
    for (const auto& [year, n] : stats.docs_per_year) per_year[std::to_string(year)] = n;
    const json summary = {{"n_docs", stats.n_docs},
                          {"year_min", stats.year_min},
                          {"year_max", stats.year_max},
                          {"docs_per_year", per_year},
                          {"mean_abstract_tokens", stats.mean_abstract_tokens}};
    w.write("corpus.jsonl", to_jsonl(corpus));
    w.write("stats.json", summary.dump(2) + "\n");
    spdlog::info("ingest: {} documents, years {}-{}", stats.n_docs, stats.year_min, stats.year_max);
}

void stage_preprocess(const PipelineConfig& config, StageWriter& w) {
    const Corpus corpus = read_ingested(config);
    CleanConfig clean;
    auto load_list = [](const std::optional<fs::path>& path, const char* field, std::set<std::string>& out) {
        if (!path) return;
        if (!fs::exists(*path)) throw ConfigError(field, "file '" + path->string() + "' does not exist");
        out = load_term_set(*path);
    };
    load_list(config.stoplist, "stoplist", clean.stoplist);
    load_list(config.exclusion, "exclusion", clean.exclusion_list);
    const PreprocessResult result = preprocess_corpus(corpus, clean);
    for (const auto& id : result.empty_ids) spdlog::warn("preprocess: document '{}' has no terms left", id);

    std::size_t n_terms = 0;
    for (const auto& d : result.docs) n_terms += d.terms.size();
    const json summary = {{"n_docs", result.docs.size()},
                          {"n_terms", n_terms},
                          {"empty_ids", result.empty_ids},
                          {"stoplist", config.stoplist ? config.stoplist->filename().string()
                                                       : "builtin-" + std::string(kStoplistVersion)},
                          {"stoplist_size", clean.stoplist.size()},
                          {"exclusion_list", clean.exclusion_list}};
    w.write("docs.jsonl", to_jsonl(result.docs));
    w.write("summary.json", summary.dump(2) + "\n");
}

void stage_vectorize(const PipelineConfig& config, StageWriter& w) {
    const auto docs = read_clean_docs(config);
    const TermMatrix counts = count_matrix(docs);
    const TermMatrix filtered = filter_document_frequency(counts, config.tfidf.max_df, config.tfidf.min_df);
    const TermMatrix tfidf = fit_tfidf(counts, config.tfidf);

    write_term_matrix(filtered, w.path("counts.mtx"), w.path("counts_vocab.txt"));
    w.record("counts.mtx");
    w.record("counts_vocab.txt");
    write_term_matrix(tfidf, w.path("tfidf.mtx"), w.path("tfidf_vocab.txt"));
    w.record("tfidf.mtx");
    w.record("tfidf_vocab.txt");
    const json summary = {{"n_docs", counts.n_docs()},
                          {"terms_total", counts.n_terms()},
                          {"terms_after_df", filtered.n_terms()},
                          {"terms_tfidf", tfidf.n_terms()}};
    w.write("summary.json", summary.dump(2) + "\n");
    spdlog::info("vectorize: {} terms, {} after df thresholds, {} after median cut", counts.n_terms(),
                 filtered.n_terms(), tfidf.n_terms());
}

void stage_lda(const PipelineConfig& config, StageWriter& w) {
    const auto ids = ids_of(read_clean_docs(config));
    const fs::path dir = config.out_dir / "vectorize";
    const TermMatrix counts =
        read_term_matrix(dir / "counts.mtx", dir / "counts_vocab.txt", MatrixKind::counts, ids);
    LdaConfig lda = config.lda;
    lda.seed = stage_seed(config, Stage::lda);
    const LdaModel model = fit_lda(counts, lda);
    save_lda_model(model, w.dir());
    w.record("theta.csv");
    w.record("phi.csv");
    w.record("config.json");
    if (!model.trace.empty()) {
        spdlog::info("lda: log-likelihood {} -> {}", model.trace.front().log_likelihood, model.trace.back().log_likelihood);
    }
}

void stage_embed(const PipelineConfig& config, StageWriter& w) {
    EmbeddingMatrix emb;
    if (config.embeddings.mode == EmbeddingSettings::Mode::hash) {
        const auto docs = read_clean_docs(config);
        const std::uint64_t seed = config.embeddings.seed.value_or(stage_seed(config, Stage::embed));
        emb = hash_embed(docs, config.embeddings.dim, seed);
    } else {
        if (!fs::exists(config.embeddings.path)) {
            throw ConfigError("embeddings.path", "file '" + config.embeddings.path.string() + "' does not exist");
        }
        emb = load_embeddings(config.embeddings.path, read_ingested(config));
    }
    w.write("embeddings.ctme", encode_ctme(emb));
    spdlog::info("embed: {} vectors of dim {} ({})", emb.ids.size(), emb.dim(), emb.provider_tag);
}

void stage_fuse(const PipelineConfig& config, StageWriter& w) {
    const DocMatrix theta = load_theta(config.out_dir / "lda");
    const EmbeddingMatrix emb = load_embeddings(config.out_dir / "embed" / "embeddings.ctme", theta.ids);
    const FusedMatrix fused = fuse(theta, emb, config.gamma);
    AutoencoderConfig ae = config.autoencoder;
    ae.seed = stage_seed(config, Stage::fuse);
    const AutoencoderResult result = train_autoencoder(fused, ae);

    std::ostringstream loss;
    loss << "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
        loss << e << ',' << format_double(result.loss_history[e]) << '\n';
    }
    loss << result.loss_history.size() << ',' << format_double(result.final_loss) << '\n';
    w.write("latent.csv", to_csv(result.latent, "z"));
    w.write("autoencoder.json", to_json(result.params));
    w.write("loss.csv", loss.str());
    spdlog::info("fuse: width {} -> latent {}, loss {} -> {}", fused.values.cols(), ae.latent, result.initial_loss,
                 result.final_loss);
}

void stage_cluster(const PipelineConfig& config, StageWriter& w) {
    const DocMatrix latent = parse_doc_matrix_csv(read_file(config.out_dir / "fuse" / "latent.csv"));
    KMeansOptions options = config.clustering;
    options.seed = stage_seed(config, Stage::cluster);
    options.threads = config.threads;
    const ClusterResult result = kmeans(latent.values, options);
    const auto margins = centroid_margins(latent.values, result.centroids);

    std::ostringstream labels, margin_csv;
    labels << "id,label\n";
    margin_csv << "id,margin\n";
    for (std::size_t i = 0; i < latent.ids.size(); ++i) {
        labels << csv_escape(latent.ids[i]) << ',' << result.labels[i] << '\n';
        margin_csv << csv_escape(latent.ids[i]) << ',' << format_double(margins[i]) << '\n';
    }
    std::vector<std::string> header;
    for (Eigen::Index c = 0; c < result.centroids.cols(); ++c) header.push_back("z" + std::to_string(c));

    const fs::path vec = config.out_dir / "vectorize";
    const TermMatrix tfidf = read_term_matrix(vec / "tfidf.mtx", vec / "tfidf_vocab.txt", MatrixKind::tfidf, latent.ids);
    const EmbeddingMatrix emb = load_embeddings(config.out_dir / "embed" / "embeddings.ctme", latent.ids);
    const MethodComparison comparison = compare_methods(tfidf, emb, latent, options);

    w.write("labels.csv", labels.str());
    w.write("margins.csv", margin_csv.str());
    w.write("centroids.csv", matrix_to_csv(result.centroids, header));
    w.write("comparison.csv", to_csv(comparison));
    if (!config.k_sweep.empty()) {
        std::ostringstream sweep;
        sweep << "k,silhouette,inertia\n";
        for (const auto& row : k_sweep(latent.values, config.k_sweep, options)) {
            sweep << row.k << ',' << format_double(row.silhouette) << ',' << format_double(row.inertia) << '\n';
        }
        w.write("k_sweep.csv", sweep.str());
    }
    for (const auto& row : comparison.rows) spdlog::info("cluster: silhouette {} = {}", row.method, row.silhouette);
}

void stage_project(const PipelineConfig& config, StageWriter& w) {
    const DocMatrix latent = parse_doc_matrix_csv(read_file(config.out_dir / "fuse" / "latent.csv"));
    const PcaResult pca_result = pca(latent.values);
    Projection2D layout = pca_result.projection;
    if (config.projection_method == ProjectionMethod::neighbor_embed) {
        NeighborEmbedOptions options = config.projection;
        options.seed = stage_seed(config, Stage::project);
        layout = neighbor_embed_2d(latent.values, options);
    }
    json params = json::object();
    for (const auto& [key, value] : layout.params) params[key] = value;
    json summary = {{"method", to_string(layout.method)},
                    {"seed", layout.seed},
                    {"params", params},
                    {"pca_eigenvalues", {pca_result.eigenvalues(0), pca_result.eigenvalues(1)}},
                    {"pca_total_variance", pca_result.total_variance}};
    const std::size_t k = 15;
    if (latent.rows() > k) summary["knn_recall_15"] = knn_recall(latent.values, layout.coords, k);

    w.write("coords.csv", coords_csv(latent.ids, layout.coords));
    w.write("pca.csv", coords_csv(latent.ids, pca_result.projection.coords));
    w.write("params.json", summary.dump(2) + "\n");
}

void stage_report(const PipelineConfig& config, StageWriter& w) {
    const Corpus corpus = read_ingested(config);
    const fs::path cl = config.out_dir / "cluster";
    const LabelFile labels = read_labels(cl / "labels.csv");
    if (labels.ids != corpus.ids()) throw ValidationError("cluster labels are not aligned with the corpus");

    ReportInputs in;
    in.docs = read_clean_docs(config);
    in.years = corpus.years();
    in.labels = labels.labels;
    in.k = config.clustering.k;
    in.margins = read_column(cl / "margins.csv", 1);
    in.comparison = read_comparison(cl / "comparison.csv");
    const fs::path coords = config.out_dir / "project" / "coords.csv";
    const auto xs = read_column(coords, 1), ys = read_column(coords, 2);
    in.coords.resize(static_cast<Eigen::Index>(xs.size()), 2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        in.coords(static_cast<Eigen::Index>(i), 0) = xs[i];
        in.coords(static_cast<Eigen::Index>(i), 1) = ys[i];
    }
    in.projection_method = to_string(config.projection_method);
    in.k_terms = config.top_terms;
    in.scoring = config.term_scoring;
    in.config = config_snapshot(config);

    const TopicReport report = build_report(in);
    for (const auto& entry : export_report(report, w.dir())) {
        w.record(entry.file);
    }
}

} // namespace

std::string_view stage_name(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

std::optional<Stage> parse_stage(std::string_view name) {
    for (Stage s : kAllStages) {
        if (stage_name(s) == name) return s;
    }
    return std::nullopt;
}

std::vector<Stage> stage_inputs(Stage stage) {
    switch (stage) {
    case Stage::ingest: return {};
    case Stage::preprocess: return {Stage::ingest};
    case Stage::vectorize: return {Stage::preprocess};
    case Stage::lda: return {Stage::vectorize, Stage::preprocess};
    case Stage::embed: return {Stage::preprocess, Stage::ingest};
    case Stage::fuse: return {Stage::lda, Stage::embed};
    case Stage::cluster: return {Stage::fuse, Stage::vectorize, Stage::embed};
    case Stage::project: return {Stage::fuse};
    case Stage::report: return {Stage::cluster, Stage::project, Stage::preprocess, Stage::ingest};
    }
    return {};
}

void PipelineConfig::validate() const {
    if (corpus.empty()) throw ConfigError("corpus", "no corpus path given");
    if (tfidf.min_df < 0.0) throw ConfigError("tfidf.min_df", "must be >= 0");
    if (tfidf.max_df > 1.0) throw ConfigError("tfidf.max_df", "must be <= 1");
    if (!(tfidf.min_df < tfidf.max_df)) {
        throw ConfigError("tfidf.min_df", "must be below tfidf.max_df (min_df = " + format_double(tfidf.min_df) +
                                              ", max_df = " + format_double(tfidf.max_df) + ")");
    }
    if (lda.n_topics < 1) throw ConfigError("lda.k", "must be >= 1");
    if (lda.alpha && !(*lda.alpha > 0.0)) throw ConfigError("lda.alpha", "must be > 0");
    if (!(lda.beta > 0.0)) throw ConfigError("lda.beta", "must be > 0");
    if (lda.n_iterations < 1) throw ConfigError("lda.iterations", "must be >= 1");
    if (lda.burn_in >= lda.n_iterations) throw ConfigError("lda.burn_in", "must be below lda.iterations");
    if (lda.thinning < 1) throw ConfigError("lda.thinning", "must be >= 1");
    if (embeddings.mode == EmbeddingSettings::Mode::hash && embeddings.dim < 1) {
        throw ConfigError("embeddings.dim", "must be >= 1");
    }
    if (embeddings.mode == EmbeddingSettings::Mode::file && embeddings.path.empty()) {
        throw ConfigError("embeddings.path", "required when embeddings.mode = \"file\"");
    }
    if (!(gamma >= 0.0)) throw ConfigError("fusion.gamma", "must be >= 0");
    if (autoencoder.latent < 1) throw ConfigError("fusion.latent", "must be >= 1");
    if (autoencoder.hidden < 1) throw ConfigError("fusion.hidden", "must be >= 1");
    if (autoencoder.epochs < 1) throw ConfigError("fusion.epochs", "must be >= 1");
    if (!(autoencoder.learning_rate > 0.0)) throw ConfigError("fusion.learning_rate", "must be > 0");
    if (!(autoencoder.momentum >= 0.0 && autoencoder.momentum < 1.0)) {
        throw ConfigError("fusion.momentum", "must lie in [0, 1)");
    }
    if (clustering.k < 1) throw ConfigError("clustering.k", "must be >= 1");
    if (clustering.restarts < 1) throw ConfigError("clustering.restarts", "must be >= 1");
    if (clustering.max_iters < 1) throw ConfigError("clustering.max_iters", "must be >= 1");
    if (!(clustering.tol >= 0.0)) throw ConfigError("clustering.tol", "must be >= 0");
    for (std::size_t k : k_sweep) {
        if (k < 2) throw ConfigError("clustering.k_sweep", "every k must be >= 2");
    }
    if (projection.n_neighbors < 2) throw ConfigError("projection.n_neighbors", "must be >= 2");
    if (!(projection.min_dist >= 0.0)) throw ConfigError("projection.min_dist", "must be >= 0");
    if (projection.epochs < 1) throw ConfigError("projection.epochs", "must be >= 1");
    if (top_terms < 1) throw ConfigError("report.top_terms", "must be >= 1");
    if (threads < 1) throw ConfigError("threads", "must be >= 1");
}

PipelineConfig parse_config(std::string_view toml_text, const fs::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        throw ConfigError("config", std::string(e.description()) + " (line " +
                                        std::to_string(e.source().begin.line) + ")");
    }
    auto sub = [&](const char* name) -> const toml::table* {
        const toml::node* node = root.get(name);
        if (node && !node->is_table()) throw ConfigError(name, "expected a table");
        return node ? node->as_table() : nullptr;
    };

    PipelineConfig c;
    Section top(&root, "");
    if (auto v = top.text("corpus")) c.corpus = resolve(base_dir, *v);
    if (auto v = top.text("stoplist")) c.stoplist = resolve(base_dir, *v);
    if (auto v = top.text("exclusion")) c.exclusion = resolve(base_dir, *v);
    if (auto v = top.text("out_dir")) c.out_dir = resolve(base_dir, *v);
    top.count("seed", c.seed);
    top.count("threads", c.threads);
    top.reject_unknown({"tfidf", "lda", "embeddings", "fusion", "clustering", "projection", "report"});

    Section tfidf(sub("tfidf"), "tfidf");
    tfidf.number("max_df", c.tfidf.max_df);
    tfidf.number("min_df", c.tfidf.min_df);
    tfidf.flag("median_cut", c.tfidf.median_cut);
    tfidf.reject_unknown();

    Section lda(sub("lda"), "lda");
    lda.count("k", c.lda.n_topics);
    if (lda.find("alpha")) {
        double alpha = 0.0;
        lda.number("alpha", alpha);
        c.lda.alpha = alpha;
    }
    lda.number("beta", c.lda.beta);
    lda.count("iterations", c.lda.n_iterations);
    lda.count("burn_in", c.lda.burn_in);
    lda.count("thinning", c.lda.thinning);
    lda.reject_unknown();

    Section emb(sub("embeddings"), "embeddings");
    if (auto mode = emb.text("mode")) {
        if (*mode == "hash") {
            c.embeddings.mode = EmbeddingSettings::Mode::hash;
        } else if (*mode == "file") {
            c.embeddings.mode = EmbeddingSettings::Mode::file;
        } else {
            throw ConfigError("embeddings.mode", "expected \"hash\" or \"file\", got \"" + *mode + "\"");
        }
    }
    if (auto v = emb.text("path")) c.embeddings.path = resolve(base_dir, *v);
    emb.count("dim", c.embeddings.dim);
    if (emb.find("seed")) {
        std::uint64_t seed = 0;
        emb.count("seed", seed);
        c.embeddings.seed = seed;
    }
    emb.reject_unknown();

    Section fusion(sub("fusion"), "fusion");
    fusion.number("gamma", c.gamma);
    fusion.count("latent", c.autoencoder.latent);
    fusion.count("hidden", c.autoencoder.hidden);
    fusion.count("epochs", c.autoencoder.epochs);
    fusion.number("learning_rate", c.autoencoder.learning_rate);
    fusion.number("momentum", c.autoencoder.momentum);
    if (auto v = fusion.text("standardization")) {
        if (*v == "per_column") {
            c.autoencoder.standardization = Standardization::per_column;
        } else if (*v == "shared_scale") {
            c.autoencoder.standardization = Standardization::shared_scale;
        } else {
            throw ConfigError("fusion.standardization", "expected \"per_column\" or \"shared_scale\"");
        }
    }
    fusion.reject_unknown();

    Section clus(sub("clustering"), "clustering");
    clus.count("k", c.clustering.k);
    clus.count("restarts", c.clustering.restarts);
    clus.count("max_iters", c.clustering.max_iters);
    clus.number("tol", c.clustering.tol);
    if (const toml::node* node = clus.find("k_sweep")) {
        const toml::array* arr = node->as_array();
        if (!arr) throw ConfigError("clustering.k_sweep", "expected an array of integers");
        for (const auto& item : *arr) {
            const auto k = item.value<std::int64_t>();
            if (!item.is_integer() || !k || *k < 0) throw ConfigError("clustering.k_sweep", "expected an array of integers");
            c.k_sweep.push_back(static_cast<std::size_t>(*k));
        }
    }
    clus.reject_unknown();

    Section proj(sub("projection"), "projection");
    if (auto v = proj.text("method")) {
        if (*v == "pca") {
            c.projection_method = ProjectionMethod::pca;
        } else if (*v == "neighbor-embed" || *v == "neighbor_embed") {
            c.projection_method = ProjectionMethod::neighbor_embed;
        } else {
            throw ConfigError("projection.method", "expected \"pca\" or \"neighbor-embed\"");
        }
    }
    proj.count("n_neighbors", c.projection.n_neighbors);
    proj.number("min_dist", c.projection.min_dist);
    proj.count("epochs", c.projection.epochs);
    proj.reject_unknown();

    Section report(sub("report"), "report");
    report.count("top_terms", c.top_terms);
    if (auto v = report.text("scoring")) {
        try {
            c.term_scoring = parse_term_scoring(*v);
        } catch (const ValidationError& e) {
            throw ConfigError("report.scoring", e.what());
        }
    }
    report.reject_unknown();

    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config", "file '" + path.string() + "' does not exist");
    return parse_config(read_file(path), path.parent_path());
}

json config_snapshot(const PipelineConfig& c) {
    // File names only, so that the snapshot does not depend on where the run lives.
    json snap = {{"corpus", c.corpus.filename().string()},
                 {"stoplist", c.stoplist ? c.stoplist->filename().string() : "builtin"},
                 {"exclusion", c.exclusion ? c.exclusion->filename().string() : "builtin"},
                 {"seed", c.seed},
                 {"tfidf", {{"max_df", c.tfidf.max_df}, {"min_df", c.tfidf.min_df}, {"median_cut", c.tfidf.median_cut}}},
                 {"lda",
                  {{"k", c.lda.n_topics},
                   {"alpha", c.lda.effective_alpha()},
                   {"beta", c.lda.beta},
                   {"iterations", c.lda.n_iterations},
                   {"burn_in", c.lda.burn_in},
                   {"thinning", c.lda.thinning}}}};
    json emb = {{"mode", c.embeddings.mode == EmbeddingSettings::Mode::hash ? "hash" : "file"}};
    if (c.embeddings.mode == EmbeddingSettings::Mode::hash) {
        emb["dim"] = c.embeddings.dim;
        emb["seed"] = c.embeddings.seed.value_or(stage_seed(c, Stage::embed));
    } else {
        emb["path"] = c.embeddings.path.filename().string();
    }
    snap["embeddings"] = emb;
    snap["fusion"] = {{"gamma", c.gamma},
                      {"latent", c.autoencoder.latent},
                      {"hidden", c.autoencoder.hidden},
                      {"epochs", c.autoencoder.epochs},
                      {"learning_rate", c.autoencoder.learning_rate},
                      {"momentum", c.autoencoder.momentum},
                      {"standardization",
                       c.autoencoder.standardization == Standardization::per_column ? "per_column" : "shared_scale"}};
    snap["clustering"] = {{"k", c.clustering.k},
                          {"restarts", c.clustering.restarts},
                          {"max_iters", c.clustering.max_iters},
                          {"tol", c.clustering.tol},
                          {"k_sweep", c.k_sweep}};
    snap["projection"] = {{"method", to_string(c.projection_method)},
                          {"n_neighbors", c.projection.n_neighbors},
                          {"min_dist", c.projection.min_dist},
                          {"epochs", c.projection.epochs}};
    return snap;
}

std::uint64_t stage_seed(const PipelineConfig& config, Stage stage) {
    return derive_seed(config.seed, stage_name(stage));
}

StageOutput run_stage(Stage stage, const PipelineConfig& config) {
    config.validate();
    json manifest = read_manifest(config);
    json inputs = json::object();
    for (Stage dep : stage_inputs(stage)) inputs[std::string(stage_name(dep))] = check_upstream(manifest, dep, config);

    const std::string name(stage_name(stage));
    spdlog::debug("stage {} starting", name);
    fs::remove_all(config.out_dir / name);
    StageWriter writer(config, stage);
    switch (stage) {
    case Stage::ingest: stage_ingest(config, writer); break;
    case Stage::preprocess: stage_preprocess(config, writer); break;
    case Stage::vectorize: stage_vectorize(config, writer); break;
    case Stage::lda: stage_lda(config, writer); break;
    case Stage::embed: stage_embed(config, writer); break;
    case Stage::fuse: stage_fuse(config, writer); break;
    case Stage::cluster: stage_cluster(config, writer); break;
    case Stage::project: stage_project(config, writer); break;
    case Stage::report: stage_report(config, writer); break;
    }

    StageOutput out{stage, std::move(writer.files()), {}};
    out.digest = files_digest(out.files);
    json files = json::array();
    for (const auto& f : out.files) files.push_back({{"file", f.file}, {"sha256", f.sha256}, {"bytes", f.bytes}});

    // Rebuild in pipeline order so the manifest text does not depend on run order.
    json stages = manifest.contains("stages") ? manifest["stages"] : json::object();
    stages[name] = {{"seed", stage_seed(config, stage)}, {"inputs", inputs}, {"files", files}, {"digest", out.digest}};
    json ordered = json::object();
    for (Stage s : kAllStages) {
        const std::string key(stage_name(s));
        if (stages.contains(key)) ordered[key] = stages[key];
    }
    write_file(manifest_path(config), json({{"stages", ordered}}).dump(2) + "\n");
    spdlog::info("stage {} done: {} files", name, out.files.size());
    return out;
}

std::vector<StageOutput> run_all(const PipelineConfig& config) {
    std::vector<StageOutput> outputs;
    for (Stage s : kAllStages) outputs.push_back(run_stage(s, config));
    return outputs;
}

int exit_code_for(const std::exception& error) noexcept {
    if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const ValidationError*>(&error) ||
        dynamic_cast<const ParseError*>(&error) || dynamic_cast<const MissingStageError*>(&error)) {
        return 2;
    }
    return 1;
}

} // namespace ctm
