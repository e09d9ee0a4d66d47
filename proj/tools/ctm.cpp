#include "ctm/error.hpp"
#include "ctm/pipeline.hpp"
#include "ctm/synth.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("ctm");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("CTM_LOG");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "warn") {
        spdlog::set_level(spdlog::level::warn);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        spdlog::set_level(spdlog::level::info);
    }
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"ctm: contextual topic modeling pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out_dir;

    std::vector<std::pair<CLI::App*, std::optional<ctm::Stage>>> commands;
    auto add_pipeline_command = [&](const std::string& name, std::optional<ctm::Stage> stage, const std::string& help) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->add_option("--config", config_path, "pipeline config (TOML)")->required();
        cmd->add_option("--seed", seed, "override the top-level seed");
        cmd->add_option("--threads", threads, "worker threads for k-means restarts");
        cmd->add_option("--out", out_dir, "override the output directory");
        commands.emplace_back(cmd, stage);
    };
    for (ctm::Stage s : ctm::kAllStages) {
        add_pipeline_command(std::string(ctm::stage_name(s)), s, "run the " + std::string(ctm::stage_name(s)) + " stage");
    }
    add_pipeline_command("run-all", std::nullopt, "run every stage in order");

    ctm::PlantedSpec spec;
    std::string synth_out;
    CLI::App* synth = app.add_subcommand("synth", "write a planted-topic corpus and its truth file");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--n-topics", spec.n_topics);
    synth->add_option("--n-docs", spec.n_docs);
    synth->add_option("--doc-length", spec.doc_length);
    synth->add_option("--vocab-per-topic", spec.vocab_per_topic);
    synth->add_option("--overlap", spec.overlap_fraction);
    synth->add_option("--concentration", spec.concentration);
    synth->add_option("--year-min", spec.year_min);
    synth->add_option("--year-max", spec.year_max);
    synth->add_option("--seed", spec.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            const auto planted = ctm::generate_planted(spec);
            ctm::write_planted(planted, spec, synth_out);
            spdlog::info("synth: wrote {} documents to {}", planted.corpus.size(), synth_out);
            return 0;
        }
        ctm::PipelineConfig config = ctm::load_config(config_path);
        if (seed) config.seed = *seed;
        if (threads) config.threads = *threads;
        if (out_dir) config.out_dir = *out_dir;
        config.validate();
        for (const auto& [cmd, stage] : commands) {
            if (!cmd->parsed()) continue;
            if (stage) {
                ctm::run_stage(*stage, config);
            } else {
                ctm::run_all(config);
            }
        }
        return 0;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return ctm::exit_code_for(e);
    }
}
