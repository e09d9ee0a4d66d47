#pragma once

#include "ctm/corpus.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctm {

struct PlantedSpec {
    std::size_t n_topics = 8;
    std::size_t n_docs = 200;
    std::size_t doc_length = 60;
    std::size_t vocab_per_topic = 40;
    double overlap_fraction = 0.2; ///< share of a topic's words borrowed from the next topic
    int year_min = 2000;
    int year_max = 2023;
    double concentration = 0.1;    ///< symmetric Dirichlet parameter of the document mixtures
    std::uint64_t seed = 0;

    void validate() const;
};

struct PlantedCorpus {
    Corpus corpus;
    std::vector<int> labels;                        ///< argmax of each theta row
    Eigen::MatrixXd theta;                          ///< n_docs x n_topics
    Eigen::MatrixXd phi;                            ///< n_topics x vocabulary.size()
    std::vector<std::string> vocabulary;
    std::vector<std::vector<std::size_t>> topic_words; ///< indices into vocabulary
};

/// Planted-topic corpus: every topic owns round((1 - overlap) * vocab_per_topic)
/// pseudo-words and borrows the rest from the next topic's own words. Abstracts
/// are the sampled tokens joined by spaces. Deterministic given the seed.
PlantedCorpus generate_planted(const PlantedSpec& spec);

/// truth.json: spec, vocabulary, topic word lists, labels, theta and phi.
std::string truth_json(const PlantedCorpus& planted, const PlantedSpec& spec);

/// Writes corpus.jsonl and truth.json into dir.
void write_planted(const PlantedCorpus& planted, const PlantedSpec& spec, const std::filesystem::path& dir);

} // namespace ctm
