#pragma once

#include "ctm/clustering.hpp"
#include "ctm/preprocess.hpp"
#include "ctm/projection.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ctm {

/// Percentage of documents per topic, zero for empty topics.
std::vector<double> topic_shares(const std::vector<int>& labels, std::size_t k);

enum class TermScoring {
    class_tfidf, ///< tf within the topic times ln(1 + k / topics containing the term)
    frequency,   ///< raw count within the topic
};

TermScoring parse_term_scoring(const std::string& name);
std::string to_string(TermScoring scoring);

struct TopicTerms {
    std::vector<std::pair<std::string, double>> terms; ///< descending weight, ties lexicographic
    bool empty = false;                                ///< no document carries this topic
};

std::vector<TopicTerms> topic_top_terms(const std::vector<CleanDoc>& docs, const std::vector<int>& labels,
                                        std::size_t k, std::size_t k_terms = 30,
                                        TermScoring scoring = TermScoring::class_tfidf);

struct TopicEvolution {
    std::vector<int> years;                        ///< contiguous min..max
    std::vector<std::vector<std::size_t>> counts;  ///< [year][topic]
    std::vector<std::vector<double>> ratios;       ///< counts / documents in the topic
};

TopicEvolution topic_evolution(const std::vector<int>& labels, const std::vector<int>& years, std::size_t k);

struct TopicReport {
    std::size_t k = 0;
    std::vector<std::string> doc_ids;
    std::vector<int> labels;
    std::vector<double> margins; ///< distance to second-nearest minus nearest centroid
    std::vector<double> shares;
    std::vector<TopicTerms> top_terms;
    TopicEvolution evolution;
    MethodComparison comparison;
    Eigen::MatrixXd coords; ///< n x 2
    std::string projection_method;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

struct ReportInputs {
    std::vector<CleanDoc> docs;
    std::vector<int> years;
    std::vector<int> labels;
    std::size_t k = 0;
    std::vector<double> margins;
    MethodComparison comparison;
    Eigen::MatrixXd coords;
    std::string projection_method;
    std::size_t k_terms = 30;
    TermScoring scoring = TermScoring::class_tfidf;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

TopicReport build_report(const ReportInputs& inputs);

struct ManifestEntry {
    std::string file;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

inline constexpr const char* kReportFiles[] = {"topics.json",    "shares.csv",     "evolution.csv",
                                               "wordcloud.json", "comparison.csv", "coords.csv"};

/// Writes the six report files plus manifest.json (which hashes the other six)
/// and returns all seven entries. Output is a pure function of the report.
std::vector<ManifestEntry> export_report(const TopicReport& report, const std::filesystem::path& out_dir);

} // namespace ctm
