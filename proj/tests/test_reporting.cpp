#include "ctm/error.hpp"
#include "ctm/reporting.hpp"
#include "ctm/util.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace ctm;

namespace {

ReportInputs small_inputs() {
    ReportInputs in;
    in.docs = {{"d0", {"apple", "apple", "pear"}}, {"d1", {"apple"}}, {"d2", {"pear", "kiwi"}}, {"d3", {"kiwi"}}};
    in.years = {2001, 2003, 2003, 2001};
    in.labels = {0, 0, 1, 1};
    in.k = 2;
    in.margins = {0.5, 0.25, 1.0, 2.0};
    in.coords = Eigen::MatrixXd::Zero(4, 2);
    in.coords << 0, 1, 2, 3, 4, 5, 6, 7;
    in.projection_method = "pca";
    in.comparison.rows = {{"tfidf", 0.1, 2, 4}, {"embedding", 0.2, 2, 4}, {"fused_latent", 0.3, 2, 4}};
    in.config = {{"seed", 7}};
    return in;
}

} // namespace

TEST_CASE("shares sum to one hundred") {
    const auto s = topic_shares({0, 0, 2, 2, 2, 1}, 4);
    CHECK(s[0] == doctest::Approx(100.0 / 3));
    CHECK(s[1] == doctest::Approx(100.0 / 6));
    CHECK(s[2] == doctest::Approx(50.0));
    CHECK(s[3] == 0.0);
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> labels(1 + rng() % 100);
        for (auto& l : labels) l = static_cast<int>(rng() % 6);
        const auto shares = topic_shares(labels, 6);
        double total = 0.0;
        for (double v : shares) total += v;
        CHECK(total == doctest::Approx(100.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(topic_shares({0, 3}, 3), ValidationError);
}

TEST_CASE("class-based term weights by hand") {
    const ReportInputs in = small_inputs();
    const auto terms = topic_top_terms(in.docs, in.labels, 2, 30);
    REQUIRE(terms[0].terms.size() == 2);
    CHECK(terms[0].terms[0].first == "apple");
    CHECK(std::abs(terms[0].terms[0].second - 3.0 * std::log(3.0)) <= 1e-12);
    CHECK(terms[0].terms[1].first == "pear");
    CHECK(std::abs(terms[0].terms[1].second - std::log(2.0)) <= 1e-12);
    CHECK(terms[1].terms[0].first == "kiwi");
    CHECK(std::abs(terms[1].terms[0].second - 2.0 * std::log(3.0)) <= 1e-12);

    const auto freq = topic_top_terms(in.docs, in.labels, 2, 1, TermScoring::frequency);
    REQUIRE(freq[1].terms.size() == 1);
    CHECK(freq[1].terms[0] == std::pair<std::string, double>{"kiwi", 2.0});

    CHECK(parse_term_scoring("frequency") == TermScoring::frequency);
    CHECK_THROWS_AS(parse_term_scoring("bm25"), ValidationError);
}

TEST_CASE("disjoint vocabularies keep topic terms apart") {
    std::vector<CleanDoc> docs;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        const int t = i % 3;
        docs.push_back({"d" + std::to_string(i), {"t" + std::to_string(t) + "w" + std::to_string(i % 4), "t" + std::to_string(t) + "base"}});
        labels.push_back(t);
    }
    const auto terms = topic_top_terms(docs, labels, 4, 10);
    for (int t = 0; t < 3; ++t) {
        CHECK_FALSE(terms[static_cast<std::size_t>(t)].empty);
        CHECK(terms[static_cast<std::size_t>(t)].terms.front().first == "t" + std::to_string(t) + "base");
        for (const auto& [term, w] : terms[static_cast<std::size_t>(t)].terms) CHECK(term.rfind("t" + std::to_string(t), 0) == 0);
    }
    CHECK(terms[3].empty);
    CHECK(terms[3].terms.empty());

    // document order is irrelevant
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
    std::vector<CleanDoc> docs2;
    std::vector<int> labels2;
    for (auto i : order) {
        docs2.push_back(docs[i]);
        labels2.push_back(labels[i]);
    }
    const auto again = topic_top_terms(docs2, labels2, 4, 10);
    for (int t = 0; t < 4; ++t) CHECK(again[static_cast<std::size_t>(t)].terms == terms[static_cast<std::size_t>(t)].terms);
}

TEST_CASE("ties are broken lexicographically") {
    const std::vector<CleanDoc> docs{{"a", {"zeta", "alpha", "mid"}}};
    const auto terms = topic_top_terms(docs, {0}, 1, 2, TermScoring::frequency);
    REQUIRE(terms[0].terms.size() == 2);
    CHECK(terms[0].terms[0].first == "alpha");
    CHECK(terms[0].terms[1].first == "mid");
}

TEST_CASE("evolution counts") {
    const auto evo = topic_evolution({0, 1, 1, 0, 1}, {2005, 2003, 2005, 2005, 2003}, 3);
    CHECK(evo.years == std::vector<int>{2003, 2004, 2005});
    CHECK(evo.counts[0] == std::vector<std::size_t>{0, 2, 0});
    CHECK(evo.counts[1] == std::vector<std::size_t>{0, 0, 0});
    CHECK(evo.counts[2] == std::vector<std::size_t>{2, 1, 0});
    CHECK(evo.ratios[2][0] == 1.0);
    CHECK(evo.ratios[0][1] == doctest::Approx(2.0 / 3));
    CHECK(evo.ratios[2][2] == 0.0);
    CHECK_THROWS_AS(topic_evolution({0}, {2000, 2001}, 1), ValidationError);
}

TEST_CASE("report export") {
    testing::ScratchDir a("report_a"), b("report_b");
    const TopicReport report = build_report(small_inputs());
    const auto ea = export_report(report, a.path());
    const auto eb = export_report(report, b.path());
    REQUIRE(ea.size() == 7);
    for (std::size_t i = 0; i < 6; ++i) CHECK(ea[i].file == kReportFiles[i]);
    CHECK(ea[6].file == "manifest.json");
    for (std::size_t i = 0; i < ea.size(); ++i) {
        CHECK(ea[i].sha256 == eb[i].sha256);
        const std::string body = read_file(a / ea[i].file);
        CHECK(sha256_hex(body) == ea[i].sha256);
        CHECK(body.size() == ea[i].bytes);
        CHECK(body == read_file(b / ea[i].file));
    }

    const auto topics = nlohmann::json::parse(read_file(a / "topics.json"));
    CHECK(topics["k"] == 2);
    CHECK(topics["n_docs"] == 4);
    CHECK(topics["topics"][1]["doc_ids"] == nlohmann::json{"d2", "d3"});
    CHECK(topics["documents"][3]["margin"] == 2.0);
    CHECK(topics["config"]["seed"] == 7);
    CHECK(topics["config"]["report"]["term_scoring"] == "class_tfidf");

    const auto manifest = nlohmann::json::parse(read_file(a / "manifest.json"));
    REQUIRE(manifest["files"].size() == 6);
    CHECK(manifest["files"][0]["sha256"] == ea[0].sha256);

    CHECK(read_file(a / "shares.csv") == "topic,share,n_docs\n0,50,2\n1,50,2\n");
    const std::string coords = read_file(a / "coords.csv");
    CHECK(coords.rfind("id,x,y,cluster_label\nd0,0,1,0\n", 0) == 0);
    const std::string evo = read_file(a / "evolution.csv");
    CHECK(evo.find("2002,0,0,0\n") != std::string::npos);
    CHECK(evo.find("2003,1,1,0.5\n") != std::string::npos);
}

TEST_CASE("report input alignment") {
    ReportInputs in = small_inputs();
    in.years.pop_back();
    CHECK_THROWS_AS(build_report(in), ValidationError);
    in = small_inputs();
    in.coords = Eigen::MatrixXd::Zero(3, 2);
    CHECK_THROWS_AS(build_report(in), ValidationError);
}
