#include "ctm/error.hpp"
#include "ctm/preprocess.hpp"
#include "ctm/synth.hpp"
#include "ctm/util.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace ctm;

namespace {

PlantedSpec small_spec(std::uint64_t seed) {
    PlantedSpec s;
    s.n_topics = 4;
    s.n_docs = 50;
    s.doc_length = 30;
    s.vocab_per_topic = 10;
    s.seed = seed;
    return s;
}

std::vector<std::string> words_of(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

} // namespace

TEST_CASE("no overlap gives disjoint topic vocabularies") {
    PlantedSpec spec = small_spec(1);
    spec.overlap_fraction = 0.0;
    const PlantedCorpus p = generate_planted(spec);
    std::set<std::size_t> all;
    for (const auto& words : p.topic_words) {
        CHECK(words.size() == 10);
        for (auto w : words) CHECK(all.insert(w).second);
    }
    CHECK(all.size() == p.vocabulary.size());
}

TEST_CASE("overlap borrows from the next topic") {
    const PlantedCorpus p = generate_planted(small_spec(2));
    for (std::size_t t = 0; t < 4; ++t) {
        const auto& mine = p.topic_words[t];
        const auto& next = p.topic_words[(t + 1) % 4];
        REQUIRE(mine.size() == 10);
        for (std::size_t j = 0; j < 2; ++j) CHECK(mine[8 + j] == next[j]);
    }
}

TEST_CASE("planted structure") {
    PlantedSpec spec;
    spec.seed = 42;
    const PlantedCorpus p = generate_planted(spec);
    REQUIRE(p.corpus.size() == 200);
    CHECK(std::set<int>(p.labels.begin(), p.labels.end()).size() == 8);
    CHECK(p.corpus.documents().front().id == "doc000");
    CHECK(p.corpus.documents().back().id == "doc199");
    for (Eigen::Index d = 0; d < p.theta.rows(); ++d) {
        CHECK(std::abs(p.theta.row(d).sum() - 1.0) <= 1e-12);
        Eigen::Index best = 0;
        p.theta.row(d).maxCoeff(&best);
        CHECK(best == p.labels[static_cast<std::size_t>(d)]);
    }
    for (Eigen::Index t = 0; t < p.phi.rows(); ++t) CHECK(std::abs(p.phi.row(t).sum() - 1.0) <= 1e-12);

    const std::set<std::string> vocab(p.vocabulary.begin(), p.vocabulary.end());
    const auto& stop = default_stoplist();
    for (const auto& doc : p.corpus.documents()) {
        CHECK(doc.year >= 2000);
        CHECK(doc.year <= 2023);
        const auto words = words_of(doc.abstract);
        CHECK(words.size() == 60);
        for (const auto& w : words) {
            CHECK(vocab.count(w) == 1);
            CHECK(stop.count(w) == 0);
        }
    }
}

TEST_CASE("generation is deterministic") {
    const PlantedCorpus a = generate_planted(small_spec(9));
    const PlantedCorpus b = generate_planted(small_spec(9));
    const PlantedCorpus c = generate_planted(small_spec(10));
    CHECK(to_jsonl(a.corpus) == to_jsonl(b.corpus));
    CHECK(truth_json(a, small_spec(9)) == truth_json(b, small_spec(9)));
    CHECK(to_jsonl(a.corpus) != to_jsonl(c.corpus));
}

TEST_CASE("planted spec errors") {
    PlantedSpec spec = small_spec(1);
    spec.overlap_fraction = 0.9;
    CHECK_THROWS_WITH_AS(generate_planted(spec), doctest::Contains("vocabulary exhausted"), ValidationError);
    spec = small_spec(1);
    spec.n_topics = 1;
    CHECK_THROWS_AS(generate_planted(spec), ValidationError);
    spec = small_spec(1);
    spec.year_min = 2030;
    CHECK_THROWS_AS(generate_planted(spec), ValidationError);
}

TEST_CASE("bundled fixture is reproducible") {
    PlantedSpec spec;
    spec.seed = 42;
    const PlantedCorpus p = generate_planted(spec);
    const auto dir = testing::source_dir() / "fixtures" / "planted200";
    CHECK(read_file(dir / "corpus.jsonl") == to_jsonl(p.corpus));
    CHECK(read_file(dir / "truth.json") == truth_json(p, spec));
}
