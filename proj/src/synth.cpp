#include "ctm/synth.hpp"

#include "ctm/error.hpp"
#include "ctm/preprocess.hpp"
#include "ctm/util.hpp"

#include <json.hpp>

#include <cmath>
#include <random>
#include <set>

namespace ctm {

namespace {

std::size_t borrowed_count(const PlantedSpec& spec) {
    return static_cast<std::size_t>(std::llround(spec.overlap_fraction * static_cast<double>(spec.vocab_per_topic)));
}

std::string pseudo_word(Rng& rng) {
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    const std::size_t syllables = 2 + uniform_index(rng, 2);
    std::string word;
    for (std::size_t s = 0; s < syllables; ++s) {
        word += consonants[uniform_index(rng, consonants.size())];
        word += vowels[uniform_index(rng, vowels.size())];
    }
    return word;
}

Eigen::VectorXd dirichlet(Rng& rng, std::size_t dim, double concentration) {
    std::gamma_distribution<double> gamma(concentration, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gamma(rng);
    const double total = v.sum();
    if (!(total > 0.0)) {
        // Every draw underflowed; the limit of such a draw is a vertex.
        v.setZero();
        v(static_cast<Eigen::Index>(uniform_index(rng, dim))) = 1.0;
        return v;
    }
    return v / total;
}

std::size_t sample_index(Rng& rng, const Eigen::VectorXd& probs) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (u < acc) return static_cast<std::size_t>(i);
    }
    for (Eigen::Index i = probs.size() - 1; i >= 0; --i) {
        if (probs(i) > 0.0) return static_cast<std::size_t>(i);
    }
    return 0;
}

} // namespace

void PlantedSpec::validate() const {
    if (n_topics < 2) throw ValidationError("planted spec: n_topics must be at least 2");
    if (n_docs == 0) throw ValidationError("planted spec: n_docs must be positive");
    if (doc_length == 0) throw ValidationError("planted spec: doc_length must be positive");
    if (vocab_per_topic == 0) throw ValidationError("planted spec: vocab_per_topic must be positive");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
        throw ValidationError("planted spec: overlap_fraction must lie in [0, 1)");
    }
    if (!(concentration > 0.0)) throw ValidationError("planted spec: concentration must be positive");
    if (year_min > year_max || year_min < kMinYear || year_max > kMaxYear) {
        throw ValidationError("planted spec: invalid year range");
    }
}

PlantedCorpus generate_planted(const PlantedSpec& spec) {
    spec.validate();
    const std::size_t k = spec.n_topics;
    const std::size_t borrowed = borrowed_count(spec);
    const std::size_t own = spec.vocab_per_topic - borrowed;
    if (own == 0 || borrowed > own) {
        throw ValidationError("vocabulary exhausted: " + std::to_string(borrowed) + " borrowed words per topic but only " +
                              std::to_string(own) + " own words");
    }

    Rng rng(spec.seed);
    PlantedCorpus out;
    const auto& stop = default_stoplist();
    const auto& excluded = default_exclusion_list();
    std::set<std::string> used;
    while (out.vocabulary.size() < k * own) {
        std::string w = pseudo_word(rng);
        if (stop.count(w) || excluded.count(w) || !used.insert(w).second) continue;
        out.vocabulary.push_back(std::move(w));
    }
    out.topic_words.resize(k);
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t j = 0; j < own; ++j) out.topic_words[t].push_back(t * own + j);
        const std::size_t next = (t + 1) % k;
        for (std::size_t j = 0; j < borrowed; ++j) out.topic_words[t].push_back(next * own + j);
    }

    out.phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(out.vocabulary.size()));
    std::vector<Eigen::VectorXd> word_probs(k);
    for (std::size_t t = 0; t < k; ++t) {
        word_probs[t] = dirichlet(rng, out.topic_words[t].size(), 1.0);
        for (std::size_t j = 0; j < out.topic_words[t].size(); ++j) {
            out.phi(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(out.topic_words[t][j])) +=
                word_probs[t](static_cast<Eigen::Index>(j));
        }
    }

    out.theta.resize(static_cast<Eigen::Index>(spec.n_docs), static_cast<Eigen::Index>(k));
    std::uniform_int_distribution<int> year_dist(spec.year_min, spec.year_max);
    const int width = static_cast<int>(std::to_string(spec.n_docs - 1).size());
    std::vector<Document> docs;
    docs.reserve(spec.n_docs);
    for (std::size_t d = 0; d < spec.n_docs; ++d) {
        const Eigen::VectorXd mix = dirichlet(rng, k, spec.concentration);
        out.theta.row(static_cast<Eigen::Index>(d)) = mix.transpose();
        Eigen::Index best = 0;
        mix.maxCoeff(&best);
        out.labels.push_back(static_cast<int>(best));

        std::string text;
        for (std::size_t n = 0; n < spec.doc_length; ++n) {
            const std::size_t t = sample_index(rng, mix);
            const std::size_t j = sample_index(rng, word_probs[t]);
            if (!text.empty()) text += ' ';
            text += out.vocabulary[out.topic_words[t][j]];
        }
        std::string id = std::to_string(d);
        id = "doc" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
        docs.push_back({id, "Synthetic document " + std::to_string(d), std::move(text), year_dist(rng)});
    }
    out.corpus = Corpus(std::move(docs), "planted seed " + std::to_string(spec.seed));
    return out;
}

std::string truth_json(const PlantedCorpus& planted, const PlantedSpec& spec) {
    using json = nlohmann::ordered_json;
    auto rows = [](const Eigen::MatrixXd& m) {
        json arr = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            arr.push_back(std::move(row));
        }
        return arr;
    };
    json topic_words = json::array();
    for (const auto& words : planted.topic_words) {
        json list = json::array();
        for (std::size_t w : words) list.push_back(planted.vocabulary[w]);
        topic_words.push_back(std::move(list));
    }
    json root = {{"spec",
                  {{"n_topics", spec.n_topics},
                   {"n_docs", spec.n_docs},
                   {"doc_length", spec.doc_length},
                   {"vocab_per_topic", spec.vocab_per_topic},
                   {"overlap_fraction", spec.overlap_fraction},
                   {"year_range", {spec.year_min, spec.year_max}},
                   {"concentration", spec.concentration},
                   {"seed", spec.seed}}},
                 {"ids", planted.corpus.ids()},
                 {"labels", planted.labels},
                 {"vocabulary", planted.vocabulary},
                 {"topic_words", std::move(topic_words)},
                 {"theta", rows(planted.theta)},
                 {"phi", rows(planted.phi)}};
    return root.dump() + "\n";
}

void write_planted(const PlantedCorpus& planted, const PlantedSpec& spec, const std::filesystem::path& dir) {
    save_corpus(planted.corpus, dir / "corpus.jsonl");
    write_file(dir / "truth.json", truth_json(planted, spec));
}

} // namespace ctm
