#include "ctm/reporting.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace ctm {

namespace {

using json = nlohmann::ordered_json;

void check_labels(const std::vector<int>& labels, std::size_t k) {
    if (k == 0) throw ValidationError("number of topics must be positive");
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= k) {
            throw ValidationError("label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
        }
    }
}

json terms_json(const TopicTerms& topic) {
    json arr = json::array();
    for (const auto& [term, weight] : topic.terms) arr.push_back({{"term", term}, {"weight", weight}});
    return arr;
}

} // namespace

std::vector<double> topic_shares(const std::vector<int>& labels, std::size_t k) {
    check_labels(labels, k);
    std::vector<std::size_t> counts(k, 0);
    for (int label : labels) ++counts[static_cast<std::size_t>(label)];
    std::vector<double> shares(k, 0.0);
    if (labels.empty()) return shares;
    for (std::size_t t = 0; t < k; ++t) {
        shares[t] = 100.0 * static_cast<double>(counts[t]) / static_cast<double>(labels.size());
    }
    return shares;
}

TermScoring parse_term_scoring(const std::string& name) {
    if (name == "class_tfidf") return TermScoring::class_tfidf;
    if (name == "frequency") return TermScoring::frequency;
    throw ValidationError("unknown term scoring '" + name + "' (expected class_tfidf or frequency)");
}

std::string to_string(TermScoring scoring) {
    return scoring == TermScoring::class_tfidf ? "class_tfidf" : "frequency";
}

std::vector<TopicTerms> topic_top_terms(const std::vector<CleanDoc>& docs, const std::vector<int>& labels,
                                        std::size_t k, std::size_t k_terms, TermScoring scoring) {
    if (docs.size() != labels.size()) throw ValidationError("topic_top_terms: docs and labels differ in length");
    check_labels(labels, k);

    std::vector<std::map<std::string, double>> tf(k);
    std::vector<bool> seen(k, false);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto t = static_cast<std::size_t>(labels[i]);
        seen[t] = true;
        for (const auto& term : docs[i].terms) tf[t][term] += 1.0;
    }
    std::map<std::string, std::size_t> topics_with;
    for (const auto& counts : tf) {
        for (const auto& entry : counts) ++topics_with[entry.first];
    }

    std::vector<TopicTerms> out(k);
    for (std::size_t t = 0; t < k; ++t) {
        out[t].empty = !seen[t];
        auto& ranked = out[t].terms;
        for (const auto& [term, count] : tf[t]) {
            double w = count;
            if (scoring == TermScoring::class_tfidf) {
                w *= std::log(1.0 + static_cast<double>(k) / static_cast<double>(topics_with[term]));
            }
            ranked.emplace_back(term, w);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (ranked.size() > k_terms) ranked.resize(k_terms);
    }
    return out;
}

TopicEvolution topic_evolution(const std::vector<int>& labels, const std::vector<int>& years, std::size_t k) {
    if (labels.size() != years.size()) throw ValidationError("topic_evolution: labels and years differ in length");
    check_labels(labels, k);
    TopicEvolution evo;
    if (labels.empty()) return evo;
    const auto [lo, hi] = std::minmax_element(years.begin(), years.end());
    for (int y = *lo; y <= *hi; ++y) evo.years.push_back(y);
    evo.counts.assign(evo.years.size(), std::vector<std::size_t>(k, 0));
    std::vector<std::size_t> per_topic(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto t = static_cast<std::size_t>(labels[i]);
        ++evo.counts[static_cast<std::size_t>(years[i] - *lo)][t];
        ++per_topic[t];
    }
    evo.ratios.assign(evo.years.size(), std::vector<double>(k, 0.0));
    for (std::size_t y = 0; y < evo.years.size(); ++y) {
        for (std::size_t t = 0; t < k; ++t) {
            if (per_topic[t] > 0) {
                evo.ratios[y][t] = static_cast<double>(evo.counts[y][t]) / static_cast<double>(per_topic[t]);
            }
        }
    }
    return evo;
}

TopicReport build_report(const ReportInputs& in) {
    const std::size_t n = in.docs.size();
    if (in.labels.size() != n || in.years.size() != n) {
        throw ValidationError("report: docs, labels and years must be aligned");
    }
    if (!in.margins.empty() && in.margins.size() != n) throw ValidationError("report: margins not aligned");
    if (in.coords.size() > 0 && (static_cast<std::size_t>(in.coords.rows()) != n || in.coords.cols() != 2)) {
        throw ValidationError("report: coords must be n x 2");
    }
    TopicReport r;
    r.k = in.k;
    for (const auto& d : in.docs) r.doc_ids.push_back(d.id);
    r.labels = in.labels;
    r.margins = in.margins;
    r.shares = topic_shares(in.labels, in.k);
    r.top_terms = topic_top_terms(in.docs, in.labels, in.k, in.k_terms, in.scoring);
    r.evolution = topic_evolution(in.labels, in.years, in.k);
    r.comparison = in.comparison;
    r.coords = in.coords;
    r.projection_method = in.projection_method;
    r.config = in.config;
    r.config["report"]["term_scoring"] = to_string(in.scoring);
    r.config["report"]["top_terms"] = in.k_terms;
    return r;
}

std::vector<ManifestEntry> export_report(const TopicReport& report, const std::filesystem::path& out_dir) {
    const std::size_t n = report.doc_ids.size();
    std::vector<std::pair<std::string, std::string>> files;

    {
        json topics = json::array();
        for (std::size_t t = 0; t < report.k; ++t) {
            json ids = json::array();
            for (std::size_t i = 0; i < n; ++i) {
                if (static_cast<std::size_t>(report.labels[i]) == t) ids.push_back(report.doc_ids[i]);
            }
            topics.push_back({{"topic", t},
                              {"doc_share", report.shares[t]},
                              {"n_docs", ids.size()},
                              {"empty", report.top_terms[t].empty},
                              {"top_terms", terms_json(report.top_terms[t])},
                              {"doc_ids", std::move(ids)}});
        }
        json docs = json::array();
        for (std::size_t i = 0; i < n; ++i) {
            json d = {{"id", report.doc_ids[i]}, {"label", report.labels[i]}};
            if (!report.margins.empty()) d["margin"] = report.margins[i];
            docs.push_back(std::move(d));
        }
        json comparison = json::array();
        for (const auto& row : report.comparison.rows) {
            comparison.push_back({{"method", row.method}, {"silhouette", row.silhouette}, {"k", row.k},
                                  {"n_docs", row.n_docs}});
        }
        json root = {{"k", report.k},
                     {"n_docs", n},
                     {"assignment", "hard"},
                     {"topics", std::move(topics)},
                     {"documents", std::move(docs)},
                     {"method_comparison", std::move(comparison)},
                     {"config", report.config}};
        files.emplace_back("topics.json", root.dump(2) + "\n");
    }
    {
        std::ostringstream out;
        out << "topic,share,n_docs\n";
        for (std::size_t t = 0; t < report.k; ++t) {
            const auto count = std::count(report.labels.begin(), report.labels.end(), static_cast<int>(t));
            out << t << ',' << format_double(report.shares[t]) << ',' << count << '\n';
        }
        files.emplace_back("shares.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "year,topic,count,ratio\n";
        const auto& evo = report.evolution;
        for (std::size_t y = 0; y < evo.years.size(); ++y) {
            for (std::size_t t = 0; t < report.k; ++t) {
                out << evo.years[y] << ',' << t << ',' << evo.counts[y][t] << ',' << format_double(evo.ratios[y][t])
                    << '\n';
            }
        }
        files.emplace_back("evolution.csv", out.str());
    }
    {
        json cloud = json::array();
        for (std::size_t t = 0; t < report.k; ++t) {
            cloud.push_back({{"topic", t}, {"terms", terms_json(report.top_terms[t])}});
        }
        files.emplace_back("wordcloud.json", cloud.dump(2) + "\n");
    }
    files.emplace_back("comparison.csv", to_csv(report.comparison));
    {
        std::ostringstream out;
        out << "id,x,y,cluster_label\n";
        for (std::size_t i = 0; i < n && report.coords.rows() > 0; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            out << csv_escape(report.doc_ids[i]) << ',' << format_double(report.coords(row, 0)) << ','
                << format_double(report.coords(row, 1)) << ',' << report.labels[i] << '\n';
        }
        files.emplace_back("coords.csv", out.str());
    }

    std::vector<ManifestEntry> entries;
    json listing = json::array();
    for (const auto& [name, body] : files) {
        write_file(out_dir / name, body);
        entries.push_back({name, sha256_hex(body), body.size()});
        listing.push_back({{"file", name}, {"sha256", entries.back().sha256}, {"bytes", body.size()}});
    }
    const std::string manifest = json({{"files", std::move(listing)}}).dump(2) + "\n";
    write_file(out_dir / "manifest.json", manifest);
    entries.push_back({"manifest.json", sha256_hex(manifest), manifest.size()});
    return entries;
}

} // namespace ctm
