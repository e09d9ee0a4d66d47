#include "ctm/corpus.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <json.hpp>

#include <sstream>
#include <unordered_set>

namespace ctm {

namespace {

void validate_document(const Document& doc, std::size_t line) {
    auto fail = [&](const std::string& msg) {
        if (line) throw ParseError(msg, line);
        throw ValidationError(msg);
    };
    if (doc.id.empty()) fail("document id is empty");
    if (trim(doc.abstract).empty()) fail("document '" + doc.id + "' has an empty abstract");
    if (doc.year < kMinYear || doc.year > kMaxYear) {
        fail("document '" + doc.id + "' has year " + std::to_string(doc.year) + " outside [" +
             std::to_string(kMinYear) + ", " + std::to_string(kMaxYear) + "]");
    }
}

void check_unique(const std::vector<Document>& docs, const std::vector<std::size_t>& lines) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!seen.insert(docs[i].id).second) {
            const std::string msg = "duplicate document id '" + docs[i].id + "'";
            if (!lines.empty()) throw ParseError(msg, lines[i]);
            throw ValidationError(msg);
        }
    }
}

} // namespace

Corpus::Corpus(std::vector<Document> documents, std::string source_note)
    : documents_(std::move(documents)), source_note_(std::move(source_note)) {
    for (const auto& doc : documents_) validate_document(doc, 0);
    check_unique(documents_, {});
}

std::vector<std::string> Corpus::ids() const {
    std::vector<std::string> out;
    out.reserve(documents_.size());
    for (const auto& d : documents_) out.push_back(d.id);
    return out;
}

std::vector<int> Corpus::years() const {
    std::vector<int> out;
    out.reserve(documents_.size());
    for (const auto& d : documents_) out.push_back(d.year);
    return out;
}

Corpus parse_corpus_jsonl(std::string_view text, std::string source_note) {
    using nlohmann::json;
    std::vector<Document> docs;
    std::vector<std::size_t> lines;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);

        auto require = [&](const char* key) -> const json& {
            auto it = obj.find(key);
            if (it == obj.end() || it->is_null()) {
                throw ParseError(std::string("missing field '") + key + "'", line_no);
            }
            return *it;
        };

        Document doc;
        const json& id = require("id");
        if (!id.is_string()) throw ParseError("field 'id' must be a string", line_no);
        doc.id = id.get<std::string>();
        if (auto it = obj.find("title"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) throw ParseError("field 'title' must be a string", line_no);
            doc.title = it->get<std::string>();
        }
        const json& abstract = require("abstract");
        if (!abstract.is_string()) throw ParseError("field 'abstract' must be a string", line_no);
        doc.abstract = abstract.get<std::string>();
        const json& year = require("year");
        if (!year.is_number_integer()) throw ParseError("field 'year' must be an integer", line_no);
        doc.year = year.get<int>();

        validate_document(doc, line_no);
        docs.push_back(std::move(doc));
        lines.push_back(line_no);
    }
    if (docs.empty()) throw ValidationError("corpus is empty");
    check_unique(docs, lines);
    return Corpus(std::move(docs), std::move(source_note));
}

Corpus parse_corpus_csv(std::string_view text, std::string source_note) {
    const auto records = parse_csv(text);
    if (records.empty()) throw ValidationError("corpus is empty");

    const auto& header = records.front().fields;
    auto column = [&](const std::string& name, bool required) -> std::ptrdiff_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) return static_cast<std::ptrdiff_t>(i);
        }
        if (required) throw ParseError("header lacks column '" + name + "'", records.front().line);
        return -1;
    };
    const auto c_id = column("id", true);
    const auto c_title = column("title", false);
    const auto c_abstract = column("abstract", true);
    const auto c_year = column("year", true);

    std::vector<Document> docs;
    std::vector<std::size_t> lines;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(rec.fields.size()),
                             rec.line);
        }
        Document doc;
        doc.id = rec.fields[c_id];
        if (c_title >= 0) doc.title = rec.fields[c_title];
        doc.abstract = rec.fields[c_abstract];
        if (trim(rec.fields[c_year]).empty()) throw ParseError("missing field 'year'", rec.line);
        try {
            doc.year = static_cast<int>(parse_integer(rec.fields[c_year]));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), rec.line);
        }
        validate_document(doc, rec.line);
        docs.push_back(std::move(doc));
        lines.push_back(rec.line);
    }
    if (docs.empty()) throw ValidationError("corpus is empty");
    check_unique(docs, lines);
    return Corpus(std::move(docs), std::move(source_note));
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    if (!std::filesystem::exists(path)) {
        throw Error("corpus file '" + path.string() + "' does not exist");
    }
    const std::string text = read_file(path);
    return format == CorpusFormat::csv ? parse_corpus_csv(text, path.string())
                                       : parse_corpus_jsonl(text, path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
    return load_corpus(path, path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl);
}

std::string to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& doc : corpus.documents()) {
        nlohmann::ordered_json obj;
        obj["id"] = doc.id;
        obj["title"] = doc.title;
        obj["abstract"] = doc.abstract;
        obj["year"] = doc.year;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    write_file(path, to_jsonl(corpus));
}

CorpusStats corpus_stats(const Corpus& corpus) {
    if (corpus.empty()) throw ValidationError("corpus is empty");
    CorpusStats stats;
    stats.n_docs = corpus.size();
    stats.year_min = kMaxYear;
    stats.year_max = kMinYear;
    std::size_t tokens = 0;
    for (const auto& doc : corpus.documents()) {
        stats.year_min = std::min(stats.year_min, doc.year);
        stats.year_max = std::max(stats.year_max, doc.year);
        ++stats.docs_per_year[doc.year];
        std::istringstream words(doc.abstract);
        std::string w;
        while (words >> w) ++tokens;
    }
    stats.mean_abstract_tokens = static_cast<double>(tokens) / static_cast<double>(stats.n_docs);
    return stats;
}

} // namespace ctm
