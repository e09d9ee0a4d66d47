#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ctm {

struct Document {
    std::string id;
    std::string title;
    std::string abstract;
    int year = 0;

    friend bool operator==(const Document&, const Document&) = default;
};

/// Ordered, validated collection of documents. Document order defines the
/// row order of every downstream matrix.
class Corpus {
public:
    Corpus() = default;

    /// Validates every document invariant and id uniqueness; throws ValidationError.
    explicit Corpus(std::vector<Document> documents, std::string source_note = {});

    const std::vector<Document>& documents() const noexcept { return documents_; }
    const std::string& source_note() const noexcept { return source_note_; }
    std::size_t size() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return documents_.empty(); }
    const Document& operator[](std::size_t i) const { return documents_[i]; }

    std::vector<std::string> ids() const;
    std::vector<int> years() const;

    friend bool operator==(const Corpus& a, const Corpus& b) { return a.documents_ == b.documents_; }

private:
    std::vector<Document> documents_;
    std::string source_note_;
};

enum class CorpusFormat { jsonl, csv };

struct CorpusStats {
    std::size_t n_docs = 0;
    int year_min = 0;
    int year_max = 0;
    std::map<int, std::size_t> docs_per_year;
    double mean_abstract_tokens = 0.0; ///< whitespace-delimited tokens
};

inline constexpr int kMinYear = 1900;
inline constexpr int kMaxYear = 2100;

/// Reads a corpus file. Parse failures carry the offending line number.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Picks the format from the extension: ".csv" is CSV, everything else JSONL.
Corpus load_corpus(const std::filesystem::path& path);

Corpus parse_corpus_jsonl(std::string_view text, std::string source_note = {});
Corpus parse_corpus_csv(std::string_view text, std::string source_note = {});

/// Canonical JSONL: one object per line with keys id, title, abstract, year.
std::string to_jsonl(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

CorpusStats corpus_stats(const Corpus& corpus);

} // namespace ctm
