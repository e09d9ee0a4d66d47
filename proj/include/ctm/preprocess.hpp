#pragma once

#include "ctm/corpus.hpp"

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ctm {

/// Version tag of the bundled English stoplist (data/stoplist_en.txt).
inline constexpr std::string_view kStoplistVersion = "en-1";

/// The bundled stoplist; identical to data/stoplist_en.txt.
const std::set<std::string>& default_stoplist();

/// Core query keywords removed from every term list, as unigrams and as the
/// space-separated bigram "artificial intelligence".
const std::set<std::string>& default_exclusion_list();

struct CleanConfig {
    std::set<std::string> stoplist = default_stoplist();
    std::set<std::string> exclusion_list = default_exclusion_list();
    bool strip_parenthesized = true;
    bool collapse_repeats = true;
    int ngram_min = 1;
    int ngram_max = 2;

    /// Throws ValidationError unless 1 <= ngram_min <= ngram_max <= 2 and the
    /// exclusion list is lowercase.
    void validate() const;
};

struct CleanDoc {
    std::string id;
    std::vector<std::string> terms; ///< unigrams, then bigrams joined with '_'

    friend bool operator==(const CleanDoc&, const CleanDoc&) = default;
};

struct PreprocessResult {
    std::vector<CleanDoc> docs;
    std::vector<std::string> empty_ids; ///< documents left without terms
};

/// Lowercased alphabetic tokens. Parenthesized spans are removed first
/// (nested spans up to the matching close; an unmatched '(' runs to the end),
/// then any non-letter splits tokens. Letters are ASCII plus the Latin-1
/// accented range.
std::vector<std::string> clean_text(std::string_view raw, const CleanConfig& config);

std::vector<std::string> remove_stop_and_excluded(const std::vector<std::string>& tokens,
                                                  const CleanConfig& config);

/// All unigrams in order followed by adjacent bigrams "a_b"; a bigram whose
/// spaced form "a b" is on the exclusion list is dropped.
std::vector<std::string> build_ngrams(const std::vector<std::string>& tokens,
                                      const CleanConfig& config);

/// clean_text -> remove_stop_and_excluded -> build_ngrams on each abstract.
PreprocessResult preprocess_corpus(const Corpus& corpus, const CleanConfig& config);

/// True for terms produced by build_ngrams that are bigrams.
inline bool is_bigram(std::string_view term) { return term.find('_') != std::string_view::npos; }

std::string to_jsonl(const std::vector<CleanDoc>& docs);
std::vector<CleanDoc> parse_clean_docs(std::string_view jsonl);

std::set<std::string> load_term_set(const std::filesystem::path& path);

} // namespace ctm
