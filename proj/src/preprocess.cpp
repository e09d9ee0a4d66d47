#include "ctm/preprocess.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <json.hpp>

#include <sstream>

namespace ctm {

namespace {

// Apostrophe forms are omitted: the tokenizer splits "don't" into "don" and "t",
// both of which are listed.
constexpr std::string_view kStopwords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
    "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers",
    "herself", "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what",
    "which", "who", "whom", "this", "that", "these", "those", "am", "is", "are",
    "was", "were", "be", "been", "being", "have", "has", "had", "having", "do",
    "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about",
    "against", "between", "into", "through", "during", "before", "after", "above", "below", "to",
    "from", "up", "down", "in", "out", "on", "off", "over", "under", "again",
    "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
    "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
    "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s",
    "t", "can", "will", "just", "don", "should", "now", "d", "ll", "m",
    "o", "re", "ve", "y", "ain", "aren", "couldn", "didn", "doesn", "hadn",
    "hasn", "haven", "isn", "ma", "mightn", "mustn", "needn", "shan", "shouldn", "wasn",
    "weren", "won", "wouldn",
};

constexpr std::string_view kExclusions[] = {
    "artificial intelligence", "artificial", "intelligence", "ai", "energy", "sustainable",
    "sustainability",
};

// Decodes one UTF-8 code point starting at text[i]; returns its length in
// bytes, or 0 for a malformed sequence.
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len;
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    } else if ((b0 & 0xE0) == 0xC0) {
        cp = b0 & 0x1F;
        len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
        cp = b0 & 0x0F;
        len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
        cp = b0 & 0x07;
        len = 4;
    } else {
        return 0;
    }
    if (i + len > text.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(text[i + k]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    return len;
}

// Lowercase letter for `cp`, or 0 when `cp` is not a letter we keep.
char32_t lower_letter(char32_t cp) {
    if (cp >= 'a' && cp <= 'z') return cp;
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xFF && cp != 0xD7 && cp != 0xF7) {
        return (cp <= 0xDE && cp != 0xDF) ? cp + 0x20 : cp;
    }
    return 0;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string strip_parenthesized(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    int depth = 0;
    for (char c : raw) {
        if (c == '(') {
            if (depth == 0) out.push_back(' ');
            ++depth;
        } else if (c == ')' && depth > 0) {
            --depth;
        } else if (depth == 0) {
            out.push_back(c);
        }
    }
    return out;
}

} // namespace

const std::set<std::string>& default_stoplist() {
    static const std::set<std::string> words(std::begin(kStopwords), std::end(kStopwords));
    return words;
}

const std::set<std::string>& default_exclusion_list() {
    static const std::set<std::string> words(std::begin(kExclusions), std::end(kExclusions));
    return words;
}

void CleanConfig::validate() const {
    if (ngram_min < 1 || ngram_min > ngram_max || ngram_max > 2) {
        throw ValidationError("ngram range must satisfy 1 <= ngram_min <= ngram_max <= 2");
    }
    for (const auto& term : exclusion_list) {
        for (unsigned char c : term) {
            if (c >= 'A' && c <= 'Z') {
                throw ValidationError("exclusion list entry '" + term + "' is not lowercase");
            }
        }
    }
}

std::vector<std::string> clean_text(std::string_view raw, const CleanConfig& config) {
    const std::string stripped =
        config.strip_parenthesized ? strip_parenthesized(raw) : std::string(raw);
    const std::string_view text = stripped;

    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.empty()) return;
        if (!(config.collapse_repeats && !tokens.empty() && tokens.back() == current)) {
            tokens.push_back(current);
        }
        current.clear();
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = 0;
        std::size_t len = decode_utf8(text, i, cp);
        if (len == 0) {
            flush();
            ++i;
            continue;
        }
        if (char32_t lower = lower_letter(cp)) {
            append_utf8(current, lower);
        } else {
            flush();
        }
        i += len;
    }
    flush();
    return tokens;
}

std::vector<std::string> remove_stop_and_excluded(const std::vector<std::string>& tokens,
                                                  const CleanConfig& config) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        if (config.stoplist.count(tok) || config.exclusion_list.count(tok)) continue;
        out.push_back(tok);
    }
    return out;
}

std::vector<std::string> build_ngrams(const std::vector<std::string>& tokens,
                                      const CleanConfig& config) {
    std::vector<std::string> terms;
    if (config.ngram_min <= 1) terms = tokens;
    if (config.ngram_max >= 2) {
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            if (config.exclusion_list.count(tokens[i] + ' ' + tokens[i + 1])) continue;
            terms.push_back(tokens[i] + '_' + tokens[i + 1]);
        }
    }
    return terms;
}

PreprocessResult preprocess_corpus(const Corpus& corpus, const CleanConfig& config) {
    config.validate();
    PreprocessResult result;
    result.docs.reserve(corpus.size());
    for (const auto& doc : corpus.documents()) {
        auto tokens = remove_stop_and_excluded(clean_text(doc.abstract, config), config);
        CleanDoc clean{doc.id, build_ngrams(tokens, config)};
        if (clean.terms.empty()) result.empty_ids.push_back(doc.id);
        result.docs.push_back(std::move(clean));
    }
    return result;
}

std::string to_jsonl(const std::vector<CleanDoc>& docs) {
    std::string out;
    for (const auto& doc : docs) {
        nlohmann::ordered_json obj;
        obj["id"] = doc.id;
        obj["terms"] = doc.terms;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::vector<CleanDoc> parse_clean_docs(std::string_view jsonl) {
    std::vector<CleanDoc> docs;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            auto obj = nlohmann::json::parse(line);
            docs.push_back({obj.at("id").get<std::string>(),
                            obj.at("terms").get<std::vector<std::string>>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad cleaned document: ") + e.what(), line_no);
        }
    }
    return docs;
}

std::set<std::string> load_term_set(const std::filesystem::path& path) {
    auto terms = read_term_list(path);
    return {terms.begin(), terms.end()};
}

} // namespace ctm
