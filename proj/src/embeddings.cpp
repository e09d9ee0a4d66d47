#include "ctm/embeddings.hpp"

#include "ctm/error.hpp"
#include "ctm/util.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_map>

namespace ctm {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
    }
}

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    std::string_view take(std::size_t n) {
        need(n);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool at_end() const noexcept { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw ParseError("embedding file is truncated (record sizes disagree with the header: dim mismatch)", 0);
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

EmbeddingMatrix decode_ctme(std::string_view bytes) {
    ByteReader in(bytes);
    if (in.take(4) != std::string_view(kCtmeMagic, 4)) throw ParseError("unknown embedding file magic", 0);
    const auto version = in.get<std::uint16_t>();
    if (version != kCtmeVersion) {
        throw ParseError("unsupported embedding file version " + std::to_string(version), 0);
    }
    const auto count = in.get<std::uint32_t>();
    const auto dim = in.get<std::uint32_t>();
    if (dim < 1) throw ParseError("embedding dim must be >= 1", 0);

    EmbeddingMatrix m;
    m.provider_tag = "ctme:v1";
    m.vectors.resize(count, dim);
    for (std::uint32_t r = 0; r < count; ++r) {
        const auto id_len = in.get<std::uint16_t>();
        m.ids.emplace_back(in.take(id_len));
        for (std::uint32_t c = 0; c < dim; ++c) {
            m.vectors(r, c) = static_cast<double>(std::bit_cast<float>(in.get<std::uint32_t>()));
        }
    }
    if (!in.at_end()) throw ParseError("trailing bytes after the last embedding record (dim mismatch with the header)", 0);
    return m;
}

EmbeddingMatrix decode_jsonl(std::string_view text) {
    EmbeddingMatrix m;
    m.provider_tag = "jsonl";
    std::vector<std::vector<double>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
            m.ids.push_back(obj.at("id").get<std::string>());
            rows.push_back(obj.at("vector").get<std::vector<double>>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad embedding record: ") + e.what(), line_no);
        }
        if (rows.back().empty()) throw ParseError("embedding dim must be >= 1", line_no);
        if (rows.back().size() != rows.front().size()) {
            throw ParseError("dim mismatch: expected " + std::to_string(rows.front().size()) +
                                 " values, got " + std::to_string(rows.back().size()),
                             line_no);
        }
    }
    const std::size_t dim = rows.empty() ? 0 : rows.front().size();
    m.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            m.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

} // namespace

std::string encode_ctme(const EmbeddingMatrix& matrix) {
    std::string out(kCtmeMagic, 4);
    put_le<std::uint16_t>(out, kCtmeVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.vectors.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.vectors.cols()));
    for (Eigen::Index r = 0; r < matrix.vectors.rows(); ++r) {
        const auto& id = matrix.ids[static_cast<std::size_t>(r)];
        if (id.size() > 0xFFFF) throw ValidationError("document id too long for the embedding format");
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
        out += id;
        for (Eigen::Index c = 0; c < matrix.vectors.cols(); ++c) {
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(matrix.vectors(r, c))));
        }
    }
    return out;
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    write_file(path, encode_ctme(matrix));
}

EmbeddingMatrix decode_embeddings(std::string_view bytes) {
    if (bytes.size() >= 4 && bytes.substr(0, 4) == std::string_view(kCtmeMagic, 4)) {
        return decode_ctme(bytes);
    }
    const std::string head = trim(bytes.substr(0, 64));
    if (!head.empty() && head.front() == '{') return decode_jsonl(bytes);
    throw ParseError("unknown embedding file magic", 0);
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const std::vector<std::string>& ids) {
    EmbeddingMatrix raw = decode_embeddings(read_file(path));

    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < raw.ids.size(); ++r) {
        if (!row_of.emplace(raw.ids[r], r).second) {
            throw ValidationError("embedding file repeats id '" + raw.ids[r] + "'");
        }
    }
    std::unordered_map<std::string, std::size_t> wanted;
    for (std::size_t i = 0; i < ids.size(); ++i) wanted.emplace(ids[i], i);
    for (const auto& id : raw.ids) {
        if (!wanted.count(id)) throw ValidationError("embedding file has unknown id '" + id + "'");
    }

    EmbeddingMatrix out;
    out.provider_tag = raw.provider_tag;
    out.ids = ids;
    out.vectors.resize(static_cast<Eigen::Index>(ids.size()), raw.vectors.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = row_of.find(ids[i]);
        if (it == row_of.end()) throw ValidationError("embedding file is missing id '" + ids[i] + "'");
        out.vectors.row(static_cast<Eigen::Index>(i)) = raw.vectors.row(static_cast<Eigen::Index>(it->second));
    }
    if (!out.vectors.allFinite()) throw ValidationError("embedding file contains non-finite values");
    return out;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Corpus& corpus) {
    return load_embeddings(path, corpus.ids());
}

Eigen::VectorXd hash_term_vector(const std::string& term, std::size_t dim, std::uint64_t seed) {
    Rng rng(mix64(fnv1a64(term) ^ mix64(seed)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (auto& x : v) x = gauss(rng);
    const double norm = v.norm();
    return norm > 0.0 ? Eigen::VectorXd(v / norm) : v;
}

EmbeddingMatrix hash_embed(const std::vector<CleanDoc>& docs, std::size_t dim, std::uint64_t seed,
                           std::vector<std::string>* empty_ids) {
    if (dim < 1) throw ValidationError("hash_embed: dim must be >= 1");
    EmbeddingMatrix m;
    m.provider_tag = "hash:dim=" + std::to_string(dim) + ",seed=" + std::to_string(seed);
    m.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(dim));

    std::unordered_map<std::string, Eigen::VectorXd> cache;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        m.ids.push_back(docs[d].id);
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        bool any = false;
        for (const auto& term : docs[d].terms) {
            if (is_bigram(term)) continue;
            auto it = cache.find(term);
            if (it == cache.end()) it = cache.emplace(term, hash_term_vector(term, dim, seed)).first;
            sum += it->second;
            any = true;
        }
        const double norm = sum.norm();
        if (!any || norm == 0.0) {
            spdlog::warn("hash_embed: document '{}' has no unigrams; using the zero vector", docs[d].id);
            if (empty_ids) empty_ids->push_back(docs[d].id);
            continue;
        }
        m.vectors.row(static_cast<Eigen::Index>(d)) = sum / norm;
    }
    return m;
}

EmbeddingMatrix hash_embed(const Corpus& corpus, const CleanConfig& config, std::size_t dim,
                           std::uint64_t seed, std::vector<std::string>* empty_ids) {
    return hash_embed(preprocess_corpus(corpus, config).docs, dim, seed, empty_ids);
}

} // namespace ctm
