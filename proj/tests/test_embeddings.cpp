#include "ctm/embeddings.hpp"
#include "ctm/error.hpp"
#include "ctm/util.hpp"
#include "support.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>

using namespace ctm;

namespace {

// Hand-assembled little-endian record stream.
struct Bytes {
    std::string data;
    void u16(std::uint16_t v) {
        data += static_cast<char>(v & 0xff);
        data += static_cast<char>(v >> 8);
    }
    void u32(std::uint32_t v) {
        for (int s = 0; s < 32; s += 8) data += static_cast<char>((v >> s) & 0xff);
    }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    void text(const std::string& s) { data += s; }
};

std::string hand_file(const std::vector<std::pair<std::string, std::vector<float>>>& rows, std::uint32_t dim) {
    Bytes b;
    b.text("CTME");
    b.u16(1);
    b.u32(static_cast<std::uint32_t>(rows.size()));
    b.u32(dim);
    for (const auto& [id, v] : rows) {
        b.u16(static_cast<std::uint16_t>(id.size()));
        b.text(id);
        for (float f : v) b.f32(f);
    }
    return b.data;
}

EmbeddingMatrix two_by_three() {
    EmbeddingMatrix m;
    m.ids = {"a", "b"};
    m.vectors.resize(2, 3);
    m.vectors << 0.5, -1.25, 3.0, 0.0, 2.0, -0.125;
    return m;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

} // namespace

TEST_CASE("binary layout matches the hand-assembled bytes") {
    const std::string expected = hand_file({{"a", {0.5f, -1.25f, 3.0f}}, {"b", {0.0f, 2.0f, -0.125f}}}, 3);
    CHECK(encode_ctme(two_by_three()) == expected);
}

TEST_CASE("round trip through the file") {
    testing::ScratchDir dir("emb_roundtrip");
    const EmbeddingMatrix m = two_by_three();
    save_embeddings(m, dir / "e.ctme");
    const EmbeddingMatrix back = load_embeddings(dir / "e.ctme", std::vector<std::string>{"a", "b"});
    CHECK(back.ids == m.ids);
    CHECK(back.vectors == m.vectors);
    CHECK(back.dim() == 3);
    CHECK(back.provider_tag == "ctme:v1");
    save_embeddings(back, dir / "again.ctme");
    CHECK(read_file(dir / "again.ctme") == read_file(dir / "e.ctme"));
}

TEST_CASE("rows are reordered to corpus order") {
    testing::ScratchDir dir("emb_order");
    write_file(dir / "e.ctme", hand_file({{"b", {1, 2}}, {"a", {3, 4}}}, 2));
    const Corpus corpus({{"a", "", "x", 2000}, {"b", "", "y", 2001}});
    const EmbeddingMatrix m = load_embeddings(dir / "e.ctme", corpus);
    CHECK(m.ids == std::vector<std::string>{"a", "b"});
    CHECK(m.vectors(0, 0) == 3.0);
    CHECK(m.vectors(1, 1) == 2.0);
}

TEST_CASE("validation errors") {
    testing::ScratchDir dir("emb_errors");
    const std::vector<std::string> ids{"a", "b"};

    // header says 4 but the single row carries 3 values
    std::string truncated = hand_file({{"a", {1, 2, 3}}}, 4);
    write_file(dir / "short.ctme", truncated);
    try {
        load_embeddings(dir / "short.ctme", std::vector<std::string>{"a"});
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("dim mismatch") != std::string::npos);
    }

    write_file(dir / "missing.ctme", hand_file({{"a", {1}}, {"b", {2}}}, 1));
    try {
        load_embeddings(dir / "missing.ctme", std::vector<std::string>{"a", "b", "z"});
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("'z'") != std::string::npos);
    }
    CHECK_THROWS_AS(load_embeddings(dir / "missing.ctme", std::vector<std::string>{"a"}), ValidationError);

    std::string bad_magic = hand_file({{"a", {1}}}, 1);
    bad_magic[0] = 'X';
    write_file(dir / "magic.ctme", bad_magic);
    CHECK_THROWS_AS(load_embeddings(dir / "magic.ctme", std::vector<std::string>{"a"}), ParseError);

    std::string bad_version = hand_file({{"a", {1}}}, 1);
    bad_version[4] = 2;
    write_file(dir / "version.ctme", bad_version);
    CHECK_THROWS_AS(load_embeddings(dir / "version.ctme", std::vector<std::string>{"a"}), ParseError);

    write_file(dir / "nan.ctme", hand_file({{"a", {std::nanf("")}}}, 1));
    CHECK_THROWS_AS(load_embeddings(dir / "nan.ctme", std::vector<std::string>{"a"}), ValidationError);

    write_file(dir / "dup.ctme", hand_file({{"a", {1}}, {"a", {2}}}, 1));
    CHECK_THROWS_AS(load_embeddings(dir / "dup.ctme", std::vector<std::string>{"a"}), Error);
    (void)ids;
}

TEST_CASE("jsonl embeddings") {
    testing::ScratchDir dir("emb_jsonl");
    write_file(dir / "e.jsonl", "{\"id\":\"b\",\"vector\":[1.5,2]}\n{\"id\":\"a\",\"vector\":[3,4]}\n");
    const EmbeddingMatrix m = load_embeddings(dir / "e.jsonl", std::vector<std::string>{"a", "b"});
    CHECK(m.vectors(1, 0) == 1.5);
    CHECK(m.provider_tag == "jsonl");
    write_file(dir / "ragged.jsonl", "{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[3]}\n");
    CHECK_THROWS_AS(load_embeddings(dir / "ragged.jsonl", std::vector<std::string>{"a", "b"}), ParseError);
}

TEST_CASE("hash embedder basics") {
    const std::vector<CleanDoc> docs{{"a", {"solar", "panel", "solar_panel"}}, {"b", {"wind"}}, {"c", {}}};
    std::vector<std::string> empty;
    const EmbeddingMatrix m1 = hash_embed(docs, 64, 5, &empty);
    const EmbeddingMatrix m2 = hash_embed(docs, 64, 5);
    CHECK(m1.vectors == m2.vectors);
    CHECK(std::abs(m1.vectors.row(0).norm() - 1.0) <= 1e-9);
    CHECK(std::abs(m1.vectors.row(1).norm() - 1.0) <= 1e-9);
    CHECK(m1.vectors.row(2).norm() == 0.0);
    CHECK(empty == std::vector<std::string>{"c"});
    CHECK(m1.ids == std::vector<std::string>{"a", "b", "c"});

    // bigrams are ignored, repeated unigrams count twice
    const Eigen::VectorXd solar = hash_term_vector("solar", 64, 5), panel = hash_term_vector("panel", 64, 5);
    const Eigen::VectorXd expect = (solar + panel).normalized();
    CHECK((m1.vectors.row(0).transpose() - expect).norm() <= 1e-12);
    const EmbeddingMatrix twice = hash_embed({{"x", {"solar", "solar", "panel"}}}, 64, 5);
    CHECK((twice.vectors.row(0).transpose() - (2 * solar + panel).normalized()).norm() <= 1e-12);
    CHECK(std::abs(solar.norm() - 1.0) <= 1e-12);
    CHECK_THROWS_AS(hash_embed(docs, 0, 5), ValidationError);
}

TEST_CASE("disjoint documents are nearly orthogonal") {
    std::mt19937_64 rng(77);
    int ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> a, b;
        for (int i = 0; i < 10; ++i) {
            a.push_back("left" + std::to_string(i));
            b.push_back("right" + std::to_string(i));
        }
        const EmbeddingMatrix m = hash_embed({{"a", a}, {"b", b}}, 256, rng());
        if (std::abs(cosine(m.vectors.row(0), m.vectors.row(1))) < 0.5) ++ok;
    }
    CHECK(ok >= 99);
}

TEST_CASE("more shared terms means more similar") {
    std::mt19937_64 rng(78);
    int ok = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<std::string> a, b, c;
        for (int i = 0; i < 10; ++i) a.push_back("w" + std::to_string(i));
        // b shares 7 terms with a, c shares 3; all three have 10 terms
        for (int i = 0; i < 10; ++i) b.push_back(i < 7 ? a[static_cast<std::size_t>(i)] : "b" + std::to_string(i));
        for (int i = 0; i < 10; ++i) c.push_back(i < 3 ? a[static_cast<std::size_t>(i)] : "c" + std::to_string(i));
        const EmbeddingMatrix m = hash_embed({{"a", a}, {"b", b}, {"c", c}}, 128, rng());
        if (cosine(m.vectors.row(0), m.vectors.row(1)) > cosine(m.vectors.row(0), m.vectors.row(2))) ++ok;
    }
    CHECK(ok >= trials * 95 / 100);
}
