#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <string>

#include <zlib.h>

#include "oracle.hpp"
#include "pdr/error.hpp"
#include "pdr/records.hpp"

using namespace pdr;

namespace {

std::string gzip(const std::string& data) {
    z_stream zs{};
    REQUIRE(deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) == Z_OK);
    std::string out(deflateBound(&zs, data.size()) + 32, '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    REQUIRE(deflate(&zs, Z_FINISH) == Z_STREAM_END);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

std::string error_of(const std::string& text) {
    try {
        parse_records(std::string_view(text));
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("minimal record parses") {
    const auto rs = parse_records(std::string_view(R"({"id":"a","label":true,"logp":[-1.0,-2.0]})"));
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].id == "a");
    CHECK(rs[0].label);
    CHECK(rs[0].length() == 2);
    CHECK(rs[0].logp == std::vector<double>{-1.0, -2.0});
    CHECK_FALSE(rs[0].mu.has_value());
}

TEST_CASE("invariant violations are rejected at parse time") {
    CHECK(error_of(R"({"id":"a","label":true,"logp":[-1.0],"sigma":[-0.5]})").find("sigma must be >= 0") !=
          std::string::npos);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[-1,-2,-3],"mu":[-1,-2]})").find("length mismatch") !=
          std::string::npos);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[0.5]})").find("logp must be <= 0") != std::string::npos);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[-1e999]})").rfind("line 1: malformed JSON", 0) == 0);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[NaN]})").rfind("line 1: malformed JSON", 0) == 0);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[-1],"entropy":[-0.1]})").find("entropy") != std::string::npos);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[-1],"zlib_len":0})").find("zlib_len") != std::string::npos);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[-1],"byte_len":0})").find("byte_len") != std::string::npos);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[]})").find("logp") != std::string::npos);
    CHECK(error_of(R"({"id":"","label":true,"logp":[-1]})").find("id") != std::string::npos);
    CHECK(error_of(R"({"id":"a","logp":[-1]})").find("label") != std::string::npos);
    CHECK(error_of(R"({"id":"a","label":1,"logp":[-1]})").find("label") != std::string::npos);
    CHECK(error_of(R"({"id":"a","label":true})").find("logp is required") != std::string::npos);
    CHECK(error_of(R"({"id":"a","label":true,"logp":[-1],"mean_logp_lower":0.2})").find("mean_logp_lower") !=
          std::string::npos);
}

TEST_CASE("non-finite values fail validation") {
    SequenceRecord r{.id = "a", .logp = {-1.0, std::nan("")}};
    CHECK_THROWS_WITH_AS(validate(r), "logp[1] is not finite", ValidationError);
    r.logp = {-1.0};
    r.mu = std::vector<double>{-INFINITY};
    CHECK_THROWS_WITH_AS(validate(r), "mu[0] is not finite", ValidationError);
    std::ostringstream out;
    CHECK_THROWS_AS(write_records(out, {r}), ValidationError);
}

TEST_CASE("errors name the offending line") {
    const std::string text = "{\"id\":\"a\",\"label\":true,\"logp\":[-1]}\n"
                             "\n"
                             "{\"id\":\"b\",\"label\":false,\"logp\":[-1,\n";
    const auto msg = error_of(text);
    CHECK(msg.rfind("line 3:", 0) == 0);
}

TEST_CASE("unknown passthrough fields are ignored and order is preserved") {
    const std::string text = "{\"id\":\"z\",\"label\":false,\"logp\":[-3],\"text\":\"hello\"}\n"
                             "{\"id\":\"a\",\"label\":true,\"logp\":[-1],\"token_ids\":[1,2]}\n";
    const auto rs = parse_records(std::string_view(text));
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].id == "z");
    CHECK(rs[1].id == "a");
}

TEST_CASE("gzip transport is detected by magic bytes") {
    const std::string text = "{\"id\":\"a\",\"label\":true,\"logp\":[-1.5,-0.25]}\n";
    std::istringstream in(gzip(text));
    const auto rs = parse_records(in);
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].logp[1] == -0.25);
    CHECK_THROWS_AS(maybe_gunzip(std::string("\x1f\x8b\x08garbage", 10)), ValidationError);
}

TEST_CASE("corpus round-trip is the identity on every field") {
    std::mt19937_64 gen(11);
    std::vector<SequenceRecord> corpus;
    for (std::size_t i = 0; i < 200; ++i) {
        auto r = oracle::random_record(gen, i, 64);
        if (i % 3 == 0) {
            r.source = "wiki";
            r.logp_ref.reset();
        }
        corpus.push_back(std::move(r));
    }
    std::ostringstream out;
    write_records(out, corpus);
    std::istringstream in(out.str());
    CHECK(parse_records(in) == corpus);
}

TEST_CASE("write_scores") {
    SUBCASE("empty input gives empty stream") {
        std::ostringstream out;
        write_scores(out, {});
        CHECK(out.str().empty());
    }
    SUBCASE("single sample round-trips") {
        std::ostringstream out;
        write_scores(out, {{"a", true, 0.5}});
        CHECK(out.str() == "{\"id\":\"a\",\"label\":true,\"score\":0.5}\n");
        CHECK(parse_scores(std::string_view(out.str())) == std::vector<ScoredSample>{{"a", true, 0.5}});
    }
    SUBCASE("non-finite score is an error") {
        std::ostringstream out;
        CHECK_THROWS_AS(write_scores(out, {{"a", true, std::nan("")}}), ValidationError);
        CHECK_THROWS_AS(write_scores(out, {{"a", true, INFINITY}}), ValidationError);
    }
    SUBCASE("1000 random samples round-trip bit-exactly") {
        std::mt19937_64 gen(2024);
        std::uniform_real_distribution<double> u(-1e6, 1e6);
        std::uniform_int_distribution<int> e(-300, 300);
        std::vector<ScoredSample> xs;
        for (int i = 0; i < 1000; ++i) {
            xs.push_back({"s" + std::to_string(i), (i % 2) == 0, std::ldexp(u(gen), e(gen) / 4)});
        }
        xs.push_back({"tiny", false, 4.9406564584124654e-324});
        xs.push_back({"neg-zero", true, -0.0});
        std::ostringstream out;
        write_scores(out, xs);
        const auto back = parse_scores(std::string_view(out.str()));
        REQUIRE(back.size() == xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            CHECK(back[i].id == xs[i].id);
            CHECK(back[i].label == xs[i].label);
            CHECK(std::memcmp(&back[i].score, &xs[i].score, sizeof(double)) == 0);
        }
    }
}

TEST_CASE("score file errors") {
    CHECK_THROWS_AS(parse_scores(std::string_view(R"({"id":"a","label":true})")), ValidationError);
    CHECK_THROWS_AS(parse_scores(std::string_view(R"({"id":"a","label":true,"score":"x"})")), ValidationError);
    CHECK_THROWS_AS(parse_scores(std::string_view("not json")), ValidationError);
}

TEST_CASE("truncated keeps a prefix of every per-token field") {
    std::mt19937_64 gen(3);
    auto r = oracle::random_record(gen, 0, 50);
    r.logp.resize(10);
    for (auto* f : {&r.logp_ref, &r.mu, &r.sigma, &r.entropy}) {
        (*f)->resize(10);
    }
    const auto cut = truncated(r, 4);
    CHECK(cut.length() == 4);
    CHECK(cut.mu->size() == 4);
    CHECK((*cut.entropy)[3] == (*r.entropy)[3]);
    CHECK(cut.zlib_len == r.zlib_len);
    CHECK(truncated(r, 10) == r);
}
