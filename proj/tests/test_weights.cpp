#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracle.hpp"
#include "pdr/error.hpp"
#include "pdr/weights.hpp"

using namespace pdr;
using doctest::Approx;

namespace {

void check_vec(const std::vector<double>& got, const std::vector<double>& want, double tol = 1e-15) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == Approx(want[i]).epsilon(tol));
    }
}

} // namespace

TEST_CASE("decay families on small examples") {
    check_vec(decay_weights(WeightFamily::linear, 1.0, 3), {1.0, 0.5, 0.0});
    check_vec(decay_weights(WeightFamily::linear, 0.0, 5), {1, 1, 1, 1, 1});
    check_vec(decay_weights(WeightFamily::polynomial, 2.0, 3), {1.0, 0.25, 0.0});
    check_vec(decay_weights(WeightFamily::exponential, 0.02, 2), {1.0, std::exp(-0.02)});
    check_vec(decay_weights(WeightFamily::linear, 1.0, 1), {1.0});
    check_vec(decay_weights(WeightFamily::polynomial, 0.1, 1), {1.0});
    check_vec(decay_weights(WeightFamily::constant, 123.0, 4), {1, 1, 1, 1});
}

TEST_CASE("decay parameter ranges") {
    CHECK_THROWS_AS(decay_weights(WeightFamily::linear, 1.5, 4), ValidationError);
    CHECK_THROWS_AS(decay_weights(WeightFamily::linear, -0.1, 4), ValidationError);
    CHECK_THROWS_AS(decay_weights(WeightFamily::exponential, -0.1, 4), ValidationError);
    CHECK_THROWS_AS(decay_weights(WeightFamily::polynomial, 0.0, 4), ValidationError);
    CHECK_THROWS_AS(decay_weights(WeightFamily::linear, NAN, 4), ValidationError);
    CHECK_THROWS_AS(decay_weights(WeightFamily::linear, 0.5, 0), ValidationError);
    CHECK_NOTHROW(decay_weights(WeightFamily::linear, 0.0, 4));
    CHECK_NOTHROW(decay_weights(WeightFamily::linear, 1.0, 4));
    CHECK_NOTHROW(decay_weights(WeightFamily::exponential, 0.0, 4));
}

TEST_CASE("decay families match direct formula evaluation, start at 1 and decrease") {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<std::size_t> len(1, 512);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = len(gen);
        const double a_lin = u(gen);
        const double a_exp = 0.1 * u(gen);
        const double a_poly = 0.05 + 4.0 * u(gen);
        const auto lin = decay_weights(WeightFamily::linear, a_lin, n);
        const auto ex = decay_weights(WeightFamily::exponential, a_exp, n);
        const auto po = decay_weights(WeightFamily::polynomial, a_poly, n);
        check_vec(lin, oracle::linear(a_lin, n), 1e-12);
        check_vec(ex, oracle::exponential(a_exp, n), 1e-12);
        check_vec(po, oracle::polynomial(a_poly, n), 1e-12);
        for (const auto* w : {&lin, &ex, &po}) {
            CHECK((*w)[0] == 1.0);
            for (std::size_t i = 1; i < n; ++i) {
                REQUIRE((*w)[i] < (*w)[i - 1]);
            }
        }
    }
}

TEST_CASE("orderings") {
    const std::vector<double> w{1.0, 0.5, 0.0};
    CHECK(apply_ordering(w, Ordering::reverse, 0, "x") == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(apply_ordering(w, Ordering::forward, 0, "x") == w);
    CHECK(apply_ordering(w, Ordering::random, 7, "s1") == apply_ordering(w, Ordering::random, 7, "s1"));

    SUBCASE("every ordering preserves the multiset") {
        const auto base = decay_weights(WeightFamily::linear, 1.0, 97);
        auto sorted_base = base;
        std::sort(sorted_base.begin(), sorted_base.end());
        for (const auto o : {Ordering::forward, Ordering::reverse, Ordering::random}) {
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                auto got = apply_ordering(base, o, seed, "id" + std::to_string(seed));
                std::sort(got.begin(), got.end());
                CHECK(got == sorted_base);
            }
        }
    }
    SUBCASE("random permutations depend on seed and sample id") {
        const auto base = decay_weights(WeightFamily::linear, 1.0, 64);
        const auto a = apply_ordering(base, Ordering::random, 7, "s1");
        CHECK(a != base);
        CHECK(a != apply_ordering(base, Ordering::random, 7, "s2"));
        CHECK(a != apply_ordering(base, Ordering::random, 8, "s1"));
    }
}

TEST_CASE("loss slope") {
    CHECK(camia_slope(std::vector<double>{3, 2, 1}) == Approx(-1.0).epsilon(1e-15));
    CHECK(camia_slope(std::vector<double>{5, 5, 5}) == 0.0);
    CHECK(camia_slope(std::vector<double>{1, 2, 3, 4}) == Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(camia_slope(std::vector<double>{1.0}), ValidationError);
    CHECK_THROWS_AS(camia_slope(std::vector<double>{}), ValidationError);

    SUBCASE("recovers the slope of affine ramps") {
        std::mt19937_64 gen(99);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        std::uniform_int_distribution<std::size_t> len(2, 512);
        for (int trial = 0; trial < 500; ++trial) {
            const double a = u(gen);
            const double b = u(gen);
            const std::size_t n = len(gen);
            std::vector<double> l(n);
            for (std::size_t i = 0; i < n; ++i) {
                l[i] = a + b * double(i + 1);
            }
            REQUIRE(std::abs(camia_slope(l) - b) < 1e-9);
        }
    }
    SUBCASE("matches the normal-equation form on noisy data") {
        std::mt19937_64 gen(1);
        std::normal_distribution<double> g(0.0, 2.0);
        for (std::size_t n = 2; n < 200; n += 7) {
            std::vector<double> l(n);
            for (auto& v : l) v = g(gen);
            CHECK(camia_slope(l) == Approx(oracle::slope(l)).epsilon(1e-9));
        }
    }
}

TEST_CASE("sample entropy weights") {
    check_vec(entropy_weights_sample(std::vector<double>{4, 2, 1}), {1.0, 0.5, 0.25});
    check_vec(entropy_weights_sample(std::vector<double>{3, 3, 3}), {1, 1, 1});
    CHECK_THROWS_AS(entropy_weights_sample(std::vector<double>{0, 0}), ValidationError);
    CHECK_THROWS_AS(entropy_weights_sample(std::vector<double>{}), ValidationError);
}

TEST_CASE("dataset entropy weights") {
    auto rec = [](std::vector<double> h) {
        SequenceRecord r;
        r.id = "x";
        r.logp.assign(h.size(), -1.0);
        r.entropy = std::move(h);
        return r;
    };
    check_vec(entropy_weights_dataset({rec({1, 2}), rec({3, 4})}, 2), {2.0 / 3.0, 1.0});
    check_vec(entropy_weights_dataset({rec({5, 5})}, 2), {1, 1});
    // position 3 averages only the length-3 record: means [2, 3, 9] -> /9
    check_vec(entropy_weights_dataset({rec({1, 2}), rec({3, 4, 9})}, 3), {2.0 / 9.0, 3.0 / 9.0, 1.0});

    SequenceRecord bare;
    bare.id = "b";
    bare.logp = {-1.0};
    CHECK_THROWS_AS(entropy_weights_dataset({bare}, 1), ValidationError);
    CHECK_THROWS_AS(entropy_weights_dataset({}, 1), ValidationError);
}

TEST_CASE("truncation prefix") {
    CHECK(truncation_prefix(1.0, 128) == 128);
    CHECK(truncation_prefix(0.5, 7) == 4);
    CHECK(truncation_prefix(0.01, 3) == 1);
    for (std::size_t n = 1; n < 600; ++n) {
        REQUIRE(truncation_prefix(1.0, n) == n);
    }
    CHECK_THROWS_AS(truncation_prefix(0.0, 3), ValidationError);
    CHECK_THROWS_AS(truncation_prefix(1.01, 3), ValidationError);
    CHECK_THROWS_AS(truncation_prefix(-0.5, 3), ValidationError);
}

TEST_CASE("build_weights") {
    SequenceRecord r;
    r.id = "s";
    r.logp = {-1.0, -2.0, -3.0};
    r.entropy = std::vector<double>{4, 2, 1};

    CHECK(build_weights({.family = WeightFamily::constant, .ordering = Ordering::reverse}, r) ==
          std::vector<double>{1, 1, 1});
    check_vec(build_weights({.family = WeightFamily::linear, .alpha = 1.0, .ordering = Ordering::reverse}, r),
              {0.0, 0.5, 1.0});
    check_vec(build_weights({.family = WeightFamily::entropy_sample}, r), {1.0, 0.5, 0.25});
    const std::vector<double> profile{0.9, 0.6, 0.3, 0.1};
    check_vec(build_weights({.family = WeightFamily::entropy_dataset}, r, profile), {0.9, 0.6, 0.3});
    CHECK_THROWS_AS(build_weights({.family = WeightFamily::entropy_dataset}, r, std::vector<double>{1.0}),
                    ValidationError);

    SUBCASE("slope-derived alpha is applied unclamped") {
        // losses 1,2,3 -> slope +1 -> ordinary LPDR alpha = 1
        check_vec(build_weights({.family = WeightFamily::linear, .alpha = 0.0, .alpha_from_slope = true}, r),
                  {1.0, 0.5, 0.0});
        // losses 3,2,1 -> slope -1 -> increasing weights 1, 1.5, 2
        SequenceRecord falling = r;
        falling.logp = {-3.0, -2.0, -1.0};
        check_vec(build_weights({.family = WeightFamily::linear, .alpha_from_slope = true}, falling), {1.0, 1.5, 2.0});
        SequenceRecord single = r;
        single.logp = {-1.0};
        single.entropy.reset();
        CHECK(build_weights({.family = WeightFamily::linear, .alpha_from_slope = true}, single) ==
              std::vector<double>{1.0});
        CHECK_THROWS_AS(build_weights({.family = WeightFamily::exponential, .alpha_from_slope = true}, r),
                        ValidationError);
    }
    SUBCASE("entropy_sample without entropy") {
        SequenceRecord bare = r;
        bare.entropy.reset();
        CHECK_THROWS_AS(build_weights({.family = WeightFamily::entropy_sample}, bare), ValidationError);
    }
}

TEST_CASE("name parsing") {
    CHECK(parse_weight_family("polynomial") == WeightFamily::polynomial);
    CHECK(parse_ordering("reverse") == Ordering::reverse);
    CHECK_THROWS_AS(parse_weight_family("cubic"), UsageError);
    CHECK_THROWS_AS(parse_ordering("sideways"), UsageError);
}
