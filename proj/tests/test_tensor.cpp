#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "ham/rng.hpp"
#include "ham/tensor.hpp"

using namespace ham;

namespace {

// Independent two-pass oracle: stats via direct summation over an explicit
// channel-slice decomposition, then the affine map.
struct OracleStats {
    std::vector<double> mean, stddev;
};

OracleStats oracle_stats(const Tensor& x, std::size_t axis) {
    const std::size_t channels = x.shape[axis];
    std::size_t inner = 1;
    for (std::size_t a = axis + 1; a < x.rank(); ++a) inner *= x.shape[a];
    std::vector<std::vector<double>> per_channel(channels);
    for (std::size_t i = 0; i < x.numel(); ++i)
        per_channel[(i / inner) % channels].push_back(x.data[i]);
    OracleStats st;
    for (auto& vals : per_channel) {
        double m = 0;
        for (double v : vals) m += v;
        m /= vals.size();
        double var = 0;
        for (double v : vals) var += (v - m) * (v - m);
        var /= vals.size();
        st.mean.push_back(m);
        st.stddev.push_back(std::sqrt(var));
    }
    return st;
}

} // namespace

TEST_CASE("channel_stats: constant tensor") {
    Tensor x({2, 3, 4});
    std::fill(x.data.begin(), x.data.end(), 3.0f);
    auto st = channel_stats(x, 0);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(st.mean[c] == doctest::Approx(3.0));
        CHECK(st.std[c] == doctest::Approx(0.0));
    }
}

TEST_CASE("channel_stats: single channel hand computation") {
    Tensor x({1, 4}, {1, 2, 3, 4});
    auto st = channel_stats(x, 0);
    CHECK(st.mean[0] == doctest::Approx(2.5));
    CHECK(st.std[0] == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("channel_stats: two channels by symmetry") {
    Tensor x({2, 2}, {0, 0, -1, 1});
    auto st = channel_stats(x, 0);
    CHECK(st.mean[0] == doctest::Approx(0.0));
    CHECK(st.mean[1] == doctest::Approx(0.0));
    CHECK(st.std[0] == doctest::Approx(0.0));
    CHECK(st.std[1] == doctest::Approx(1.0));
}

TEST_CASE("channel_stats: errors") {
    Tensor x({2, 2}, {1, 2, 3, 4});
    CHECK_THROWS_AS(channel_stats(x, 5), ArgumentError);
    Tensor r1({4}, {1, 2, 3, 4});
    CHECK_THROWS_AS(channel_stats(r1, 0), ArgumentError);
}

TEST_CASE("channel_stats matches oracle and is permutation-invariant") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        Tensor x = rng.normal_tensor<float>({3, 5, 4});
        auto st = channel_stats(x, 0);
        auto ref = oracle_stats(x, 0);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(st.mean[c] == doctest::Approx(ref.mean[c]).epsilon(1e-5));
            CHECK(st.std[c] == doctest::Approx(ref.stddev[c]).epsilon(1e-4));
        }
        // shuffle within each channel slice
        Tensor y = x;
        const std::size_t per = 20;
        for (std::size_t c = 0; c < 3; ++c) {
            float* base = &y.data[c * per];
            for (std::size_t i = per - 1; i > 0; --i)
                std::swap(base[i], base[rng.uniform_int(static_cast<std::uint32_t>(i + 1))]);
        }
        auto st2 = channel_stats(y, 0);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(st2.mean[c] == doctest::Approx(st.mean[c]).epsilon(1e-5));
            CHECK(st2.std[c] == doctest::Approx(st.std[c]).epsilon(1e-4));
        }
    }
}

TEST_CASE("adain: identity case") {
    Rng rng(3);
    Tensor x = rng.normal_tensor<float>({2, 6});
    Tensor y = adain(x, x, 0, 1e-6f);
    auto st = channel_stats(x, 0);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < 6; ++j) {
            const float orig = x.at2(c, j);
            const float bound = 1e-6f * std::abs(orig - st.mean[c]) / st.std[c] + 1e-5f;
            CHECK(std::abs(y.at2(c, j) - orig) <= bound);
        }
}

TEST_CASE("adain: affine transport of statistics") {
    Rng rng(11);
    Tensor content = rng.normal_tensor<float>({1, 64});
    Tensor style({1, 64});
    for (std::size_t i = 0; i < 64; ++i)
        style.data[i] = 5.0f + 2.0f * static_cast<float>(rng.normal());
    Tensor out = adain(content, style, 0, 1e-5f);
    auto so = channel_stats(out, 0);
    auto ss = channel_stats(style, 0);
    CHECK(so.mean[0] == doctest::Approx(ss.mean[0]).epsilon(1e-4));
    CHECK(so.std[0] == doctest::Approx(ss.std[0]).epsilon(1e-3));
}

TEST_CASE("adain: 2x2 fixture against two-pass oracle") {
    Tensor content({1, 2, 2}, {0, 1, 2, 3});
    Tensor style({1, 2, 2}, {10, 10, 20, 20});
    const float eps = 1e-5f;
    Tensor out = adain(content, style, 0, eps);

    auto cs = oracle_stats(content, 0);
    auto ss = oracle_stats(style, 0);
    for (std::size_t i = 0; i < 4; ++i) {
        const double expect =
            ss.stddev[0] * (content.data[i] - cs.mean[0]) / (cs.stddev[0] + eps) +
            ss.mean[0];
        CHECK(out.data[i] == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("adain: channel mismatch and bad epsilon") {
    Tensor a({2, 3});
    Tensor b({3, 3});
    CHECK_THROWS_AS(adain(a, b, 0, 1e-5f), ShapeError);
    CHECK_THROWS_AS(adain(a, a, 0, 0.0f), ArgumentError);
}

TEST_CASE("adain: statistics transport and idempotency properties") {
    Rng rng(42);
    for (int rep = 0; rep < 30; ++rep) {
        Tensor c = rng.normal_tensor<float>({3, 24});
        Tensor s = rng.normal_tensor<float>({3, 24}, 2.0);
        const float eps = 1e-5f;
        Tensor out = adain(c, s, 0, eps);
        auto sc = channel_stats(c, 0);
        auto so = channel_stats(out, 0);
        auto ss = channel_stats(s, 0);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            if (sc.std[ch] <= 10 * eps) continue;
            CHECK(std::abs(so.mean[ch] - ss.mean[ch]) < 1e-5);
            CHECK(std::abs(so.std[ch] - ss.std[ch]) <= 1e-4 * std::abs(ss.std[ch]) + 1e-7);
        }
        Tensor again = adain(out, s, 0, eps);
        for (std::size_t i = 0; i < out.numel(); ++i)
            CHECK(std::abs(again.data[i] - out.data[i]) < 1e-4);
    }
}

TEST_CASE("HAMT round trip is bit-exact") {
    Rng rng(5);
    Tensor t = rng.normal_tensor<float>({2, 3, 5});
    const auto path = std::filesystem::temp_directory_path() / "ham_test_tensor.hamt";
    save_hamt(path.string(), t);
    Tensor u = load_hamt(path.string());
    REQUIRE(u.shape == t.shape);
    for (std::size_t i = 0; i < t.numel(); ++i) CHECK(u.data[i] == t.data[i]);
    std::filesystem::remove(path);
}

TEST_CASE("HAMT rejects bad files") {
    const auto path = std::filesystem::temp_directory_path() / "ham_bad.hamt";
    {
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        std::fwrite("NOPE", 1, 4, f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_hamt(path.string()), IoError);
    std::filesystem::remove(path);
}
