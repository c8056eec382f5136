#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ham/modulation.hpp"
#include "ham/rng.hpp"

using namespace ham;

namespace {

AttentionProjections random_proj(Rng& rng, std::size_t tokens = 4, std::size_t dim = 2,
                                 double stddev = 1.0) {
    AttentionProjections p;
    p.q = rng.normal_tensor<float>({tokens, dim}, stddev);
    p.k = rng.normal_tensor<float>({tokens, dim}, stddev);
    p.v = rng.normal_tensor<float>({tokens, dim}, stddev);
    return p;
}

} // namespace

TEST_CASE("gar_fuse: style == content is near-identity") {
    Rng rng(1);
    auto p = random_proj(rng);
    auto out = gar_fuse(p, p, 1e-6f);
    for (std::size_t i = 0; i < p.q.numel(); ++i) {
        CHECK(out.q.data[i] == doctest::Approx(p.q.data[i]).epsilon(1e-4));
        CHECK(out.k.data[i] == doctest::Approx(p.k.data[i]).epsilon(1e-4));
        CHECK(out.v.data[i] == doctest::Approx(p.v.data[i]).epsilon(1e-4));
    }
}

TEST_CASE("gar_fuse: zero-mean unit-std style standardizes the content") {
    Rng rng(2);
    auto content = random_proj(rng, 64, 2, 3.0);
    // style with per-feature mean 0, std 1: alternating +1/-1 columns
    AttentionProjections style;
    auto pm = [](std::size_t tokens, std::size_t dim) {
        Tensor t({tokens, dim});
        for (std::size_t i = 0; i < tokens; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                t.at2(i, j) = (i % 2 == 0) ? 1.0f : -1.0f;
        return t;
    };
    style.q = pm(64, 2);
    style.k = pm(64, 2);
    style.v = pm(64, 2);
    const float eps = 1e-7f;
    auto out = gar_fuse(content, style, eps);
    auto cs = channel_stats(content.q, 1);
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const double expect =
                (content.q.at2(i, j) - cs.mean[j]) / (cs.std[j] + eps);
            CHECK(out.q.at2(i, j) == doctest::Approx(expect).epsilon(1e-4));
        }
}

TEST_CASE("gar_fuse: equals composing adain on q, k, v separately") {
    Rng rng(3);
    auto c = random_proj(rng);
    auto s = random_proj(rng, 4, 2, 2.0);
    const float eps = 1e-5f;
    auto fused = gar_fuse(c, s, eps);
    Tensor q = adain(c.q, s.q, 1, eps);
    Tensor k = adain(c.k, s.k, 1, eps);
    Tensor v = adain(c.v, s.v, 1, eps);
    for (std::size_t i = 0; i < q.numel(); ++i) {
        CHECK(fused.q.data[i] == q.data[i]);
        CHECK(fused.k.data[i] == k.data[i]);
        CHECK(fused.v.data[i] == v.data[i]);
    }
}

TEST_CASE("gar_fuse: statistics transport onto the style projections") {
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        auto c = random_proj(rng, 16, 4);
        auto s = random_proj(rng, 16, 4, 2.0);
        const float eps = 1e-5f;
        auto fused = gar_fuse(c, s, eps);
        auto check_stats = [&](const Tensor& fused_t, const Tensor& style_t,
                               const Tensor& content_t) {
            auto sf = channel_stats(fused_t, 1);
            auto ss = channel_stats(style_t, 1);
            auto sc = channel_stats(content_t, 1);
            for (std::size_t ch = 0; ch < 4; ++ch) {
                if (sc.std[ch] <= 10 * eps) continue;
                CHECK(std::abs(sf.mean[ch] - ss.mean[ch]) < 1e-5);
                CHECK(std::abs(sf.std[ch] - ss.std[ch]) <=
                      1e-4 * std::abs(ss.std[ch]) + 1e-7);
            }
        };
        check_stats(fused.q, s.q, c.q);
        check_stats(fused.k, s.k, c.k);
        check_stats(fused.v, s.v, c.v);
    }
}

TEST_CASE("gar_blend: boundary identities are bitwise") {
    Rng rng(5);
    auto student = random_proj(rng);
    auto fused = random_proj(rng);
    auto a1 = gar_blend(student, fused, 1.0f);
    auto a0 = gar_blend(student, fused, 0.0f);
    for (std::size_t i = 0; i < student.q.numel(); ++i) {
        CHECK(a1.q.data[i] == student.q.data[i]);
        CHECK(a1.k.data[i] == student.k.data[i]);
        CHECK(a1.v.data[i] == student.v.data[i]);
        CHECK(a0.q.data[i] == fused.q.data[i]);
    }
}

TEST_CASE("gar_blend: scalar case at the default alpha") {
    AttentionProjections ones, zeros;
    ones.q = Tensor({2, 2}, {1, 1, 1, 1});
    ones.k = ones.q;
    ones.v = ones.q;
    zeros.q = Tensor({2, 2});
    zeros.k = zeros.q;
    zeros.v = zeros.q;
    auto out = gar_blend(ones, zeros, 0.75f);
    for (float v : out.q.data) CHECK(v == doctest::Approx(0.75));
}

TEST_CASE("gar_blend is affine in alpha") {
    Rng rng(6);
    for (int rep = 0; rep < 100; ++rep) {
        auto a = random_proj(rng);
        auto b = random_proj(rng);
        const float alpha = static_cast<float>(rng.uniform());
        auto mid = gar_blend(a, b, alpha);
        auto hi = gar_blend(a, b, 1.0f);
        auto lo = gar_blend(a, b, 0.0f);
        for (std::size_t i = 0; i < a.q.numel(); ++i) {
            const float expect = alpha * hi.q.data[i] + (1 - alpha) * lo.q.data[i];
            CHECK(std::abs(mid.q.data[i] - expect) < 1e-6);
        }
    }
}

TEST_CASE("lat_transplant: boundary and scalar cases") {
    Rng rng(7);
    Tensor student_q = rng.normal_tensor<float>({4, 3});
    Tensor content_q = rng.normal_tensor<float>({4, 3});
    Tensor style_k = rng.normal_tensor<float>({5, 3});
    Tensor style_v = rng.normal_tensor<float>({5, 3});

    auto b1 = lat_transplant(student_q, content_q, style_k, style_v, 1.0f);
    for (std::size_t i = 0; i < student_q.numel(); ++i)
        CHECK(b1.q.data[i] == student_q.data[i]);
    for (std::size_t i = 0; i < style_k.numel(); ++i) {
        CHECK(b1.k.data[i] == style_k.data[i]);
        CHECK(b1.v.data[i] == style_v.data[i]);
    }

    auto b0 = lat_transplant(student_q, content_q, style_k, style_v, 0.0f);
    for (std::size_t i = 0; i < content_q.numel(); ++i)
        CHECK(b0.q.data[i] == content_q.data[i]);

    // student_q = 2 * content_q at beta 0.25 -> q = 1.25 * content_q
    Tensor doubled = scale(content_q, 2.0f);
    auto mid = lat_transplant(doubled, content_q, style_k, style_v, 0.25f);
    for (std::size_t i = 0; i < content_q.numel(); ++i)
        CHECK(mid.q.data[i] == doctest::Approx(1.25f * content_q.data[i]).epsilon(1e-6));
}

TEST_CASE("sini: boundary identities are bitwise") {
    Rng rng(8);
    Tensor zc = rng.normal_tensor<float>({3, 4, 4});
    Tensor zs = rng.normal_tensor<float>({3, 4, 4});
    const float eps = 1e-5f;

    Tensor g1 = sini(zc, zs, 1.0f, eps);
    for (std::size_t i = 0; i < zc.numel(); ++i) CHECK(g1.data[i] == zc.data[i]);

    Tensor g0 = sini(zc, zs, 0.0f, eps);
    Tensor fused = adain(zc, zs, 0, eps);
    for (std::size_t i = 0; i < zc.numel(); ++i) CHECK(g0.data[i] == fused.data[i]);
}

TEST_CASE("sini is affine in gamma; 0.5 is the midpoint") {
    Rng rng(9);
    for (int rep = 0; rep < 100; ++rep) {
        Tensor zc = rng.normal_tensor<float>({1, 4, 4});
        Tensor zs = rng.normal_tensor<float>({1, 4, 4});
        const float eps = 1e-5f;
        const float gamma = static_cast<float>(rng.uniform());
        Tensor mid = sini(zc, zs, gamma, eps);
        Tensor hi = sini(zc, zs, 1.0f, eps);
        Tensor lo = sini(zc, zs, 0.0f, eps);
        for (std::size_t i = 0; i < zc.numel(); ++i) {
            const float expect = gamma * hi.data[i] + (1 - gamma) * lo.data[i];
            CHECK(std::abs(mid.data[i] - expect) < 1e-6);
        }
        Tensor half = sini(zc, zs, 0.5f, eps);
        for (std::size_t i = 0; i < zc.numel(); ++i)
            CHECK(half.data[i] ==
                  doctest::Approx(0.5f * (hi.data[i] + lo.data[i])).epsilon(1e-6));
    }
}

TEST_CASE("sini: argument and shape errors") {
    Tensor a({3, 2, 2});
    Tensor b({3, 2, 3});
    CHECK_THROWS_AS(sini(a, b, 0.5f, 1e-5f), ShapeError);
    CHECK_THROWS_AS(sini(a, a, 1.5f, 1e-5f), ArgumentError);
}

TEST_CASE("make_student_hook: all toggles off is identity everywhere") {
    Rng rng(10);
    TeacherTrace content, style; // deliberately empty: identity must not touch them
    ModulationConfig cfg;
    cfg.gar_enabled = cfg.lat_enabled = cfg.sini_enabled = false;
    auto hook = make_student_hook(content, style, cfg);
    auto p = random_proj(rng);
    auto out_self = hook(0, {0, SiteKind::self_attention}, p);
    auto out_cross = hook(3, {1, SiteKind::cross_attention}, p);
    for (std::size_t i = 0; i < p.q.numel(); ++i) {
        CHECK(out_self.q.data[i] == p.q.data[i]);
        CHECK(out_cross.q.data[i] == p.q.data[i]);
        CHECK(out_cross.k.data[i] == p.k.data[i]);
        CHECK(out_cross.v.data[i] == p.v.data[i]);
    }
}

TEST_CASE("make_student_hook: gar-only with alpha=1 is identity at all sites") {
    Rng rng(11);
    TeacherTrace content, style;
    AttentionSiteId self_site{0, SiteKind::self_attention};
    content.record(0, self_site, random_proj(rng));
    style.record(0, self_site, random_proj(rng));
    ModulationConfig cfg;
    cfg.alpha = 1.0f;
    cfg.lat_enabled = false;
    auto hook = make_student_hook(content, style, cfg);
    auto p = random_proj(rng);
    auto out = hook(0, self_site, p);
    for (std::size_t i = 0; i < p.q.numel(); ++i) {
        CHECK(out.q.data[i] == p.q.data[i]);
        CHECK(out.k.data[i] == p.k.data[i]);
        CHECK(out.v.data[i] == p.v.data[i]);
    }
    auto out_cross = hook(0, {0, SiteKind::cross_attention}, p);
    for (std::size_t i = 0; i < p.q.numel(); ++i)
        CHECK(out_cross.q.data[i] == p.q.data[i]);
}

TEST_CASE("make_student_hook: full config equals manual composition") {
    Rng rng(12);
    AttentionSiteId self_site{1, SiteKind::self_attention};
    AttentionSiteId cross_site{1, SiteKind::cross_attention};
    TeacherTrace content, style;
    auto pc_self = random_proj(rng);
    auto ps_self = random_proj(rng);
    auto pc_cross = random_proj(rng);
    auto ps_cross = random_proj(rng);
    content.record(2, self_site, pc_self);
    style.record(2, self_site, ps_self);
    content.record(2, cross_site, pc_cross);
    style.record(2, cross_site, ps_cross);

    ModulationConfig cfg; // defaults: 0.75 / 0.25 / 0.5, all enabled
    auto hook = make_student_hook(content, style, cfg);
    auto p = random_proj(rng);

    auto got_self = hook(2, self_site, p);
    auto want_self = gar_blend(p, gar_fuse(pc_self, ps_self, cfg.adain_epsilon), cfg.alpha);
    for (std::size_t i = 0; i < p.q.numel(); ++i) {
        CHECK(got_self.q.data[i] == want_self.q.data[i]);
        CHECK(got_self.k.data[i] == want_self.k.data[i]);
        CHECK(got_self.v.data[i] == want_self.v.data[i]);
    }

    auto got_cross = hook(2, cross_site, p);
    auto want_cross = lat_transplant(p.q, pc_cross.q, ps_cross.k, ps_cross.v, cfg.beta);
    for (std::size_t i = 0; i < p.q.numel(); ++i) {
        CHECK(got_cross.q.data[i] == want_cross.q.data[i]);
        CHECK(got_cross.k.data[i] == want_cross.k.data[i]);
        CHECK(got_cross.v.data[i] == want_cross.v.data[i]);
    }
}

TEST_CASE("make_student_hook: missing trace entry names step and site") {
    Rng rng(13);
    TeacherTrace content, style;
    ModulationConfig cfg;
    auto hook = make_student_hook(content, style, cfg);
    auto p = random_proj(rng);
    CHECK_THROWS_WITH_AS(hook(4, {2, SiteKind::self_attention}, p),
                         doctest::Contains("step 4"), TraceError);
}

TEST_CASE("hook never changes shapes") {
    Rng rng(14);
    AttentionSiteId self_site{0, SiteKind::self_attention};
    AttentionSiteId cross_site{0, SiteKind::cross_attention};
    TeacherTrace content, style;
    content.record(0, self_site, random_proj(rng, 6, 4));
    style.record(0, self_site, random_proj(rng, 6, 4));
    content.record(0, cross_site, random_proj(rng, 6, 4));
    style.record(0, cross_site, random_proj(rng, 6, 4));
    ModulationConfig cfg;
    auto hook = make_student_hook(content, style, cfg);
    auto p = random_proj(rng, 6, 4);
    auto a = hook(0, self_site, p);
    auto b = hook(0, cross_site, p);
    CHECK(a.q.shape == p.q.shape);
    CHECK(a.k.shape == p.k.shape);
    CHECK(a.v.shape == p.v.shape);
    CHECK(b.q.shape == p.q.shape);
    CHECK(b.k.shape == p.k.shape);
    CHECK(b.v.shape == p.v.shape);
}

TEST_CASE("trace directory round trip") {
    Rng rng(15);
    TeacherTrace trace;
    trace.record(0, {0, SiteKind::self_attention}, random_proj(rng));
    trace.record(0, {0, SiteKind::cross_attention}, random_proj(rng));
    trace.record(7, {3, SiteKind::self_attention}, random_proj(rng, 5, 3));
    trace.set_initial_latent(rng.normal_tensor<float>({3, 4, 4}));
    trace.record_latent(2, rng.normal_tensor<float>({3, 4, 4}));

    const auto dir = std::filesystem::temp_directory_path() / "ham_trace_test";
    std::filesystem::remove_all(dir);
    save_trace(dir.string(), trace);
    TeacherTrace back = load_trace(dir.string());

    REQUIRE(back.entries().size() == trace.entries().size());
    for (const auto& [key, p] : trace.entries()) {
        const auto& [step, layer, kind] = key;
        const AttentionProjections& q =
            back.require(step, {layer, static_cast<SiteKind>(kind)});
        for (std::size_t i = 0; i < p.q.numel(); ++i) CHECK(q.q.data[i] == p.q.data[i]);
        for (std::size_t i = 0; i < p.k.numel(); ++i) CHECK(q.k.data[i] == p.k.data[i]);
        for (std::size_t i = 0; i < p.v.numel(); ++i) CHECK(q.v.data[i] == p.v.data[i]);
    }
    const Tensor& z = back.initial_latent();
    for (std::size_t i = 0; i < z.numel(); ++i)
        CHECK(z.data[i] == trace.initial_latent().data[i]);
    REQUIRE(back.step_latents().count(2) == 1);
    std::filesystem::remove_all(dir);
}
