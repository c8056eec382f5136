#include <doctest.h>

#include <cmath>

#include "ham/metrics.hpp"
#include "ham/rng.hpp"

using namespace ham;

TEST_CASE("dc_score: reported composite rows") {
    ComponentScores ham_row{.dino = 0.728, .clip_i = 0.682, .clip_t = 0.223};
    CHECK(dc_score(ham_row) == doctest::Approx(2.113).epsilon(0.0005));
    ComponentScores diffartist{.dino = 0.629, .clip_i = 0.626, .clip_t = 0.220};
    CHECK(dc_score(diffartist) == doctest::Approx(1.987).epsilon(0.0005));
    ComponentScores zero{};
    CHECK(dc_score(zero) == doctest::Approx(1.0));
}

TEST_CASE("cc_score: reported composite rows and annihilator") {
    ComponentScores ham_row{.dino = 0.728, .clip_i = 0.682, .clip_t = 0.223};
    CHECK(cc_score(ham_row) == doctest::Approx(2.057).epsilon(0.0005));
    ComponentScores styleid{.dino = 0.544, .clip_i = 0.619, .clip_t = 0.213};
    CHECK(cc_score(styleid) == doctest::Approx(1.964).epsilon(0.0005));
    ComponentScores neg{.dino = 0.0, .clip_i = -1.0, .clip_t = 0.3};
    CHECK(cc_score(neg) == doctest::Approx(0.0));
}

TEST_CASE("artfid_form: spot checks and errors") {
    CHECK(artfid_form(9.244, 0.479) == doctest::Approx(15.151).epsilon(0.005 / 15.151));
    CHECK(artfid_form(8.273, 0.635) == doctest::Approx(15.161).epsilon(0.01 / 15.161));
    CHECK(artfid_form(0.0, 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(artfid_form(-1.0, 0.5), ArgumentError);
    CHECK_THROWS_AS(artfid_form(1.0, -0.5), ArgumentError);
}

TEST_CASE("dc/cc monotone increasing in each component") {
    Rng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        ComponentScores s{.dino = rng.uniform(-0.5, 0.9), .clip_i = rng.uniform(-0.5, 0.9),
                          .clip_t = rng.uniform(-0.5, 0.9)};
        ComponentScores up = s;
        up.dino += 0.01;
        CHECK(dc_score(up) > dc_score(s));
        up = s;
        up.clip_t += 0.01;
        CHECK(dc_score(up) > dc_score(s));
        CHECK(cc_score(up) > cc_score(s));
        up = s;
        up.clip_i += 0.01;
        CHECK(cc_score(up) > cc_score(s));
    }
}

TEST_CASE("reference table: every row's dc/cc recomputes at table precision") {
    for (const auto& row : reference_table()) {
        ComponentScores s{.dino = row.dino, .clip_i = row.clip_i, .clip_t = row.clip_t};
        // compare at the table's 3-decimal precision
        const double dc = std::round(dc_score(s) * 1000.0) / 1000.0;
        const double cc = std::round(cc_score(s) * 1000.0) / 1000.0;
        INFO("row ", row.method);
        CHECK(std::abs(dc - row.dc) <= 0.001 + 1e-9);
        CHECK(std::abs(cc - row.cc) <= 0.001 + 1e-9);
    }
}

TEST_CASE("channel_stat_distance: basic values and oracle") {
    Tensor a({1, 4}, {0, 0, 0, 0});
    CHECK(channel_stat_distance(a, a) == doctest::Approx(0.0));
    Tensor b({1, 4}, {1, 1, 1, 1});
    CHECK(channel_stat_distance(a, b) == doctest::Approx(1.0));

    Rng rng(2);
    Tensor x = rng.normal_tensor<float>({3, 8});
    Tensor y = rng.normal_tensor<float>({3, 8}, 2.0);
    auto sx = channel_stats(x, 0);
    auto sy = channel_stats(y, 0);
    double acc = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        acc += (sx.mean[c] - sy.mean[c]) * (sx.mean[c] - sy.mean[c]);
        acc += (sx.std[c] - sy.std[c]) * (sx.std[c] - sy.std[c]);
    }
    CHECK(channel_stat_distance(x, y) == doctest::Approx(std::sqrt(acc)).epsilon(1e-6));

    Tensor c2({2, 4});
    CHECK_THROWS_AS(channel_stat_distance(a, c2), ShapeError);
}

TEST_CASE("scores csv: parse, render, errors") {
    const std::string csv =
        "method,dino,clip_i,clip_t,fid,lpips\n"
        "HAM,0.728,0.682,0.223,9.244,0.479\n"
        "NoFid,0.5,0.5,0.2,,\n";
    auto rows = parse_scores_csv(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == "HAM");
    CHECK(rows[0].scores.fid.has_value());
    CHECK_FALSE(rows[1].scores.fid.has_value());

    const std::string out = render_scores_csv(rows);
    CHECK(out.find("dc,cc,artfid") != std::string::npos);
    CHECK(out.find("2.113") != std::string::npos);

    // empty body: header-only output
    auto empty = parse_scores_csv("method,dino,clip_i,clip_t,fid,lpips\n");
    CHECK(empty.empty());
    CHECK(render_scores_csv(empty) == "method,dino,clip_i,clip_t,fid,lpips,dc,cc,artfid\n");

    CHECK_THROWS_WITH_AS(
        parse_scores_csv("method,dino,clip_i,clip_t,fid,lpips\nX,abc,0.5,0.2,,\n"),
        doctest::Contains("column dino"), IoError);
    CHECK_THROWS_WITH_AS(parse_scores_csv("wrong,header\n"),
                         doctest::Contains("header"), IoError);
    CHECK_THROWS_AS(parse_scores_csv(""), IoError);
}
