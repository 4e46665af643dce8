#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "bblm/probe.hpp"
#include "bblm/rng.hpp"

using namespace bblm;

namespace {

Eigen::VectorXd noise_vector(Rng& rng, int d, double scale) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.uniform(-scale, scale);
    return v;
}

// Pairs whose male/female members differ by +-signal along chosen axes.
std::vector<VectorPair> planted_pairs(Rng& rng, int n, int d,
                                      const std::vector<int>& axes,
                                      double signal, double noise) {
    std::vector<VectorPair> pairs;
    for (int i = 0; i < n; ++i) {
        VectorPair p;
        p.male = noise_vector(rng, d, noise);
        p.female = noise_vector(rng, d, noise);
        for (int axis : axes) {
            p.male(axis) += signal;
            p.female(axis) -= signal;
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace

TEST_CASE("probe separates a linearly separable toy set") {
    Rng rng(3);
    // female x0 = +1, male x0 = -1
    std::vector<VectorPair> pairs;
    for (int i = 0; i < 10; ++i) {
        VectorPair p;
        p.male = noise_vector(rng, 4, 0.05);
        p.female = noise_vector(rng, 4, 0.05);
        p.male(0) -= 1.0;
        p.female(0) += 1.0;
        pairs.push_back(std::move(p));
    }
    auto probe = fit_probe(pairs, 1.0, 7);
    CHECK(probe.test_accuracy == 1.0);
    CHECK(probe.train_accuracy == 1.0);
    CHECK(probe.w(0) < 0.0);  // male side carries label +1
}

TEST_CASE("probe on signal-free data stays near chance") {
    Rng rng(11);
    std::vector<VectorPair> pairs = planted_pairs(rng, 500, 8, {}, 0.0, 1.0);
    auto probe = fit_probe(pairs, 1.0, 23);
    CHECK(probe.test_accuracy >= 0.35);
    CHECK(probe.test_accuracy <= 0.65);
}

TEST_CASE("duplicating every point keeps the decision boundary direction") {
    Rng rng(5);
    auto pairs = planted_pairs(rng, 20, 6, {1}, 0.7, 0.5);
    Eigen::MatrixXd x(40, 6);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 20; ++i) {
        x.row(2 * i) = pairs[i].male;
        y(2 * i) = 1.0;
        x.row(2 * i + 1) = pairs[i].female;
        y(2 * i + 1) = -1.0;
    }
    Eigen::MatrixXd x2(80, 6);
    x2 << x, x;
    Eigen::VectorXd y2(80);
    y2 << y, y;

    Eigen::VectorXd w1, w2;
    double b1 = 0.0, b2 = 0.0;
    detail::fit_logistic(x, y, 1.0, w1, b1);
    detail::fit_logistic(x2, y2, 1.0, w2, b2);
    double cosine = w1.dot(w2) / (w1.norm() * w2.norm());
    CHECK(cosine >= 1.0 - 1e-6);
}

TEST_CASE("dominant unit is the largest-magnitude weight, ties break low") {
    LinearProbe p;
    p.w = Eigen::Vector3d(0.1, -3.0, 0.2);
    CHECK(dominant_unit(p) == 1);
    p.w = Eigen::Vector2d(2.0, -2.0);
    CHECK(dominant_unit(p) == 0);
}

TEST_CASE("dominant unit is stable under identical refits") {
    Rng rng(31);
    auto pairs = planted_pairs(rng, 30, 10, {}, 0.0, 1.0);
    auto a = fit_probe(pairs, 1.0, 9);
    auto b = fit_probe(pairs, 1.0, 9);
    CHECK(dominant_unit(a) == dominant_unit(b));
    CHECK(a.train_accuracy == b.train_accuracy);
    CHECK(a.test_accuracy == b.test_accuracy);
    CHECK(a.w == b.w);
}

TEST_CASE("probe variants isolate the signal-carrying axis") {
    SECTION("all signal on one axis") {
        Rng rng(17);
        auto pairs = planted_pairs(rng, 200, 6, {2}, 1.0, 0.2);
        auto v = probe_variants(pairs, 2, 1.0, 5);
        CHECK(v.unit_only.test_accuracy >= 0.95);
        CHECK(v.full.test_accuracy >= 0.95);
        CHECK(v.unit_removed.test_accuracy >= 0.35);
        CHECK(v.unit_removed.test_accuracy <= 0.65);
    }
    SECTION("signal split over two axes") {
        Rng rng(19);
        auto pairs = planted_pairs(rng, 40, 6, {0, 1}, 0.8, 0.2);
        auto v = probe_variants(pairs, 0, 1.0, 5);
        CHECK(v.unit_removed.test_accuracy > 0.9);  // axis 1 still carries it
    }
    SECTION("labels independent of data") {
        Rng rng(23);
        auto pairs = planted_pairs(rng, 200, 6, {}, 0.0, 1.0);
        auto v = probe_variants(pairs, 0, 1.0, 5);
        for (double acc : {v.full.test_accuracy, v.unit_only.test_accuracy,
                           v.unit_removed.test_accuracy}) {
            CHECK(acc >= 0.35);
            CHECK(acc <= 0.65);
        }
    }
    SECTION("one-dimensional input cannot drop its only axis") {
        Rng rng(29);
        auto pairs = planted_pairs(rng, 10, 1, {0}, 1.0, 0.1);
        CHECK_THROWS_AS(probe_variants(pairs, 0, 1.0, 5), DataError);
    }
}

TEST_CASE("planted axis is recovered as the dominant unit") {
    int hits = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(1000 + seed);
        int axis = static_cast<int>(rng.uniform_int(8));
        auto pairs = planted_pairs(rng, 20, 8, {axis}, 1.0, 0.3);
        auto probe = fit_probe(pairs, 1.0, seed);
        if (dominant_unit(probe) == axis) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("boundary distance geometry") {
    LinearProbe p;
    p.w = Eigen::Vector2d(1.0, 0.0);
    p.b = 0.0;
    CHECK(boundary_distance(p, Eigen::Vector2d(2.0, 0.0)) == 2.0);
    CHECK(boundary_distance(p, Eigen::Vector2d(0.0, 5.0)) == 0.0);

    LinearProbe scaled;
    scaled.w = 5.0 * p.w;
    scaled.b = 5.0 * p.b;
    Eigen::Vector2d x(0.3, -0.8);
    CHECK(boundary_distance(p, x) ==
          Catch::Approx(boundary_distance(scaled, x)).margin(1e-12));

    LinearProbe zero;
    zero.w = Eigen::Vector2d(0.0, 0.0);
    CHECK_THROWS_AS(boundary_distance(zero, x), DataError);
    CHECK_THROWS_AS(boundary_distance(p, Eigen::Vector3d(1, 2, 3)), DataError);
}

TEST_CASE("distance sign equals the predicted class sign") {
    Rng rng(41);
    auto pairs = planted_pairs(rng, 20, 4, {1}, 1.0, 0.2);
    auto probe = fit_probe(pairs, 1.0, 3);
    for (const auto& p : pairs) {
        double dm = boundary_distance(probe, p.male);
        double score = probe.w.dot(p.male) + probe.b;
        CHECK((dm >= 0) == (score >= 0));
    }
}

TEST_CASE("unit overlap matrix") {
    ProbeSeries series(3);
    series[0].dominant_unit = 3;
    series[1].dominant_unit = 3;
    series[2].dominant_unit = 7;
    auto m = unit_overlap(series);
    CHECK(m[0][0]);
    CHECK(m[1][1]);
    CHECK(m[2][2]);
    CHECK(m[0][1]);
    CHECK_FALSE(m[0][2]);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(m[i][j] == m[j][i]);
}

TEST_CASE("threshold crossings honor the final sign") {
    CHECK(threshold_crossing({0.1, 0.4, 0.6}, 0.5) == 2);
    CHECK_FALSE(threshold_crossing({0.1, 0.2, 0.3}, 0.5).has_value());
    CHECK(threshold_crossing({-0.6, 0.1, 0.7}, 0.5) == 2);
    CHECK(threshold_crossing({-0.6, -0.1, -0.7}, 0.5) == 0);
    CHECK_THROWS_AS(threshold_crossing({0.1}, 0.0), ConfigError);
}

TEST_CASE("phase detection") {
    auto mk = [](std::vector<int> units, std::vector<double> only,
                 std::vector<double> removed) {
        ProbeSeries s(units.size());
        for (std::size_t i = 0; i < units.size(); ++i) {
            s[i].dominant_unit = units[i];
            s[i].acc_unit_only = only[i];
            s[i].acc_unit_removed = removed[i];
        }
        return s;
    };
    SECTION("formation ends when the unit stabilizes") {
        auto s = mk({2, 5, 5, 5}, {0, 0, 0, 0}, {1, 1, 1, 1});
        auto p = detect_phases(s);
        REQUIRE(p.formation_end.has_value());
        CHECK(*p.formation_end == 1);
        CHECK_FALSE(p.consolidation_end.has_value());
    }
    SECTION("unit changing at the end means no stabilization") {
        auto s = mk({2, 5, 2}, {0, 0, 0}, {1, 1, 1});
        CHECK_FALSE(detect_phases(s).formation_end.has_value());
    }
    SECTION("consolidation needs a persistent lead") {
        auto s = mk({1, 1, 1, 1, 1, 1},
                    {0.5, 0.9, 0.4, 0.9, 0.9, 0.9},
                    {0.8, 0.8, 0.8, 0.8, 0.8, 0.8});
        auto p = detect_phases(s, 3);
        REQUIRE(p.consolidation_end.has_value());
        CHECK(*p.consolidation_end == 3);
    }
}

TEST_CASE("full probe dominates its restricted variants on the train split") {
    Rng rng(53);
    auto pairs = planted_pairs(rng, 40, 6, {0, 3}, 0.6, 0.4);
    auto v = probe_variants(pairs, 0, 1.0, 13);
    double best_restricted =
        std::max(v.unit_only.train_accuracy, v.unit_removed.train_accuracy);
    CHECK(v.full.train_accuracy >= best_restricted - 0.05);
}
