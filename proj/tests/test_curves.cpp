#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "salvage/curves.hpp"

using namespace salvage;

namespace {

LoadLatencyCurve three_knot() {
    return LoadLatencyCurve::from_points({{0.0, 118.0}, {0.5, 125.0}, {0.9, 300.0}});
}

// Independent interpolation: linear scan, no shared code with the library.
double naive_latency(const std::vector<CurvePoint>& pts, double u) {
    if (u <= pts.front().utilization)
        return pts.front().latency_ns;
    if (u > pts.back().utilization)
        return kInfeasibleLatency;
    for (size_t i = 1; i < pts.size(); ++i) {
        if (u <= pts[i].utilization) {
            double span = pts[i].utilization - pts[i - 1].utilization;
            double t = (u - pts[i - 1].utilization) / span;
            return pts[i - 1].latency_ns + t * (pts[i].latency_ns - pts[i - 1].latency_ns);
        }
    }
    return kInfeasibleLatency;
}

LoadLatencyCurve random_curve(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_knots(2, 12);
    std::uniform_real_distribution<double> jump(0.0, 80.0);
    std::uniform_real_distribution<double> gap(0.01, 0.2);
    int n = n_knots(rng);
    std::vector<CurvePoint> pts;
    double u = 0.0, l = 50.0 + jump(rng);
    for (int i = 0; i < n; ++i) {
        pts.push_back({u, l});
        u += gap(rng);
        l += jump(rng);
    }
    return LoadLatencyCurve::from_points(std::move(pts));
}

} // namespace

TEST_CASE("latency_at interpolates linearly and is exact at knots", "[curves]") {
    auto c = three_knot();
    CHECK(c.latency_at(0.25) == Catch::Approx(121.5).epsilon(1e-12));
    CHECK(c.latency_at(0.5) == 125.0);
    CHECK(c.latency_at(0.0) == 118.0);
    CHECK(c.latency_at(0.9) == 300.0);
}

TEST_CASE("latency_at beyond the last knot is infeasible", "[curves]") {
    auto c = three_knot();
    CHECK_FALSE(is_feasible(c.latency_at(0.95)));
    CHECK(is_feasible(c.latency_at(0.9)));
}

TEST_CASE("latency_at rejects negative utilization", "[curves]") {
    CHECK_THROWS_AS(three_knot().latency_at(-0.1), std::invalid_argument);
}

TEST_CASE("curve invariants are enforced at construction", "[curves]") {
    CHECK_THROWS_AS(LoadLatencyCurve::from_points({{0.0, 100.0}}), std::invalid_argument);
    CHECK_THROWS_AS(LoadLatencyCurve::from_points({{0.1, 100.0}, {0.5, 120.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(LoadLatencyCurve::from_points({{0.0, 100.0}, {0.0, 120.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(LoadLatencyCurve::from_points({{0.0, 100.0}, {0.5, 90.0}}),
                    std::invalid_argument);
}

TEST_CASE("synthetic curve matches its closed form", "[curves]") {
    auto c = synthetic_curve(100.0, 100.0, 0.9, 10);
    CHECK(c.latency_at(0.0) == 100.0);
    // u = 0.5 is a knot for 10 points on [0, 0.9]? No: knots at 0.1 steps.
    auto c2 = synthetic_curve(100.0, 100.0, 0.5, 2);
    CHECK(c2.latency_at(0.5) == Catch::Approx(200.0).epsilon(1e-12));
    auto c3 = synthetic_curve(118.0, 60.0, 0.9, 19);
    CHECK(c3.latency_at(0.9) == Catch::Approx(658.0).epsilon(1e-9));
}

TEST_CASE("synthetic curve rejects bad parameters", "[curves]") {
    CHECK_THROWS_AS(synthetic_curve(0.0, 10.0, 0.9, 5), std::invalid_argument);
    CHECK_THROWS_AS(synthetic_curve(100.0, -1.0, 0.9, 5), std::invalid_argument);
    CHECK_THROWS_AS(synthetic_curve(100.0, 10.0, 1.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(synthetic_curve(100.0, 10.0, 0.9, 1), std::invalid_argument);
}

TEST_CASE("shift adds a constant premium and keeps knots", "[curves]") {
    auto c = LoadLatencyCurve::from_points({{0.0, 50.0}, {0.8, 120.0}});
    auto s = c.shifted(100.0);
    REQUIRE(s.points().size() == 2);
    CHECK(s.points()[0].latency_ns == 150.0);
    CHECK(s.points()[1].latency_ns == 220.0);
    CHECK(s.points()[0].utilization == 0.0);
    CHECK(s.points()[1].utilization == 0.8);
    CHECK(c.shifted(0.0) == c);
    CHECK(c.shifted(50.0).shifted(50.0) == c.shifted(100.0));
    CHECK_THROWS_AS(c.shifted(-1.0), std::invalid_argument);
}

TEST_CASE("interpolation agrees with a naive reimplementation on random curves", "[curves]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pick(0.0, 1.1);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = random_curve(rng);
        for (int q = 0; q < 40; ++q) {
            double u = pick(rng) * c.max_utilization();
            double expected = naive_latency(c.points(), u);
            double got = c.latency_at(u);
            if (is_feasible(expected))
                CHECK(got == Catch::Approx(expected).margin(1e-9));
            else
                CHECK_FALSE(is_feasible(got));
        }
    }
}

TEST_CASE("latency is monotone in utilization", "[curves]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto c = random_curve(rng);
        std::uniform_real_distribution<double> pick(0.0, c.max_utilization());
        double u1 = pick(rng), u2 = pick(rng);
        if (u1 > u2)
            std::swap(u1, u2);
        CHECK(c.latency_at(u1) <= c.latency_at(u2));
    }
}

TEST_CASE("shift commutes with latency_at", "[curves]") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        auto c = random_curve(rng);
        auto s = c.shifted(75.0);
        std::uniform_real_distribution<double> pick(0.0, c.max_utilization());
        double u = pick(rng);
        CHECK(s.latency_at(u) == Catch::Approx(c.latency_at(u) + 75.0).epsilon(1e-12));
    }
}

TEST_CASE("curve csv parses and round-trips", "[curves]") {
    auto c = parse_curve_csv("utilization,latency_ns\n0,118\n0.5,125\n");
    REQUIRE(c.points().size() == 2);
    CHECK(c.points()[1].latency_ns == 125.0);

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        auto original = random_curve(rng);
        auto reparsed = parse_curve_csv(emit_curve_csv(original));
        CHECK(reparsed == original);
        CHECK(emit_curve_csv(reparsed) == emit_curve_csv(original));
    }
}

TEST_CASE("curve csv rejects malformed input naming the row", "[curves]") {
    CHECK_THROWS_AS(parse_curve_csv(""), ParseError);
    CHECK_THROWS_AS(parse_curve_csv("0.5,125\n0,118\n"), ParseError);

    try {
        parse_curve_csv("utilization,latency_ns\n0,118\n0.5,125\n0.4,130\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    try {
        parse_curve_csv("utilization,latency_ns\n0,118\n0.5,100\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_curve_csv("utilization,latency_ns\n0,118\n"), ParseError);
    CHECK_THROWS_AS(parse_curve_csv("utilization,latency_ns\n0,118,9\n0.5,125\n"), ParseError);
}
