#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "salvage/amat.hpp"

using namespace salvage;

namespace {

LoadLatencyCurve flat(double latency_ns, double u_max = 0.95) {
    return LoadLatencyCurve::from_points({{0.0, latency_ns}, {u_max, latency_ns}});
}

LinkSpec flat_link(double per_dir_ns, double raw = 64.0, double u_max = 0.95) {
    return LinkSpec(16, raw, 64.0, 68.0, 0.94, 2.0 * per_dir_ns, flat(per_dir_ns, u_max),
                    flat(per_dir_ns, u_max));
}

SystemConfig flat_system(double l_p, double l_s, double l_dir, double b_p = 38.4,
                         double b_s = 19.2) {
    return SystemConfig(b_p, b_s, flat(l_p), flat(l_s), flat_link(l_dir), 0.75);
}

SystemConfig derived_example_config() {
    auto primary = synthetic_curve(100.0, 100.0, 0.95, 39);
    return SystemConfig(38.4, 19.2, primary, primary.shifted(100.0),
                        LinkSpec(16, 64.0, 64.0, 68.0, 0.94, 100.0,
                                 synthetic_curve(50.0, 50.0, 0.95, 20),
                                 synthetic_curve(50.0, 50.0, 0.95, 20)),
                        0.75);
}

SystemConfig random_system(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> bw(16.0, 80.0);
    std::uniform_real_distribution<double> frac(0.25, 1.0);
    std::uniform_real_distribution<double> lat(60.0, 160.0);
    std::uniform_real_distribution<double> q(0.0, 200.0);
    std::uniform_real_distribution<double> umax(0.6, 0.98);
    std::uniform_real_distribution<double> prem(0.0, 250.0);
    std::uniform_real_distribution<double> overhead(20.0, 150.0);
    double b_p = bw(rng);
    auto primary = synthetic_curve(lat(rng), q(rng), umax(rng), 17);
    double half = overhead(rng);
    LinkSpec link(16, bw(rng), 64.0, 68.0, 0.94, 2.0 * half,
                  synthetic_curve(half, q(rng), umax(rng), 9),
                  synthetic_curve(half, q(rng), umax(rng), 9));
    return SystemConfig(b_p, frac(rng) * b_p, primary, primary.shifted(prem(rng)),
                        std::move(link), frac(rng));
}

// Brute-force reference: same grid, same tie handling, written independently.
SplitResult enumerate_best(double d, const SystemConfig& cfg, double step) {
    std::vector<double> grid;
    for (std::size_t k = 1; static_cast<double>(k) * step <= 1.0 + 1e-9; ++k)
        grid.push_back(std::min(static_cast<double>(k) * step, 1.0));
    if (grid.back() < 1.0 - 1e-12)
        grid.push_back(1.0);
    SplitResult best{1.0, true, kInfeasibleLatency};
    bool found = false;
    for (double r : grid) {
        double a = amat_of(TrafficSplit(r), d, cfg);
        if (!is_feasible(a))
            continue;
        if (!found || a <= best.amat_ns) {
            best = {r, false, a};
            found = true;
        }
    }
    if (!found) {
        double best_pressure = kInfeasibleLatency;
        for (double r : grid) {
            Utilizations u = utilizations(TrafficSplit(r), d, cfg);
            double pressure = std::max({u.u_p, u.u_s, u.u_ing, u.u_egr});
            if (pressure <= best_pressure) {
                best_pressure = pressure;
                best.r = r;
            }
        }
    }
    return best;
}

} // namespace

TEST_CASE("utilizations follow the split arithmetic", "[amat]") {
    auto cfg = flat_system(80.0, 130.0, 50.0);
    auto u = utilizations(TrafficSplit(0.75), 30.0, cfg);
    CHECK(u.u_p == Catch::Approx(0.5859).margin(5e-5));
    CHECK(u.u_s == Catch::Approx(0.3906).margin(5e-5));

    auto all_primary = utilizations(TrafficSplit(1.0), 25.0, cfg);
    CHECK(all_primary.u_p == Catch::Approx(25.0 / 38.4).epsilon(1e-12));
    CHECK(all_primary.u_s == 0.0);
    CHECK(all_primary.u_ing == 0.0);

    auto idle = utilizations(TrafficSplit(0.4), 0.0, cfg);
    CHECK(idle.u_p == 0.0);
    CHECK(idle.u_s == 0.0);
}

TEST_CASE("amat composes the four latency terms", "[amat]") {
    auto cfg = flat_system(80.0, 130.0, 0.0);
    // L_ing = L_egr = 0: salvage side totals 130 + 60 + 40 with split curves
    auto cfg2 = SystemConfig(38.4, 19.2, flat(80.0), flat(130.0),
                             LinkSpec(16, 64.0, 64.0, 68.0, 0.94, 100.0, flat(60.0), flat(40.0)),
                             0.75);
    CHECK(amat_of(TrafficSplit(0.6), 10.0, cfg2) == Catch::Approx(140.0).epsilon(1e-12));

    // r = 1 reduces to the primary curve alone
    CHECK(amat_of(TrafficSplit(1.0), 20.0, cfg) == 80.0);
}

TEST_CASE("amat matches the frozen independent evaluation", "[amat]") {
    auto cfg = derived_example_config();
    // Value computed by a standalone scalar evaluation of the same model
    // (naive interpolation + direct composition) before this module existed.
    CHECK(amat_of(TrafficSplit(0.7), 34.0, cfg) ==
          Catch::Approx(311.1397001643136).epsilon(1e-12));
}

TEST_CASE("amat is infeasible once any component saturates", "[amat]") {
    auto cfg = derived_example_config();
    // u_s = (1-r)*d/b_s > 0.95 once (1-r)*d > 18.24
    CHECK_FALSE(is_feasible(amat_of(TrafficSplit(0.05), 30.0, cfg)));
    CHECK(is_feasible(amat_of(TrafficSplit(0.8), 30.0, cfg)));
    // primary saturates at d > 0.95 * 38.4 when r = 1
    CHECK_FALSE(is_feasible(amat_of(TrafficSplit(1.0), 38.0, cfg)));
}

TEST_CASE("r=1 ignores the salvage path and r=0 ignores primary", "[amat]") {
    auto base = flat_system(80.0, 130.0, 50.0);
    auto slower_salvage = flat_system(80.0, 500.0, 90.0);
    CHECK(amat_of(TrafficSplit(1.0), 20.0, base) ==
          amat_of(TrafficSplit(1.0), 20.0, slower_salvage));

    auto slower_primary = flat_system(400.0, 130.0, 50.0);
    CHECK(amat_of(TrafficSplit(0.0), 10.0, base) ==
          amat_of(TrafficSplit(0.0), 10.0, slower_primary));
}

TEST_CASE("amat is invariant under joint bandwidth/demand scaling", "[amat]") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> pick_r(0.05, 1.0);
    std::uniform_real_distribution<double> pick_scale(0.5, 4.0);
    for (int trial = 0; trial < 50; ++trial) {
        auto cfg = random_system(rng);
        double d = 0.5 * (cfg.b_p + cfg.b_s);
        double r = pick_r(rng);
        double scale = pick_scale(rng);
        SystemConfig scaled(cfg.b_p * scale, cfg.b_s * scale, cfg.primary_curve, cfg.salvage_curve,
                            LinkSpec(cfg.link.lanes(), cfg.link.raw_bw_per_dir() * scale,
                                     cfg.link.flit_payload(), cfg.link.flit_total(),
                                     cfg.link.configured_eta(), cfg.link.base_overhead_ns(),
                                     cfg.link.ingress_curve(), cfg.link.egress_curve(),
                                     cfg.link.meta()),
                            cfg.rho_rd);
        double a = amat_of(TrafficSplit(r), d, cfg);
        double b = amat_of(TrafficSplit(r), d * scale, scaled);
        if (is_feasible(a))
            CHECK(b == Catch::Approx(a).epsilon(1e-9));
        else
            CHECK_FALSE(is_feasible(b));
    }
}

TEST_CASE("optimal split ties break toward primary", "[amat]") {
    // Equal flat memories, zero link overhead: every candidate ties.
    auto cfg = SystemConfig(38.4, 38.4, flat(80.0), flat(80.0),
                            LinkSpec(16, 64.0, 64.0, 68.0, 0.94, 0.0, flat(0.0), flat(0.0)), 0.75);
    SplitResult res = optimal_split(10.0, cfg);
    CHECK(res.r == 1.0);
    CHECK_FALSE(res.capacity_exceeded);
}

TEST_CASE("optimal split prefers primary when salvage dominates it", "[amat]") {
    // Primary flat (never queues); salvage strictly slower at every load.
    auto cfg = flat_system(80.0, 130.0, 50.0);
    SplitResult res = optimal_split(20.0, cfg);
    CHECK(res.r == 1.0);
    CHECK(res.amat_ns == 80.0);
}

TEST_CASE("optimal split matches the frozen enumeration anchor", "[amat]") {
    // 50 ns premium @ 50% bandwidth boost, probed at d = 0.9 * b_p.
    auto primary = synthetic_curve(118.0, 60.0, 0.95, 39);
    SystemConfig cfg(38.4, 19.2, primary, primary.shifted(50.0),
                     LinkSpec(16, 64.0, 64.0, 68.0, 0.94, 100.0,
                              synthetic_curve(50.0, 50.0, 0.95, 20),
                              synthetic_curve(50.0, 50.0, 0.95, 20)),
                     0.75);
    SplitResult res = optimal_split(0.9 * 38.4, cfg);
    CHECK(res.r == Catch::Approx(0.70).margin(1e-9));
    CHECK_FALSE(res.capacity_exceeded);
}

TEST_CASE("optimal split equals brute-force enumeration on random configs", "[amat]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> pick_d(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto cfg = random_system(rng);
        double d = pick_d(rng) * 1.3 * (cfg.b_p + cfg.b_s);
        SplitResult expected = enumerate_best(d, cfg, 0.05);
        SplitResult got = optimal_split(d, cfg);
        CHECK(got.r == expected.r);
        CHECK(got.capacity_exceeded == expected.capacity_exceeded);
        if (!expected.capacity_exceeded)
            CHECK(got.amat_ns == expected.amat_ns);
    }
}

TEST_CASE("capacity-exceeded fallback minimizes peak utilization", "[amat]") {
    auto cfg = derived_example_config();
    double d = 2.0 * (cfg.b_p + cfg.b_s); // nothing can serve this
    SplitResult res = optimal_split(d, cfg);
    CHECK(res.capacity_exceeded);
    CHECK_FALSE(is_feasible(res.amat_ns));
    SplitResult expected = enumerate_best(d, cfg, 0.05);
    CHECK(res.r == expected.r);
}

TEST_CASE("zero salvage availability forces an all-primary split", "[amat]") {
    auto cfg = derived_example_config();
    ResourceAvailability caps = nominal_capacities(cfg);
    caps.b_s_avail = 0.0;
    for (double d : {5.0, 15.0, 30.0}) {
        SplitResult res = optimal_split(d, cfg, caps);
        CHECK(res.r == 1.0);
    }
}

TEST_CASE("split grid honors custom steps and always ends at 1", "[amat]") {
    auto grid = split_grid(0.05);
    REQUIRE(grid.size() == 20);
    CHECK(grid.front() == Catch::Approx(0.05));
    CHECK(grid.back() == 1.0);

    auto coarse = split_grid(0.3);
    REQUIRE(coarse.size() == 4); // 0.3 0.6 0.9 1.0
    CHECK(coarse.back() == 1.0);

    CHECK_THROWS_AS(split_grid(0.0), std::invalid_argument);
    CHECK_THROWS_AS(split_grid(1.5), std::invalid_argument);
}

TEST_CASE("traffic split rejects values outside [0,1]", "[amat]") {
    CHECK_THROWS_AS(TrafficSplit(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(TrafficSplit(1.1), std::invalid_argument);
}
