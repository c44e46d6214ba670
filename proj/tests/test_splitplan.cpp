#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "salvage/splitplan.hpp"

using namespace salvage;

namespace {

SystemConfig stock_system(double salvage_premium_ns = 100.0, double boost = 0.5) {
    auto primary = synthetic_curve(118.0, 60.0, 0.95, 39);
    return SystemConfig(38.4, boost * 38.4, primary, primary.shifted(salvage_premium_ns),
                        LinkSpec(16, 64.0, 64.0, 68.0, 0.94, 100.0,
                                 synthetic_curve(50.0, 50.0, 0.95, 20),
                                 synthetic_curve(50.0, 50.0, 0.95, 20)),
                        0.75);
}

AvailabilityGridSpec small_grid(const SystemConfig& cfg) {
    AvailabilityGridSpec grid = default_grid_spec(cfg);
    grid.fractions = {{{0.5, 1.0}, {0.5, 1.0}, {0.5, 1.0}, {0.5, 1.0}}};
    grid.demand_grid_gbps = {5.0, 15.0, 25.0, 35.0, 45.0};
    return grid;
}

struct TempFile {
    std::string path;
    explicit TempFile(const char* name)
        : path((std::filesystem::temp_directory_path() / name).string()) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("generate_curve records one optimal split per demand", "[splitplan]") {
    auto cfg = stock_system();
    auto curve = generate_curve(nominal_capacities(cfg), cfg, default_demand_grid(cfg));
    REQUIRE(curve.entries.size() == default_demand_grid(cfg).size());
    CHECK(curve.entries.front().r_star == 1.0);
    CHECK_FALSE(curve.entries.front().capacity_exceeded);
    CHECK(curve.entries.back().capacity_exceeded); // 1.4x total capacity
}

TEST_CASE("generate_curve validates its inputs", "[splitplan]") {
    auto cfg = stock_system();
    CHECK_THROWS_AS(generate_curve(nominal_capacities(cfg), cfg, {}), std::invalid_argument);
    ResourceAvailability too_much = nominal_capacities(cfg);
    too_much.b_p_avail *= 1.5;
    CHECK_THROWS_AS(generate_curve(too_much, cfg, {10.0}), std::invalid_argument);
}

TEST_CASE("r* is non-increasing in demand for the synthetic convex family", "[splitplan]") {
    for (double premium : {50.0, 200.0}) {
        for (double boost : {0.5, 1.0}) {
            auto cfg = stock_system(premium, boost);
            std::vector<double> demands;
            for (double d = 4.0; d <= 46.0; d += 2.0)
                demands.push_back(d);
            auto curve = generate_curve(nominal_capacities(cfg), cfg, demands);
            for (std::size_t i = 1; i < curve.entries.size(); ++i)
                CHECK(curve.entries[i].r_star <= curve.entries[i - 1].r_star + 1e-12);
        }
    }
}

TEST_CASE("salvage premium stops mattering at the highest feasible demand", "[splitplan]") {
    auto cheap = stock_system(50.0);
    auto pricey = stock_system(200.0);
    auto grid = default_demand_grid(cheap);
    auto curve_cheap = generate_curve(nominal_capacities(cheap), cheap, grid);
    auto curve_pricey = generate_curve(nominal_capacities(pricey), pricey, grid);
    // highest demand feasible in both
    double r_cheap = 0.0, r_pricey = 0.0;
    for (std::size_t i = grid.size(); i-- > 0;) {
        if (!curve_cheap.entries[i].capacity_exceeded && !curve_pricey.entries[i].capacity_exceeded) {
            r_cheap = curve_cheap.entries[i].r_star;
            r_pricey = curve_pricey.entries[i].r_star;
            break;
        }
    }
    CHECK(std::abs(r_cheap - r_pricey) <= 0.05 + 1e-9);
}

TEST_CASE("zero salvage availability pins the whole curve at r*=1", "[splitplan]") {
    auto cfg = stock_system();
    ResourceAvailability avail = nominal_capacities(cfg);
    avail.b_s_avail = 0.0;
    auto curve = generate_curve(avail, cfg, {5.0, 20.0, 35.0});
    for (const auto& e : curve.entries)
        CHECK(e.r_star == 1.0);
}

TEST_CASE("generate_set enumerates the cartesian availability grid", "[splitplan]") {
    auto cfg = stock_system();
    auto set = generate_set(cfg, default_grid_spec(cfg));
    CHECK(set.curves.size() == 256); // 4 axes x 4 fractions
    auto small = generate_set(cfg, small_grid(cfg));
    CHECK(small.curves.size() == 16);

    AvailabilityGridSpec singleton = default_grid_spec(cfg);
    singleton.fractions = {{{1.0}, {1.0}, {1.0}, {1.0}}};
    auto one = generate_set(cfg, singleton);
    REQUIRE(one.curves.size() == 1);
    CHECK(one.curves[0] ==
          generate_curve(nominal_capacities(cfg), cfg, singleton.demand_grid_gbps));

    AvailabilityGridSpec one_demand = small_grid(cfg);
    one_demand.demand_grid_gbps = {20.0};
    for (const auto& curve : generate_set(cfg, one_demand).curves)
        CHECK(curve.entries.size() == 1);
}

TEST_CASE("generate_set refuses grids beyond the safety cap", "[splitplan]") {
    auto cfg = stock_system();
    CHECK_THROWS_AS(generate_set(cfg, default_grid_spec(cfg), 100), CapacityError);
}

TEST_CASE("select_curve quantizes availability downward", "[splitplan]") {
    auto cfg = stock_system();
    auto set = generate_set(cfg, default_grid_spec(cfg));
    ResourceAvailability nominal = nominal_capacities(cfg);

    // exactly on a grid point
    ResourceAvailability on_grid{0.5 * nominal.b_p_avail, 0.5 * nominal.b_s_avail,
                                 nominal.link_ing_avail, nominal.link_egr_avail};
    auto sel = select_curve(set, on_grid);
    CHECK(sel.key.b_p_avail == Catch::Approx(0.5 * nominal.b_p_avail));
    CHECK(sel.key.link_ing_avail == Catch::Approx(nominal.link_ing_avail));

    // 60% rounds down to the 50% curve
    ResourceAvailability between = on_grid;
    between.b_p_avail = 0.6 * nominal.b_p_avail;
    CHECK(select_curve(set, between).key.b_p_avail == Catch::Approx(0.5 * nominal.b_p_avail));

    // below the smallest grid point on one axis
    ResourceAvailability starving = on_grid;
    starving.b_s_avail = 0.1 * nominal.b_s_avail;
    CHECK_THROWS_AS(select_curve(set, starving), CapacityError);

    // beyond nominal is a caller bug
    ResourceAvailability bogus = on_grid;
    bogus.b_p_avail = 1.2 * nominal.b_p_avail;
    CHECK_THROWS_AS(select_curve(set, bogus), std::invalid_argument);
}

TEST_CASE("select_curve is idempotent on its own key", "[splitplan]") {
    auto cfg = stock_system();
    auto set = generate_set(cfg, small_grid(cfg));
    ResourceAvailability nominal = nominal_capacities(cfg);
    ResourceAvailability current{0.8 * nominal.b_p_avail, 0.7 * nominal.b_s_avail,
                                 0.9 * nominal.link_ing_avail, 0.55 * nominal.link_egr_avail};
    auto first = select_curve(set, current);
    auto again = select_curve(set, first.key);
    CHECK(again.key == first.key);
    CHECK(again.curve == first.curve);
}

TEST_CASE("probe rounds demand up and flags the overflow tail", "[splitplan]") {
    SplitCurve curve{{{10.0, 1.0, false}, {20.0, 0.8, false}, {25.0, 0.6, false}}};
    CHECK(probe(curve, 20.0).r_star == 0.8);
    CHECK(probe(curve, 21.0).r_star == 0.6);
    CHECK(probe(curve, 0.0).r_star == 1.0);
    auto beyond = probe(curve, 40.0);
    CHECK(beyond.r_star == 0.6);
    CHECK(beyond.capacity_exceeded);
    CHECK_THROWS_AS(probe(curve, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(probe(SplitCurve{}, 1.0), std::invalid_argument);
}

TEST_CASE("probe is monotone in demand on non-increasing curves", "[splitplan]") {
    auto cfg = stock_system();
    auto curve = generate_curve(nominal_capacities(cfg), cfg, default_demand_grid(cfg));
    double prev = 2.0;
    for (double d = 0.0; d <= 50.0; d += 0.7) {
        double r = probe(curve, d).r_star;
        CHECK(r <= prev + 1e-12);
        prev = r;
    }
}

TEST_CASE("split curve sets survive a save/load round trip", "[splitplan]") {
    auto cfg = stock_system();
    auto set = generate_set(cfg, small_grid(cfg));
    TempFile file("salvage_set_roundtrip.json");
    save_set(set, file.path);
    auto loaded = load_set(file.path);
    CHECK(loaded == set);
}

TEST_CASE("set loading canonicalizes curve order", "[splitplan]") {
    auto cfg = stock_system();
    auto set = generate_set(cfg, small_grid(cfg));
    nlohmann::json j = to_json(set);
    std::reverse(j["curves"].begin(), j["curves"].end());
    auto reloaded = split_curve_set_from_json(j);
    CHECK(reloaded == set);
}

TEST_CASE("set loading rejects schema violations", "[splitplan]") {
    auto cfg = stock_system();
    auto set = generate_set(cfg, small_grid(cfg));
    nlohmann::json good = to_json(set);

    nlohmann::json bad_version = good;
    bad_version["schema_version"] = 2;
    CHECK_THROWS_AS(split_curve_set_from_json(bad_version), ConfigError);

    nlohmann::json missing = good;
    missing.erase("grid_spec");
    CHECK_THROWS_AS(split_curve_set_from_json(missing), ConfigError);

    nlohmann::json short_curves = good;
    short_curves["curves"].erase(0);
    CHECK_THROWS_AS(split_curve_set_from_json(short_curves), ConfigError);

    nlohmann::json off_grid = good;
    off_grid["curves"][0]["entries"][0]["r_star"] = 0.512;
    CHECK_THROWS_AS(split_curve_set_from_json(off_grid), ConfigError);

    nlohmann::json bad_demand = good;
    bad_demand["curves"][0]["entries"][0]["demand_gbps"] = 4.75;
    CHECK_THROWS_AS(split_curve_set_from_json(bad_demand), ConfigError);

    TempFile truncated("salvage_set_truncated.json");
    {
        std::ofstream out(truncated.path);
        out << good.dump().substr(0, 200);
    }
    CHECK_THROWS_AS(load_set(truncated.path), ParseError);
}
