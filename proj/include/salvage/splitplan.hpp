#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "salvage/amat.hpp"
#include "salvage/core.hpp"

namespace salvage {

struct SplitCurveEntry {
    double demand_gbps = 0.0;
    double r_star = 1.0;
    bool capacity_exceeded = false;

    bool operator==(const SplitCurveEntry&) const = default;
};

/// Optimal split as a function of demand, for one resource-availability
/// point. Entries are sorted by strictly increasing demand.
struct SplitCurve {
    std::vector<SplitCurveEntry> entries;

    bool operator==(const SplitCurve&) const = default;
};

/// Conservative demand probe: rounds the demand up to the next grid entry;
/// past the last entry the result is pinned there with the capacity flag
/// forced on.
inline SplitCurveEntry probe(const SplitCurve& curve, double d_gbps) {
    if (d_gbps < 0.0)
        throw std::invalid_argument("probe: demand must be non-negative");
    if (curve.entries.empty())
        throw std::invalid_argument("probe: empty curve");
    const double eps = 1e-9 * std::max(1.0, d_gbps);
    for (const auto& e : curve.entries)
        if (e.demand_gbps >= d_gbps - eps)
            return e;
    SplitCurveEntry last = curve.entries.back();
    last.capacity_exceeded = true;
    return last;
}

/// Quantization grid for availability keys plus the demand grid the curves
/// are evaluated on. Fraction axes are sorted ascending; each fraction is a
/// share of the corresponding nominal capacity.
struct AvailabilityGridSpec {
    ResourceAvailability nominal;
    std::array<std::vector<double>, 4> fractions; // b_p, b_s, link_ing, link_egr
    std::vector<double> demand_grid_gbps;
    double r_grid_step = 0.05;

    static constexpr std::array<const char*, 4> kAxisNames = {"b_p", "b_s", "link_ing",
                                                              "link_egr"};

    std::size_t cardinality() const {
        std::size_t n = 1;
        for (const auto& axis : fractions)
            n *= axis.size();
        return n;
    }

    ResourceAvailability availability_at(std::size_t index) const {
        std::array<std::size_t, 4> idx{};
        for (int a = 3; a >= 0; --a) {
            idx[static_cast<std::size_t>(a)] = index % fractions[static_cast<std::size_t>(a)].size();
            index /= fractions[static_cast<std::size_t>(a)].size();
        }
        return {fractions[0][idx[0]] * nominal.b_p_avail, fractions[1][idx[1]] * nominal.b_s_avail,
                fractions[2][idx[2]] * nominal.link_ing_avail,
                fractions[3][idx[3]] * nominal.link_egr_avail};
    }

    void validate() const {
        if (nominal.b_p_avail <= 0.0 || nominal.b_s_avail <= 0.0 ||
            nominal.link_ing_avail <= 0.0 || nominal.link_egr_avail <= 0.0)
            throw std::invalid_argument("grid: nominal capacities must be positive");
        for (std::size_t a = 0; a < 4; ++a) {
            const auto& axis = fractions[a];
            if (axis.empty())
                throw std::invalid_argument(std::string("grid: empty fraction axis ") +
                                            kAxisNames[a]);
            for (std::size_t i = 0; i < axis.size(); ++i) {
                if (!(axis[i] > 0.0 && axis[i] <= 1.0))
                    throw std::invalid_argument(std::string("grid: fractions on ") + kAxisNames[a] +
                                                " must lie in (0,1]");
                if (i > 0 && axis[i] <= axis[i - 1])
                    throw std::invalid_argument(std::string("grid: fractions on ") + kAxisNames[a] +
                                                " must be strictly increasing");
            }
        }
        if (demand_grid_gbps.empty())
            throw std::invalid_argument("grid: demand grid must be non-empty");
        for (std::size_t i = 0; i < demand_grid_gbps.size(); ++i) {
            if (demand_grid_gbps[i] < 0.0)
                throw std::invalid_argument("grid: demands must be non-negative");
            if (i > 0 && demand_grid_gbps[i] <= demand_grid_gbps[i - 1])
                throw std::invalid_argument("grid: demand grid must be strictly increasing");
        }
        if (!(r_grid_step > 0.0 && r_grid_step <= 1.0))
            throw std::invalid_argument("grid: r grid step must lie in (0,1]");
    }

    bool operator==(const AvailabilityGridSpec&) const = default;
};

inline std::vector<double> default_availability_fractions() { return {0.25, 0.5, 0.75, 1.0}; }

/// Demand grid spanning a tenth of primary bandwidth up to 1.4x the combined
/// primary+salvage capacity, so the curve tails record capacity refusals.
inline std::vector<double> default_demand_grid(const SystemConfig& cfg, std::size_t n_points = 24) {
    if (n_points < 2)
        throw std::invalid_argument("demand grid needs at least 2 points");
    double lo = 0.1 * cfg.b_p;
    double hi = 1.4 * (cfg.b_p + cfg.b_s);
    std::vector<double> grid;
    grid.reserve(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
        grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1));
    return grid;
}

inline AvailabilityGridSpec default_grid_spec(const SystemConfig& cfg) {
    AvailabilityGridSpec spec;
    spec.nominal = nominal_capacities(cfg);
    spec.fractions = {default_availability_fractions(), default_availability_fractions(),
                      default_availability_fractions(), default_availability_fractions()};
    spec.demand_grid_gbps = default_demand_grid(cfg);
    return spec;
}

/// One optimal-split curve for a fixed availability point: optimal_split at
/// every demand on the grid, with capacities scaled down to what is left.
inline SplitCurve generate_curve(const ResourceAvailability& avail, const SystemConfig& base_cfg,
                                 const std::vector<double>& demand_grid_gbps,
                                 double r_grid_step = 0.05) {
    if (demand_grid_gbps.empty())
        throw std::invalid_argument("generate_curve: demand grid must be non-empty");
    const ResourceAvailability nominal = nominal_capacities(base_cfg);
    const double tol = 1e-9;
    if (avail.b_p_avail < 0.0 || avail.b_s_avail < 0.0 || avail.link_ing_avail < 0.0 ||
        avail.link_egr_avail < 0.0)
        throw std::invalid_argument("generate_curve: availability must be non-negative");
    if (avail.b_p_avail > nominal.b_p_avail * (1.0 + tol) ||
        avail.b_s_avail > nominal.b_s_avail * (1.0 + tol) ||
        avail.link_ing_avail > nominal.link_ing_avail * (1.0 + tol) ||
        avail.link_egr_avail > nominal.link_egr_avail * (1.0 + tol))
        throw std::invalid_argument("generate_curve: availability exceeds nominal capacity");
    SplitCurve curve;
    curve.entries.reserve(demand_grid_gbps.size());
    double prev = -1.0;
    for (double d : demand_grid_gbps) {
        if (d <= prev)
            throw std::invalid_argument("generate_curve: demand grid must be ascending");
        prev = d;
        SplitResult res = optimal_split(d, base_cfg, avail, r_grid_step);
        curve.entries.push_back({d, res.r, res.capacity_exceeded});
    }
    return curve;
}

/// The offline table: one SplitCurve per availability grid point, in the
/// grid's cartesian enumeration order.
struct SplitCurveSet {
    AvailabilityGridSpec grid;
    std::vector<SplitCurve> curves; // index-aligned with grid.availability_at

    bool operator==(const SplitCurveSet&) const = default;
};

inline constexpr std::size_t kDefaultCurveSetCap = 4096;

/// Cartesian enumeration of the availability grid, one generate_curve each.
/// Refuses grids whose cardinality exceeds the safety cap.
inline SplitCurveSet generate_set(const SystemConfig& base_cfg, AvailabilityGridSpec grid,
                                  std::size_t max_curves = kDefaultCurveSetCap) {
    grid.validate();
    for (auto& axis : grid.fractions)
        std::sort(axis.begin(), axis.end());
    const std::size_t n = grid.cardinality();
    if (n > max_curves)
        throw CapacityError("availability grid cardinality " + std::to_string(n) +
                            " exceeds safety cap " + std::to_string(max_curves));
    SplitCurveSet set;
    set.grid = std::move(grid);
    set.curves.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        set.curves.push_back(generate_curve(set.grid.availability_at(i), base_cfg,
                                            set.grid.demand_grid_gbps, set.grid.r_grid_step));
    return set;
}

struct CurveSelection {
    ResourceAvailability key; // the quantized grid point actually used
    const SplitCurve* curve = nullptr;
};

/// Quantizes each availability axis DOWN to the nearest grid point (never
/// assume more headroom than exists) and returns that curve.
inline CurveSelection select_curve(const SplitCurveSet& set, const ResourceAvailability& current) {
    const auto& grid = set.grid;
    const std::array<double, 4> nominal = {grid.nominal.b_p_avail, grid.nominal.b_s_avail,
                                           grid.nominal.link_ing_avail, grid.nominal.link_egr_avail};
    const std::array<double, 4> cur = {current.b_p_avail, current.b_s_avail,
                                       current.link_ing_avail, current.link_egr_avail};
    std::array<std::size_t, 4> idx{};
    for (std::size_t a = 0; a < 4; ++a) {
        if (cur[a] > nominal[a] * (1.0 + 1e-9))
            throw std::invalid_argument(std::string("select_curve: availability on ") +
                                        AvailabilityGridSpec::kAxisNames[a] +
                                        " exceeds nominal capacity");
        double frac = cur[a] / nominal[a];
        const auto& axis = grid.fractions[a];
        bool found = false;
        for (std::size_t i = axis.size(); i-- > 0;) {
            if (axis[i] <= frac + 1e-9) {
                idx[a] = i;
                found = true;
                break;
            }
        }
        if (!found)
            throw CapacityError(std::string("no applicable curve: availability on ") +
                                AvailabilityGridSpec::kAxisNames[a] +
                                " is below the smallest grid point");
    }
    std::size_t flat = 0;
    for (std::size_t a = 0; a < 4; ++a)
        flat = flat * grid.fractions[a].size() + idx[a];
    return {grid.availability_at(flat), &set.curves[flat]};
}

// ---------------------------------------------------------------------------
// JSON persistence (schema_version 1)
// ---------------------------------------------------------------------------

inline constexpr int kSplitCurveSetSchemaVersion = 1;

inline nlohmann::json to_json(const ResourceAvailability& a) {
    return {{"b_p", a.b_p_avail},
            {"b_s", a.b_s_avail},
            {"link_ing", a.link_ing_avail},
            {"link_egr", a.link_egr_avail}};
}

inline ResourceAvailability availability_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("b_p") || !j.contains("b_s") || !j.contains("link_ing") ||
        !j.contains("link_egr"))
        throw ConfigError("availability object needs b_p, b_s, link_ing, link_egr");
    return {j.at("b_p").get<double>(), j.at("b_s").get<double>(), j.at("link_ing").get<double>(),
            j.at("link_egr").get<double>()};
}

inline nlohmann::json to_json(const SplitCurveSet& set) {
    nlohmann::json j;
    j["schema_version"] = kSplitCurveSetSchemaVersion;
    nlohmann::json grid;
    grid["nominal"] = to_json(set.grid.nominal);
    nlohmann::json fracs;
    for (std::size_t a = 0; a < 4; ++a)
        fracs[AvailabilityGridSpec::kAxisNames[a]] = set.grid.fractions[a];
    grid["fractions"] = fracs;
    grid["demand_grid_gbps"] = set.grid.demand_grid_gbps;
    grid["r_grid_step"] = set.grid.r_grid_step;
    j["grid_spec"] = grid;
    nlohmann::json curves = nlohmann::json::array();
    for (std::size_t i = 0; i < set.curves.size(); ++i) {
        nlohmann::json c;
        c["availability"] = to_json(set.grid.availability_at(i));
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : set.curves[i].entries)
            entries.push_back({{"demand_gbps", e.demand_gbps},
                               {"r_star", e.r_star},
                               {"capacity_exceeded", e.capacity_exceeded}});
        c["entries"] = std::move(entries);
        curves.push_back(std::move(c));
    }
    j["curves"] = std::move(curves);
    return j;
}

namespace detail {

inline bool on_r_grid(double r, double step) {
    if (r == 1.0)
        return true;
    double k = std::round(r / step);
    return k >= 1.0 && std::abs(r - k * step) <= 1e-9;
}

inline bool availability_close(const ResourceAvailability& a, const ResourceAvailability& b) {
    auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)); };
    return close(a.b_p_avail, b.b_p_avail) && close(a.b_s_avail, b.b_s_avail) &&
           close(a.link_ing_avail, b.link_ing_avail) && close(a.link_egr_avail, b.link_egr_avail);
}

} // namespace detail

/// Parses and validates a serialized set, canonicalizing curve order to the
/// grid's cartesian enumeration.
inline SplitCurveSet split_curve_set_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("schema_version"))
        throw ConfigError("split curve set: missing schema_version");
    int version = j.at("schema_version").get<int>();
    if (version != kSplitCurveSetSchemaVersion)
        throw ConfigError("split curve set: expected schema_version " +
                          std::to_string(kSplitCurveSetSchemaVersion) + ", got " +
                          std::to_string(version));
    if (!j.contains("grid_spec") || !j.contains("curves"))
        throw ConfigError("split curve set: missing grid_spec or curves");

    SplitCurveSet set;
    const auto& g = j.at("grid_spec");
    set.grid.nominal = availability_from_json(g.at("nominal"));
    for (std::size_t a = 0; a < 4; ++a)
        set.grid.fractions[a] =
            g.at("fractions").at(AvailabilityGridSpec::kAxisNames[a]).get<std::vector<double>>();
    set.grid.demand_grid_gbps = g.at("demand_grid_gbps").get<std::vector<double>>();
    set.grid.r_grid_step = g.at("r_grid_step").get<double>();
    set.grid.validate();

    const auto& curves_json = j.at("curves");
    if (!curves_json.is_array() || curves_json.size() != set.grid.cardinality())
        throw ConfigError("split curve set: expected " + std::to_string(set.grid.cardinality()) +
                          " curves, got " + std::to_string(curves_json.size()));

    // Accept any serialization order; re-slot each curve by its key.
    std::vector<SplitCurve> slots(set.grid.cardinality());
    std::vector<bool> filled(set.grid.cardinality(), false);
    for (const auto& c : curves_json) {
        ResourceAvailability key = availability_from_json(c.at("availability"));
        std::size_t slot = set.grid.cardinality();
        for (std::size_t i = 0; i < set.grid.cardinality(); ++i) {
            if (detail::availability_close(key, set.grid.availability_at(i))) {
                slot = i;
                break;
            }
        }
        if (slot == set.grid.cardinality())
            throw ConfigError("split curve set: curve availability not on the grid");
        if (filled[slot])
            throw ConfigError("split curve set: duplicate curve for one availability");
        SplitCurve curve;
        const auto& entries = c.at("entries");
        if (!entries.is_array() || entries.size() != set.grid.demand_grid_gbps.size())
            throw ConfigError("split curve set: entry count does not match demand grid");
        std::size_t ei = 0;
        for (const auto& e : entries) {
            SplitCurveEntry entry{e.at("demand_gbps").get<double>(), e.at("r_star").get<double>(),
                                  e.at("capacity_exceeded").get<bool>()};
            if (std::abs(entry.demand_gbps - set.grid.demand_grid_gbps[ei]) >
                1e-9 * std::max(1.0, set.grid.demand_grid_gbps[ei]))
                throw ConfigError("split curve set: entry demand not on the demand grid");
            if (!(entry.r_star >= 0.0 && entry.r_star <= 1.0) ||
                !detail::on_r_grid(entry.r_star, set.grid.r_grid_step))
                throw ConfigError("split curve set: r_star not on the split grid");
            curve.entries.push_back(entry);
            ++ei;
        }
        slots[slot] = std::move(curve);
        filled[slot] = true;
    }
    set.curves = std::move(slots);
    return set;
}

inline void save_set(const SplitCurveSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open for writing: " + path);
    out << to_json(set).dump(2) << '\n';
    if (!out)
        throw ConfigError("write failed: " + path);
}

inline SplitCurveSet load_set(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("split curve set " + path + ": " + e.what());
    }
    try {
        return split_curve_set_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("split curve set " + path + ": " + e.what());
    }
}

} // namespace salvage
