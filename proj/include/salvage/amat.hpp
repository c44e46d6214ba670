#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "salvage/core.hpp"
#include "salvage/curves.hpp"
#include "salvage/link.hpp"

namespace salvage {

/// One server's memory provisioning: primary and salvage peak bandwidths,
/// their load-latency curves, the salvage link, and the read share of the
/// access mix. Treated as immutable once built.
struct SystemConfig {
    SystemConfig(double b_p_gbps, double b_s_gbps, LoadLatencyCurve primary,
                 LoadLatencyCurve salvage, LinkSpec link_spec, double rho_rd_frac = 0.75)
        : b_p(b_p_gbps),
          b_s(b_s_gbps),
          primary_curve(std::move(primary)),
          salvage_curve(std::move(salvage)),
          link(std::move(link_spec)),
          rho_rd(rho_rd_frac) {
        if (b_p <= 0.0 || b_s <= 0.0)
            throw std::invalid_argument("system: peak bandwidths must be positive");
        if (!(rho_rd >= 0.0 && rho_rd <= 1.0))
            throw std::invalid_argument("system: rho_rd must lie in [0,1]");
    }

    double b_p;
    double b_s;
    LoadLatencyCurve primary_curve;
    LoadLatencyCurve salvage_curve;
    LinkSpec link;
    double rho_rd;
};

/// Fraction of traffic directed to primary memory.
struct TrafficSplit {
    explicit TrafficSplit(double value) : r(value) {
        if (!(r >= 0.0 && r <= 1.0))
            throw std::invalid_argument("traffic split must lie in [0,1]");
    }
    double r;
};

/// Remaining capacity on the four contended resources. Doubles as the
/// quantization key for offline split-curve sets.
struct ResourceAvailability {
    double b_p_avail = 0.0;
    double b_s_avail = 0.0;
    double link_ing_avail = 0.0;
    double link_egr_avail = 0.0;

    bool operator==(const ResourceAvailability&) const = default;
};

inline ResourceAvailability nominal_capacities(const SystemConfig& cfg) {
    return {cfg.b_p, cfg.b_s, cfg.link.raw_bw_per_dir(), cfg.link.raw_bw_per_dir()};
}

struct Utilizations {
    double u_p = 0.0;
    double u_s = 0.0;
    double u_ing = 0.0;
    double u_egr = 0.0;
};

namespace detail {
// Zero load on a zero-capacity axis is idle, not saturated.
inline double safe_ratio(double load, double cap) {
    if (load == 0.0)
        return 0.0;
    if (cap <= 0.0)
        return kInfeasibleLatency;
    return load / cap;
}
} // namespace detail

/// Device and link utilizations induced by splitting demand d at ratio r,
/// against explicit capacities (nominal or residual).
inline Utilizations utilizations(TrafficSplit split, double d_gbps, const SystemConfig& cfg,
                                 const ResourceAvailability& caps) {
    if (d_gbps < 0.0)
        throw std::invalid_argument("utilizations: demand must be non-negative");
    const double r = split.r;
    const double eta = link_efficiency(cfg.link);
    double salvage_demand = (1.0 - r) * d_gbps;
    Utilizations u;
    u.u_p = detail::safe_ratio(r * d_gbps, caps.b_p_avail);
    u.u_s = detail::safe_ratio(salvage_demand, caps.b_s_avail);
    u.u_ing = detail::safe_ratio(salvage_demand * cfg.rho_rd / eta, caps.link_ing_avail);
    u.u_egr = detail::safe_ratio(salvage_demand * (1.0 - cfg.rho_rd) / eta, caps.link_egr_avail);
    return u;
}

inline Utilizations utilizations(TrafficSplit split, double d_gbps, const SystemConfig& cfg) {
    return utilizations(split, d_gbps, cfg, nominal_capacities(cfg));
}

/// Mean access latency for split r at demand d:
///   r * L_P(u_p) + (1-r) * [L_S(u_s) + L_ing(u_ing) + L_egr(u_egr)]
/// Returns kInfeasibleLatency when any loaded component saturates.
inline double amat_of(TrafficSplit split, double d_gbps, const SystemConfig& cfg,
                      const ResourceAvailability& caps) {
    const Utilizations u = utilizations(split, d_gbps, cfg, caps);
    const double r = split.r;
    double total = 0.0;
    if (r > 0.0) {
        double lp = !is_feasible(u.u_p) ? kInfeasibleLatency : cfg.primary_curve.latency_at(u.u_p);
        if (!is_feasible(lp))
            return kInfeasibleLatency;
        total += r * lp;
    }
    if (r < 1.0) {
        double ls = !is_feasible(u.u_s) ? kInfeasibleLatency : cfg.salvage_curve.latency_at(u.u_s);
        double li = !is_feasible(u.u_ing) ? kInfeasibleLatency
                                          : cfg.link.ingress_curve().latency_at(u.u_ing);
        double le = !is_feasible(u.u_egr) ? kInfeasibleLatency
                                          : cfg.link.egress_curve().latency_at(u.u_egr);
        if (!is_feasible(ls) || !is_feasible(li) || !is_feasible(le))
            return kInfeasibleLatency;
        total += (1.0 - r) * (ls + li + le);
    }
    return total;
}

inline double amat_of(TrafficSplit split, double d_gbps, const SystemConfig& cfg) {
    return amat_of(split, d_gbps, cfg, nominal_capacities(cfg));
}

/// Candidate splits {step, 2*step, ..., 1.0}. Zero is never a candidate; the
/// endpoint 1.0 always is.
inline std::vector<double> split_grid(double grid_step) {
    if (!(grid_step > 0.0 && grid_step <= 1.0))
        throw std::invalid_argument("split grid step must lie in (0,1]");
    std::vector<double> grid;
    for (std::size_t k = 1; static_cast<double>(k) * grid_step <= 1.0 + 1e-9; ++k)
        grid.push_back(std::min(static_cast<double>(k) * grid_step, 1.0));
    if (grid.empty() || grid.back() < 1.0 - 1e-12)
        grid.push_back(1.0);
    return grid;
}

struct SplitResult {
    double r = 1.0;
    bool capacity_exceeded = false;
    double amat_ns = kInfeasibleLatency; // of the chosen split
};

/// Exhaustive argmin of amat_of over the candidate grid; ties break toward
/// larger r (primary needs no link and leaves the salvage link to I/O). When
/// no candidate is feasible, falls back to the candidate that minimizes the
/// worst per-resource utilization and flags the result.
inline SplitResult optimal_split(double d_gbps, const SystemConfig& cfg,
                                 const ResourceAvailability& caps, double grid_step = 0.05) {
    if (d_gbps < 0.0)
        throw std::invalid_argument("optimal_split: demand must be non-negative");
    const std::vector<double> grid = split_grid(grid_step);
    SplitResult best;
    bool any_feasible = false;
    double best_amat = kInfeasibleLatency;
    for (double r : grid) {
        double a = amat_of(TrafficSplit(r), d_gbps, cfg, caps);
        if (is_feasible(a) && (!any_feasible || a <= best_amat)) {
            any_feasible = true;
            best_amat = a;
            best = {r, false, a};
        }
    }
    if (any_feasible)
        return best;
    double best_pressure = kInfeasibleLatency;
    SplitResult fallback{1.0, true, kInfeasibleLatency};
    for (double r : grid) {
        Utilizations u = utilizations(TrafficSplit(r), d_gbps, cfg, caps);
        double pressure = std::max({u.u_p, u.u_s, u.u_ing, u.u_egr});
        if (pressure <= best_pressure) {
            best_pressure = pressure;
            fallback.r = r;
        }
    }
    return fallback;
}

inline SplitResult optimal_split(double d_gbps, const SystemConfig& cfg, double grid_step = 0.05) {
    return optimal_split(d_gbps, cfg, nominal_capacities(cfg), grid_step);
}

} // namespace salvage
