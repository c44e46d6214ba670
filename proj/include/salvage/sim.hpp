#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "salvage/amat.hpp"
#include "salvage/core.hpp"

namespace salvage {

/// 1000 CPU cycles at 2.4 GHz.
inline constexpr double kDefaultIntervalNs = 1000.0 / 2.4;

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

enum class Tier { primary, salvage };

/// Weighted first-touch page placement: primary with probability r_star.
inline Tier first_touch_place(double r_star, std::mt19937_64& rng) {
    if (!(r_star >= 0.0 && r_star <= 1.0))
        throw std::invalid_argument("first_touch_place: r_star must lie in [0,1]");
    return uniform01(rng) < r_star ? Tier::primary : Tier::salvage;
}

struct PlacementState {
    std::size_t primary_pages = 0;
    std::size_t salvage_pages = 0;

    double achieved_split() const {
        std::size_t total = primary_pages + salvage_pages;
        return total == 0 ? 1.0 : static_cast<double>(primary_pages) / static_cast<double>(total);
    }
};

inline PlacementState place_pages(double r_star, std::size_t page_count, std::mt19937_64& rng) {
    PlacementState state;
    for (std::size_t i = 0; i < page_count; ++i) {
        if (first_touch_place(r_star, rng) == Tier::primary)
            ++state.primary_pages;
        else
            ++state.salvage_pages;
    }
    return state;
}

/// Poisson packet arrivals in 64B quanta with mean level * peak * interval.
inline std::uint64_t io_sample(double level, double peak_gbps, double interval_ns,
                               std::mt19937_64& rng) {
    if (!(level >= 0.0 && level <= 1.0))
        throw std::invalid_argument("io_sample: level must lie in [0,1]");
    if (peak_gbps < 0.0 || interval_ns <= 0.0)
        throw std::invalid_argument("io_sample: peak and interval must be positive");
    if (level == 0.0)
        return 0;
    double mean_bytes = level * peak_gbps * interval_ns; // GB/s * ns = bytes
    std::poisson_distribution<std::uint64_t> packets(mean_bytes / 64.0);
    return 64 * packets(rng);
}

/// I/O volume crossing the link in one interval.
struct IoTraffic {
    std::uint64_t rx_bytes = 0;
    std::uint64_t tx_bytes = 0;
};

struct Arbitration {
    double granted_ing_gbps = 0.0; // memory traffic granted per direction
    double granted_egr_gbps = 0.0;
    double backlog_ing_gbps = 0.0; // unserved memory demand, carried forward
    double backlog_egr_gbps = 0.0;
    double io_granted_ing_gbps = 0.0;
    double io_granted_egr_gbps = 0.0;
    bool io_capped_ing = false; // I/O demand alone exceeded the direction
    bool io_capped_egr = false;
};

/// I/O-priority multiplexing: per direction, I/O takes what it needs first
/// (capped at capacity) and memory traffic gets the residue. Unserved memory
/// demand becomes backlog for the next interval.
inline Arbitration arbitrate(const LinkSpec& link, const IoTraffic& io, double interval_ns,
                             double mem_ing_demand_gbps, double mem_egr_demand_gbps) {
    if (interval_ns <= 0.0)
        throw std::invalid_argument("arbitrate: interval must be positive");
    if (mem_ing_demand_gbps < 0.0 || mem_egr_demand_gbps < 0.0)
        throw std::invalid_argument("arbitrate: memory demands must be non-negative");
    const double cap = link.raw_bw_per_dir();
    Arbitration out;
    const double io_ing = static_cast<double>(io.rx_bytes) / interval_ns;
    const double io_egr = static_cast<double>(io.tx_bytes) / interval_ns;
    out.io_capped_ing = io_ing > cap;
    out.io_capped_egr = io_egr > cap;
    out.io_granted_ing_gbps = std::min(io_ing, cap);
    out.io_granted_egr_gbps = std::min(io_egr, cap);
    out.granted_ing_gbps = std::min(mem_ing_demand_gbps, cap - out.io_granted_ing_gbps);
    out.granted_egr_gbps = std::min(mem_egr_demand_gbps, cap - out.io_granted_egr_gbps);
    out.backlog_ing_gbps = mem_ing_demand_gbps - out.granted_ing_gbps;
    out.backlog_egr_gbps = mem_egr_demand_gbps - out.granted_egr_gbps;
    return out;
}

/// One simulation scenario. io levels are fractions of the link's raw
/// per-direction bandwidth; spill fractions say how much of the I/O payload
/// also traverses primary memory (the LLC pass-through abstraction).
struct SimConfig {
    SystemConfig system;
    double r_star = 1.0;
    double demand_mean_gbps = 0.0;
    double demand_cv = 0.0;
    std::optional<double> rho_rd{}; // defaults to system.rho_rd
    double io_rx_level = 0.0;
    double io_tx_level = 0.0;
    double io_mem_spill_rx = 1.0;
    double io_mem_spill_tx = 1.0;
    double interval_ns = kDefaultIntervalNs;
    std::size_t n_intervals = 1000;
    std::uint64_t seed = 0;
    std::size_t page_count = 100000;

    double effective_rho_rd() const { return rho_rd ? *rho_rd : system.rho_rd; }

    void validate() const {
        if (!(r_star >= 0.0 && r_star <= 1.0))
            throw std::invalid_argument("sim: r_star must lie in [0,1]");
        if (demand_mean_gbps < 0.0)
            throw std::invalid_argument("sim: demand mean must be non-negative");
        if (demand_cv < 0.0)
            throw std::invalid_argument("sim: demand cv must be non-negative");
        if (rho_rd && !(*rho_rd >= 0.0 && *rho_rd <= 1.0))
            throw std::invalid_argument("sim: rho_rd must lie in [0,1]");
        for (double level : {io_rx_level, io_tx_level})
            if (!(level >= 0.0 && level <= 1.0))
                throw std::invalid_argument("sim: io levels must lie in [0,1]");
        if (io_mem_spill_rx < 0.0 || io_mem_spill_tx < 0.0)
            throw std::invalid_argument("sim: spill fractions must be non-negative");
        if (interval_ns <= 0.0)
            throw std::invalid_argument("sim: interval must be positive");
        if (n_intervals < 1)
            throw std::invalid_argument("sim: need at least 1 interval");
        if (page_count < 1)
            throw std::invalid_argument("sim: need at least 1 page");
    }
};

/// Per-interval outcome. amat always equals service + queuing + cxl by
/// construction; queuing is measured against each memory's unloaded latency
/// and cxl covers the salvage accesses' time on the link, base overhead
/// included. The extra demand/grant fields are not part of the CSV schema
/// but make conservation checkable from the record stream.
struct IntervalRecord {
    std::size_t interval = 0;
    double amat_ns = 0.0;
    double service_ns = 0.0;
    double queuing_ns = 0.0;
    double cxl_ns = 0.0;
    double u_p = 0.0;
    double u_s = 0.0;
    double u_ing = 0.0;
    double u_egr = 0.0;
    double backlog_ing_gbps = 0.0; // remaining after this interval
    double backlog_egr_gbps = 0.0;
    double achieved_split = 1.0;

    double demand_gbps = 0.0;
    double io_rx_gbps = 0.0;
    double io_tx_gbps = 0.0;
    double mem_ing_demand_gbps = 0.0; // new salvage load plus carried backlog
    double mem_egr_demand_gbps = 0.0;
    double granted_ing_gbps = 0.0;
    double granted_egr_gbps = 0.0;
    bool io_capped = false;
};

struct SimSummary {
    double mean_amat_ns = 0.0;
    double mean_service_ns = 0.0;
    double mean_queuing_ns = 0.0;
    double mean_cxl_ns = 0.0;
    double stddev_amat_ns = 0.0;
    double p95_amat_ns = 0.0;
    double achieved_split = 1.0;
    double mean_u_p = 0.0;
    double mean_u_s = 0.0;
    double mean_u_ing = 0.0;
    double mean_u_egr = 0.0;
    double final_backlog_ing_gbps = 0.0;
    double final_backlog_egr_gbps = 0.0;
    std::size_t saturated_intervals = 0;
    std::size_t io_capped_intervals = 0;
    std::size_t n_intervals = 0;
};

struct SimMetrics {
    std::vector<IntervalRecord> intervals;
    SimSummary summary;
};

/// Sequential interval simulation over one scenario. Pages are placed up
/// front by weighted first touch; each interval then samples demand and I/O,
/// arbitrates the link, and reads the load-latency curves at the realized
/// utilizations. Deterministic for a fixed (config, seed).
class Simulation {
  public:
    explicit Simulation(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
        cfg_.validate();
        placement_ = place_pages(cfg_.r_star, cfg_.page_count, rng_);
    }

    const PlacementState& placement() const { return placement_; }
    const SimConfig& config() const { return cfg_; }

    IntervalRecord step() {
        const SystemConfig& sys = cfg_.system;
        const double eta = link_efficiency(sys.link);
        const double rho = cfg_.effective_rho_rd();
        const double raw = sys.link.raw_bw_per_dir();
        const double r = placement_.achieved_split();

        IntervalRecord rec;
        rec.interval = interval_++;
        rec.achieved_split = r;

        // Draw order per interval: demand multiplier, I/O rx, I/O tx.
        double multiplier = 1.0;
        if (cfg_.demand_cv > 0.0)
            multiplier = std::max(0.0, 1.0 + noise_(rng_) * cfg_.demand_cv);
        const double demand = cfg_.demand_mean_gbps * multiplier;
        rec.demand_gbps = demand;

        IoTraffic io;
        io.rx_bytes = io_sample(cfg_.io_rx_level, raw, cfg_.interval_ns, rng_);
        io.tx_bytes = io_sample(cfg_.io_tx_level, raw, cfg_.interval_ns, rng_);
        rec.io_rx_gbps = static_cast<double>(io.rx_bytes) / cfg_.interval_ns;
        rec.io_tx_gbps = static_cast<double>(io.tx_bytes) / cfg_.interval_ns;

        double primary_demand = r * demand +
                                cfg_.io_mem_spill_rx * rec.io_rx_gbps +
                                cfg_.io_mem_spill_tx * rec.io_tx_gbps;
        double salvage_demand = (1.0 - r) * demand;

        rec.mem_ing_demand_gbps = salvage_demand * rho / eta + backlog_ing_;
        rec.mem_egr_demand_gbps = salvage_demand * (1.0 - rho) / eta + backlog_egr_;
        Arbitration arb = arbitrate(sys.link, io, cfg_.interval_ns, rec.mem_ing_demand_gbps,
                                    rec.mem_egr_demand_gbps);
        backlog_ing_ = arb.backlog_ing_gbps;
        backlog_egr_ = arb.backlog_egr_gbps;
        rec.backlog_ing_gbps = arb.backlog_ing_gbps;
        rec.backlog_egr_gbps = arb.backlog_egr_gbps;
        rec.granted_ing_gbps = arb.granted_ing_gbps;
        rec.granted_egr_gbps = arb.granted_egr_gbps;
        rec.io_capped = arb.io_capped_ing || arb.io_capped_egr;

        rec.u_p = detail::safe_ratio(primary_demand, sys.b_p);
        rec.u_s = detail::safe_ratio(eta * (arb.granted_ing_gbps + arb.granted_egr_gbps), sys.b_s);
        rec.u_ing = (arb.io_granted_ing_gbps + arb.granted_ing_gbps) / raw;
        rec.u_egr = (arb.io_granted_egr_gbps + arb.granted_egr_gbps) / raw;

        double service = 0.0, queuing = 0.0, cxl = 0.0;
        if (r > 0.0) {
            double lp = !is_feasible(rec.u_p) ? kInfeasibleLatency
                                              : sys.primary_curve.latency_at(rec.u_p);
            double lp0 = sys.primary_curve.unloaded_latency_ns();
            service += r * lp0;
            queuing += r * (lp - lp0);
        }
        if (r < 1.0) {
            double ls = !is_feasible(rec.u_s) ? kInfeasibleLatency
                                              : sys.salvage_curve.latency_at(rec.u_s);
            double ls0 = sys.salvage_curve.unloaded_latency_ns();
            double li = sys.link.ingress_curve().latency_at(rec.u_ing);
            double le = sys.link.egress_curve().latency_at(rec.u_egr);
            service += (1.0 - r) * ls0;
            queuing += (1.0 - r) * (ls - ls0);
            cxl += (1.0 - r) * (li + le);
        }
        rec.service_ns = service;
        rec.queuing_ns = queuing;
        rec.cxl_ns = cxl;
        rec.amat_ns = service + queuing + cxl;
        return rec;
    }

    SimMetrics run() {
        SimMetrics metrics;
        metrics.intervals.reserve(cfg_.n_intervals);
        for (std::size_t i = 0; i < cfg_.n_intervals; ++i)
            metrics.intervals.push_back(step());
        metrics.summary = summarize(metrics.intervals);
        return metrics;
    }

  private:
    SimSummary summarize(const std::vector<IntervalRecord>& recs) const {
        SimSummary s;
        s.n_intervals = recs.size();
        s.achieved_split = placement_.achieved_split();
        double sum_service = 0.0, sum_queuing = 0.0, sum_cxl = 0.0;
        double sum_up = 0.0, sum_us = 0.0, sum_ui = 0.0, sum_ue = 0.0;
        for (const auto& r : recs) {
            sum_service += r.service_ns;
            sum_queuing += r.queuing_ns;
            sum_cxl += r.cxl_ns;
            sum_up += r.u_p;
            sum_us += r.u_s;
            sum_ui += r.u_ing;
            sum_ue += r.u_egr;
            if (!is_feasible(r.amat_ns))
                ++s.saturated_intervals;
            if (r.io_capped)
                ++s.io_capped_intervals;
        }
        const double n = static_cast<double>(recs.size());
        s.mean_service_ns = sum_service / n;
        s.mean_queuing_ns = sum_queuing / n;
        s.mean_cxl_ns = sum_cxl / n;
        // Keeps the breakdown identity exact in the summary as well.
        s.mean_amat_ns = s.mean_service_ns + s.mean_queuing_ns + s.mean_cxl_ns;
        s.mean_u_p = sum_up / n;
        s.mean_u_s = sum_us / n;
        s.mean_u_ing = sum_ui / n;
        s.mean_u_egr = sum_ue / n;
        if (s.saturated_intervals > 0) {
            // A stream containing saturated intervals has unbounded moments.
            s.stddev_amat_ns = kInfeasibleLatency;
        } else {
            double mean = s.mean_amat_ns, acc = 0.0;
            for (const auto& r : recs)
                acc += (r.amat_ns - mean) * (r.amat_ns - mean);
            s.stddev_amat_ns = std::sqrt(acc / n);
        }
        std::vector<double> amats;
        amats.reserve(recs.size());
        for (const auto& r : recs)
            amats.push_back(r.amat_ns);
        std::sort(amats.begin(), amats.end());
        std::size_t idx = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(amats.size())));
        s.p95_amat_ns = amats[std::min(amats.size() - 1, idx == 0 ? 0 : idx - 1)];
        s.final_backlog_ing_gbps = recs.empty() ? 0.0 : recs.back().backlog_ing_gbps;
        s.final_backlog_egr_gbps = recs.empty() ? 0.0 : recs.back().backlog_egr_gbps;
        return s;
    }

    SimConfig cfg_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_{0.0, 1.0};
    PlacementState placement_;
    double backlog_ing_ = 0.0;
    double backlog_egr_ = 0.0;
    std::size_t interval_ = 0;
};

inline SimMetrics run(const SimConfig& cfg) { return Simulation(cfg).run(); }

inline constexpr std::string_view kMetricsCsvHeader =
    "interval,amat_ns,service_ns,queuing_ns,cxl_ns,u_p,u_s,u_ing,u_egr,backlog_ing,backlog_egr,"
    "achieved_split";

inline std::string metrics_csv(const std::vector<IntervalRecord>& intervals) {
    std::string out{kMetricsCsvHeader};
    out += '\n';
    for (const auto& r : intervals) {
        out += std::to_string(r.interval);
        for (double v : {r.amat_ns, r.service_ns, r.queuing_ns, r.cxl_ns, r.u_p, r.u_s, r.u_ing,
                         r.u_egr, r.backlog_ing_gbps, r.backlog_egr_gbps, r.achieved_split}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::json to_json(const SimSummary& s) {
    return {{"mean_amat_ns", s.mean_amat_ns},
            {"mean_service_ns", s.mean_service_ns},
            {"mean_queuing_ns", s.mean_queuing_ns},
            {"mean_cxl_ns", s.mean_cxl_ns},
            {"stddev_amat_ns", s.stddev_amat_ns},
            {"p95_amat_ns", s.p95_amat_ns},
            {"achieved_split", s.achieved_split},
            {"mean_u_p", s.mean_u_p},
            {"mean_u_s", s.mean_u_s},
            {"mean_u_ing", s.mean_u_ing},
            {"mean_u_egr", s.mean_u_egr},
            {"final_backlog_ing_gbps", s.final_backlog_ing_gbps},
            {"final_backlog_egr_gbps", s.final_backlog_egr_gbps},
            {"saturated_intervals", s.saturated_intervals},
            {"io_capped_intervals", s.io_capped_intervals},
            {"n_intervals", s.n_intervals}};
}

} // namespace salvage
