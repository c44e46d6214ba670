#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

#include "salvage/core.hpp"
#include "salvage/curves.hpp"

namespace salvage {

/// Transport metadata cost per 64B access, split by direction. Reads: a
/// request on egress, data plus a response header on ingress. Writes: data
/// plus a header on egress, a completion on ingress. The defaults are
/// calibrated so a 2:1 read/write mix delivers ~80% / ~40% of raw bandwidth
/// on RX / TX (with eta = 0.94 folded in).
struct MetadataModel {
    double rd_req_bytes = 16.0;     // egress, per read
    double rd_resp_hdr_bytes = 3.2; // ingress, per read, beyond the 64B data
    double wr_hdr_bytes = 54.4;     // egress, per write, beyond the 64B data
    double wr_cmpl_bytes = 16.0;    // ingress, per write

    bool operator==(const MetadataModel&) const = default;
};

inline constexpr double kAccessPayloadBytes = 64.0;

/// Full-duplex multiplexed serial link: raw per-direction bandwidth, flit
/// efficiency, transport metadata, and one load-latency curve per direction.
/// Immutable; all queries are pure.
class LinkSpec {
  public:
    LinkSpec(std::size_t lanes, double raw_bw_per_dir_gbps, double flit_payload_bytes,
             double flit_total_bytes, std::optional<double> eta, double base_overhead_ns,
             LoadLatencyCurve ingress_curve, LoadLatencyCurve egress_curve,
             MetadataModel meta = {})
        : lanes_(lanes),
          raw_bw_per_dir_(raw_bw_per_dir_gbps),
          flit_payload_(flit_payload_bytes),
          flit_total_(flit_total_bytes),
          eta_(eta),
          base_overhead_ns_(base_overhead_ns),
          ingress_(std::move(ingress_curve)),
          egress_(std::move(egress_curve)),
          meta_(meta) {
        if (lanes_ == 0)
            throw std::invalid_argument("link: lanes must be positive");
        if (raw_bw_per_dir_ <= 0.0)
            throw std::invalid_argument("link: raw bandwidth must be positive");
        if (flit_payload_ <= 0.0 || flit_payload_ > flit_total_)
            throw std::invalid_argument("link: flit payload must lie in (0, flit_total]");
        if (eta_ && !(*eta_ > 0.0 && *eta_ <= 1.0))
            throw std::invalid_argument("link: eta must lie in (0,1]");
        if (base_overhead_ns_ < 0.0)
            throw std::invalid_argument("link: base overhead must be non-negative");
        if (meta_.rd_req_bytes < 0.0 || meta_.rd_resp_hdr_bytes < 0.0 || meta_.wr_hdr_bytes < 0.0 ||
            meta_.wr_cmpl_bytes < 0.0)
            throw std::invalid_argument("link: metadata byte counts must be non-negative");
        // The per-direction unloaded latencies must account for exactly the
        // link's end-to-end zero-load premium.
        double zero_load = ingress_.unloaded_latency_ns() + egress_.unloaded_latency_ns();
        if (std::abs(zero_load - base_overhead_ns_) > 1e-6)
            throw std::invalid_argument(
                "link: ingress+egress zero-load latency must equal base_overhead_ns");
    }

    std::size_t lanes() const { return lanes_; }
    double raw_bw_per_dir() const { return raw_bw_per_dir_; }
    double flit_payload() const { return flit_payload_; }
    double flit_total() const { return flit_total_; }
    std::optional<double> configured_eta() const { return eta_; }
    double base_overhead_ns() const { return base_overhead_ns_; }
    const LoadLatencyCurve& ingress_curve() const { return ingress_; }
    const LoadLatencyCurve& egress_curve() const { return egress_; }
    const MetadataModel& meta() const { return meta_; }

  private:
    std::size_t lanes_;
    double raw_bw_per_dir_;
    double flit_payload_;
    double flit_total_;
    std::optional<double> eta_;
    double base_overhead_ns_;
    LoadLatencyCurve ingress_;
    LoadLatencyCurve egress_;
    MetadataModel meta_;
};

/// Configured efficiency when set, flit payload share otherwise.
inline double link_efficiency(const LinkSpec& spec) {
    if (spec.configured_eta())
        return *spec.configured_eta();
    return spec.flit_payload() / spec.flit_total();
}

struct DirectionBandwidth {
    double rx_eff_gbps = 0.0; // data payload the ingress direction can deliver
    double tx_eff_gbps = 0.0; // data payload the egress direction can deliver
};

/// Data-payload bandwidth each direction can deliver for a given read share
/// of the access mix, after flit efficiency and per-access metadata.
inline DirectionBandwidth effective_direction_bandwidth(const LinkSpec& spec,
                                                        double read_fraction) {
    if (!(read_fraction >= 0.0 && read_fraction <= 1.0))
        throw std::invalid_argument("effective_direction_bandwidth: read_fraction must lie in [0,1]");
    const double eta = link_efficiency(spec);
    const double raw = spec.raw_bw_per_dir();
    const MetadataModel& m = spec.meta();
    const double f = read_fraction;
    // Expected wire bytes per access, by direction.
    double wire_rx = f * (kAccessPayloadBytes + m.rd_resp_hdr_bytes) + (1.0 - f) * m.wr_cmpl_bytes;
    double wire_tx = f * m.rd_req_bytes + (1.0 - f) * (kAccessPayloadBytes + m.wr_hdr_bytes);
    DirectionBandwidth out;
    out.rx_eff_gbps = (f == 0.0) ? 0.0 : eta * raw * kAccessPayloadBytes * f / wire_rx;
    out.tx_eff_gbps = (f == 1.0) ? 0.0 : eta * raw * kAccessPayloadBytes * (1.0 - f) / wire_tx;
    return out;
}

struct DirectionUtilization {
    double u_ing = 0.0;
    double u_egr = 0.0;
};

/// Per-direction link utilization induced by salvage-memory traffic: reads
/// load ingress, writes load egress, each inflated by 1/eta, normalized by
/// the raw per-direction bandwidth so the link curves can consume it.
inline DirectionUtilization direction_utilization(const LinkSpec& spec, double salvage_demand_gbps,
                                                  double rho_rd) {
    if (salvage_demand_gbps < 0.0)
        throw std::invalid_argument("direction_utilization: demand must be non-negative");
    if (!(rho_rd >= 0.0 && rho_rd <= 1.0))
        throw std::invalid_argument("direction_utilization: rho_rd must lie in [0,1]");
    const double eta = link_efficiency(spec);
    double load_ing = salvage_demand_gbps * rho_rd / eta;
    double load_egr = salvage_demand_gbps * (1.0 - rho_rd) / eta;
    return {load_ing / spec.raw_bw_per_dir(), load_egr / spec.raw_bw_per_dir()};
}

struct LinkLatency {
    double l_ing_ns = 0.0; // either may be kInfeasibleLatency
    double l_egr_ns = 0.0;
};

inline LinkLatency link_latency(const LinkSpec& spec, double u_ing, double u_egr) {
    return {spec.ingress_curve().latency_at(u_ing), spec.egress_curve().latency_at(u_egr)};
}

/// Stock x16 link at 64 GB/s raw per direction with the zero-load premium
/// split evenly between ingress and egress.
inline LinkSpec make_default_link(double raw_bw_per_dir_gbps = 64.0, double base_overhead_ns = 100.0,
                                  double queue_ns = 50.0, double u_max = 0.95,
                                  std::size_t n_points = 20) {
    double half = base_overhead_ns / 2.0;
    return LinkSpec(16, raw_bw_per_dir_gbps, 64.0, 68.0, 0.94, base_overhead_ns,
                    synthetic_curve(half, queue_ns, u_max, n_points, "link-ingress"),
                    synthetic_curve(half, queue_ns, u_max, n_points, "link-egress"));
}

} // namespace salvage
