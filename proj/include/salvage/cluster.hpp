#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "salvage/amat.hpp"
#include "salvage/splitplan.hpp"

namespace salvage {

/// Profiled per-workload demands: mean memory bandwidth, read share, and I/O
/// activity per link direction as fractions of peak. `salvaging` is set on
/// the deployed copy once an R* below 1 is assigned.
struct WorkloadProfile {
    std::string name;
    double demand_mean_gbps = 0.0;
    double rho_rd = 0.75;
    double io_rx_level = 0.0;
    double io_tx_level = 0.0;
    bool salvaging = false;

    void validate() const {
        if (name.empty())
            throw std::invalid_argument("workload: name must be non-empty");
        if (demand_mean_gbps < 0.0)
            throw std::invalid_argument("workload: demand must be non-negative");
        if (!(rho_rd >= 0.0 && rho_rd <= 1.0))
            throw std::invalid_argument("workload: rho_rd must lie in [0,1]");
        for (double level : {io_rx_level, io_tx_level})
            if (!(level >= 0.0 && level <= 1.0))
                throw std::invalid_argument("workload: io levels must lie in [0,1]");
    }
};

inline constexpr double kDefaultIoHeavyThreshold = 0.5;

struct DeployDecision {
    bool accepted = false;
    double r_star = 1.0;
    bool capacity_exceeded = false;
    std::string reason; // set on rejection
    ResourceAvailability curve_key{};
};

struct CompleteResult {
    bool advisory = false; // colocation conditions for remaining salvagers changed
    std::string message;
};

/// Bandwidth commitments a deployed workload holds on the four axes: R*·D on
/// primary, (1-R*)·D on salvage, the induced per-direction link loads, plus
/// its declared I/O levels.
inline ResourceAvailability workload_commitments(const WorkloadProfile& wl, double r_star,
                                                 const SystemConfig& cfg) {
    const double eta = link_efficiency(cfg.link);
    const double raw = cfg.link.raw_bw_per_dir();
    const double salvage = (1.0 - r_star) * wl.demand_mean_gbps;
    ResourceAvailability c;
    c.b_p_avail = r_star * wl.demand_mean_gbps;
    c.b_s_avail = salvage;
    c.link_ing_avail = salvage * wl.rho_rd / eta + wl.io_rx_level * raw;
    c.link_egr_avail = salvage * (1.0 - wl.rho_rd) / eta + wl.io_tx_level * raw;
    return c;
}

/// One server: its system configuration, running deployments, and the
/// bandwidth they have committed. Mutations require exclusive access;
/// distinct servers are independent.
class ServerState {
  public:
    explicit ServerState(std::string name, SystemConfig cfg)
        : name_(std::move(name)), cfg_(std::move(cfg)), nominal_(nominal_capacities(cfg_)) {}

    struct Deployment {
        WorkloadProfile profile;
        double r_star = 1.0;
    };

    const std::string& name() const { return name_; }
    const SystemConfig& config() const { return cfg_; }
    const ResourceAvailability& nominal() const { return nominal_; }
    const ResourceAvailability& committed() const { return committed_; }
    const std::vector<Deployment>& deployed() const { return deployed_; }

    ResourceAvailability residual() const {
        return {nominal_.b_p_avail - committed_.b_p_avail, nominal_.b_s_avail - committed_.b_s_avail,
                nominal_.link_ing_avail - committed_.link_ing_avail,
                nominal_.link_egr_avail - committed_.link_egr_avail};
    }

    /// Fold of all deployments' commitments, for drift checks against the
    /// incrementally maintained value.
    ResourceAvailability recompute_committed() const {
        ResourceAvailability total{0.0, 0.0, 0.0, 0.0};
        for (const auto& d : deployed_)
            accumulate(total, workload_commitments(d.profile, d.r_star, cfg_));
        return total;
    }

    bool has_salvaging_workload() const {
        return std::any_of(deployed_.begin(), deployed_.end(),
                           [](const Deployment& d) { return d.profile.salvaging; });
    }

    /// Admission: refuses I/O-heavy workloads while a salvager is active
    /// (colocation rule), derives R* from the offline curve set against the
    /// residual-before-deploy, and commits resources on acceptance.
    DeployDecision deploy(const WorkloadProfile& wl, const SplitCurveSet& set,
                          double io_heavy_threshold = kDefaultIoHeavyThreshold) {
        wl.validate();
        DeployDecision decision;
        if (std::any_of(deployed_.begin(), deployed_.end(),
                        [&](const Deployment& d) { return d.profile.name == wl.name; })) {
            decision.reason = "duplicate workload name '" + wl.name + "'";
            return decision;
        }
        bool io_heavy = std::max(wl.io_rx_level, wl.io_tx_level) >= io_heavy_threshold;
        if (io_heavy && has_salvaging_workload()) {
            decision.reason = "colocation rule: I/O-intensive workload refused while a "
                              "salvaging workload is active";
            return decision;
        }
        const ResourceAvailability before = residual();
        CurveSelection sel;
        try {
            sel = select_curve(set, before);
        } catch (const CapacityError&) {
            decision.reason = "insufficient quantized availability";
            return decision;
        }
        SplitCurveEntry entry = probe(*sel.curve, wl.demand_mean_gbps);
        decision.curve_key = sel.key;
        decision.r_star = entry.r_star;
        decision.capacity_exceeded = entry.capacity_exceeded;

        WorkloadProfile stored = wl;
        stored.salvaging = entry.r_star < 1.0;
        ResourceAvailability cost = workload_commitments(stored, entry.r_star, cfg_);
        const double eps = 1e-9;
        if (cost.b_p_avail > before.b_p_avail + eps * nominal_.b_p_avail ||
            cost.b_s_avail > before.b_s_avail + eps * nominal_.b_s_avail ||
            cost.link_ing_avail > before.link_ing_avail + eps * nominal_.link_ing_avail ||
            cost.link_egr_avail > before.link_egr_avail + eps * nominal_.link_egr_avail) {
            decision.reason = "insufficient residual capacity";
            return decision;
        }
        accumulate(committed_, cost);
        deployed_.push_back({std::move(stored), entry.r_star});
        decision.accepted = true;
        return decision;
    }

    /// Releases a workload's commitments. Emits an advisory when an I/O-quiet
    /// workload leaves while salvagers remain: their idle-I/O justification
    /// may no longer hold and the cluster manager must replace or notify.
    CompleteResult complete(const std::string& workload_name) {
        auto it = std::find_if(deployed_.begin(), deployed_.end(), [&](const Deployment& d) {
            return d.profile.name == workload_name;
        });
        if (it == deployed_.end())
            throw std::invalid_argument("complete: unknown workload '" + workload_name + "'");
        const bool was_salvaging = it->profile.salvaging;
        deployed_.erase(it);
        committed_ = recompute_committed();
        CompleteResult result;
        if (!was_salvaging && has_salvaging_workload()) {
            result.advisory = true;
            result.message = "workload '" + workload_name +
                             "' completed while salvaging workloads remain; revisit I/O "
                             "expectations or migrate salvaged pages";
        }
        return result;
    }

  private:
    static void accumulate(ResourceAvailability& total, const ResourceAvailability& c) {
        total.b_p_avail += c.b_p_avail;
        total.b_s_avail += c.b_s_avail;
        total.link_ing_avail += c.link_ing_avail;
        total.link_egr_avail += c.link_egr_avail;
    }

    std::string name_;
    SystemConfig cfg_;
    ResourceAvailability nominal_;
    ResourceAvailability committed_{0.0, 0.0, 0.0, 0.0};
    std::vector<Deployment> deployed_;
};

inline ResourceAvailability residual(const ServerState& server) { return server.residual(); }

/// JSON-lines record for deployment decisions.
inline nlohmann::json decision_event(const std::string& server, const std::string& workload,
                                     const DeployDecision& d) {
    nlohmann::json j{{"event", d.accepted ? "deploy_accepted" : "deploy_rejected"},
                     {"workload", workload},
                     {"server", server},
                     {"r_star", d.r_star}};
    j["reason"] = d.accepted ? "" : d.reason;
    if (d.accepted)
        j["capacity_exceeded"] = d.capacity_exceeded;
    return j;
}

} // namespace salvage
