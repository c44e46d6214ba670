#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "salvage/amat.hpp"
#include "salvage/cluster.hpp"
#include "salvage/core.hpp"
#include "salvage/curves.hpp"
#include "salvage/link.hpp"
#include "salvage/sim.hpp"

namespace salvage {

inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key,
                                     const std::string& ctx) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(ctx + ": missing field '" + key + "'");
    return j.at(key);
}

template <typename T>
inline T get_field(const nlohmann::json& j, const char* key, const std::string& ctx) {
    try {
        return require(j, key, ctx).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(ctx + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
inline T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (j.is_object() && j.contains(key))
        return j.at(key).get<T>();
    return fallback;
}

} // namespace detail

/// Curve objects come in two forms: explicit knots
///   {"points": [[u, latency_ns], ...]}
/// or the synthetic family
///   {"synthetic": {"l0_ns": .., "q_ns": .., "u_max": .., "n_points": ..}}
inline LoadLatencyCurve curve_from_json(const nlohmann::json& j, const std::string& ctx) {
    std::string label = detail::get_or<std::string>(j, "label", "");
    if (j.is_object() && j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        return synthetic_curve(detail::get_field<double>(s, "l0_ns", ctx),
                               detail::get_field<double>(s, "q_ns", ctx),
                               detail::get_field<double>(s, "u_max", ctx),
                               detail::get_field<std::size_t>(s, "n_points", ctx), label);
    }
    if (j.is_object() && j.contains("points")) {
        std::vector<CurvePoint> pts;
        for (const auto& row : j.at("points")) {
            if (!row.is_array() || row.size() != 2)
                throw ConfigError(ctx + ": curve points must be [utilization, latency_ns] pairs");
            pts.push_back({row[0].get<double>(), row[1].get<double>()});
        }
        try {
            return LoadLatencyCurve::from_points(std::move(pts), label);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(ctx + ": " + e.what());
        }
    }
    throw ConfigError(ctx + ": curve needs 'points' or 'synthetic'");
}

inline nlohmann::json curve_to_json(const LoadLatencyCurve& curve) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : curve.points())
        pts.push_back({p.utilization, p.latency_ns});
    nlohmann::json j{{"points", std::move(pts)}};
    if (!curve.label().empty())
        j["label"] = curve.label();
    return j;
}

inline LinkSpec link_from_json(const nlohmann::json& j) {
    const std::string ctx = "link";
    double raw = detail::get_field<double>(j, "raw_bw_per_dir_gbps", ctx);
    double payload = detail::get_or<double>(j, "flit_payload_bytes", 64.0);
    double total = detail::get_or<double>(j, "flit_total_bytes", 68.0);
    std::optional<double> eta;
    if (j.contains("eta") && !j.at("eta").is_null())
        eta = j.at("eta").get<double>();
    double base = detail::get_or<double>(j, "base_overhead_ns", 100.0);
    std::size_t lanes = detail::get_or<std::size_t>(j, "lanes", 16);

    auto direction_curve = [&](const char* key) {
        if (j.contains(key))
            return curve_from_json(j.at(key), ctx + std::string(".") + key);
        // Default: half of the zero-load premium per direction with a
        // moderate queuing knee.
        return synthetic_curve(base / 2.0, base / 2.0, 0.95, 20);
    };
    MetadataModel meta;
    if (j.contains("metadata")) {
        const auto& m = j.at("metadata");
        meta.rd_req_bytes = detail::get_or<double>(m, "rd_req_bytes", meta.rd_req_bytes);
        meta.rd_resp_hdr_bytes =
            detail::get_or<double>(m, "rd_resp_hdr_bytes", meta.rd_resp_hdr_bytes);
        meta.wr_hdr_bytes = detail::get_or<double>(m, "wr_hdr_bytes", meta.wr_hdr_bytes);
        meta.wr_cmpl_bytes = detail::get_or<double>(m, "wr_cmpl_bytes", meta.wr_cmpl_bytes);
    }
    try {
        return LinkSpec(lanes, raw, payload, total, eta, base, direction_curve("ingress_curve"),
                        direction_curve("egress_curve"), meta);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("link: ") + e.what());
    }
}

inline nlohmann::json link_to_json(const LinkSpec& link) {
    nlohmann::json j{{"lanes", link.lanes()},
                     {"raw_bw_per_dir_gbps", link.raw_bw_per_dir()},
                     {"flit_payload_bytes", link.flit_payload()},
                     {"flit_total_bytes", link.flit_total()},
                     {"base_overhead_ns", link.base_overhead_ns()},
                     {"ingress_curve", curve_to_json(link.ingress_curve())},
                     {"egress_curve", curve_to_json(link.egress_curve())},
                     {"metadata",
                      {{"rd_req_bytes", link.meta().rd_req_bytes},
                       {"rd_resp_hdr_bytes", link.meta().rd_resp_hdr_bytes},
                       {"wr_hdr_bytes", link.meta().wr_hdr_bytes},
                       {"wr_cmpl_bytes", link.meta().wr_cmpl_bytes}}}};
    if (link.configured_eta())
        j["eta"] = *link.configured_eta();
    return j;
}

inline SystemConfig system_from_json(const nlohmann::json& j) {
    const std::string ctx = "system config";
    try {
        return SystemConfig(detail::get_field<double>(j, "b_p_gbps", ctx),
                            detail::get_field<double>(j, "b_s_gbps", ctx),
                            curve_from_json(detail::require(j, "primary_curve", ctx),
                                            ctx + ".primary_curve"),
                            curve_from_json(detail::require(j, "salvage_curve", ctx),
                                            ctx + ".salvage_curve"),
                            link_from_json(detail::require(j, "link", ctx)),
                            detail::get_or<double>(j, "rho_rd", 0.75));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
}

inline nlohmann::json system_to_json(const SystemConfig& cfg) {
    return {{"b_p_gbps", cfg.b_p},
            {"b_s_gbps", cfg.b_s},
            {"rho_rd", cfg.rho_rd},
            {"primary_curve", curve_to_json(cfg.primary_curve)},
            {"salvage_curve", curve_to_json(cfg.salvage_curve)},
            {"link", link_to_json(cfg.link)}};
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open: " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void check_schema_version(const nlohmann::json& j, const std::string& ctx) {
    int version = detail::get_field<int>(j, "schema_version", ctx);
    if (version != kConfigSchemaVersion)
        throw ConfigError(ctx + ": expected schema_version " +
                          std::to_string(kConfigSchemaVersion) + ", got " +
                          std::to_string(version));
}

inline SystemConfig load_system_config(const std::string& path) {
    nlohmann::json j = load_json_file(path);
    check_schema_version(j, "system config");
    return system_from_json(j);
}

inline SimConfig sim_from_json(const nlohmann::json& j) {
    const std::string ctx = "sim config";
    SimConfig cfg{system_from_json(detail::require(j, "system", ctx))};
    cfg.r_star = detail::get_or<double>(j, "r_star", 1.0);
    cfg.demand_mean_gbps = detail::get_field<double>(j, "demand_mean_gbps", ctx);
    cfg.demand_cv = detail::get_or<double>(j, "demand_cv", 0.0);
    if (j.contains("rho_rd") && !j.at("rho_rd").is_null())
        cfg.rho_rd = j.at("rho_rd").get<double>();
    cfg.io_rx_level = detail::get_or<double>(j, "io_rx_level", 0.0);
    cfg.io_tx_level = detail::get_or<double>(j, "io_tx_level", 0.0);
    cfg.io_mem_spill_rx = detail::get_or<double>(j, "io_mem_spill_rx", 1.0);
    cfg.io_mem_spill_tx = detail::get_or<double>(j, "io_mem_spill_tx", 1.0);
    cfg.interval_ns = detail::get_or<double>(j, "interval_ns", kDefaultIntervalNs);
    cfg.n_intervals = detail::get_or<std::size_t>(j, "n_intervals", 1000);
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    cfg.page_count = detail::get_or<std::size_t>(j, "page_count", 100000);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    return cfg;
}

inline SimConfig load_sim_config(const std::string& path) {
    nlohmann::json j = load_json_file(path);
    check_schema_version(j, "sim config");
    return sim_from_json(j);
}

inline WorkloadProfile workload_from_json(const nlohmann::json& j) {
    const std::string ctx = "workload";
    WorkloadProfile wl;
    wl.name = detail::get_field<std::string>(j, "name", ctx);
    wl.demand_mean_gbps = detail::get_field<double>(j, "demand_mean_gbps", ctx);
    wl.rho_rd = detail::get_or<double>(j, "rho_rd", 0.75);
    wl.io_rx_level = detail::get_or<double>(j, "io_rx_level", 0.0);
    wl.io_tx_level = detail::get_or<double>(j, "io_tx_level", 0.0);
    try {
        wl.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    return wl;
}

inline WorkloadProfile load_workload(const std::string& path) {
    nlohmann::json j = load_json_file(path);
    check_schema_version(j, "workload");
    return workload_from_json(j);
}

/// Server files carry the system plus the already-running deployments; the
/// commitments are recomputed from those, never stored.
inline ServerState server_from_json(const nlohmann::json& j, const SplitCurveSet* set = nullptr) {
    const std::string ctx = "server";
    ServerState server(detail::get_or<std::string>(j, "name", "server"),
                       system_from_json(detail::require(j, "system", ctx)));
    if (j.contains("deployed")) {
        if (set == nullptr)
            throw ConfigError(ctx + ": deployed workloads given but no curve set to derive R*");
        for (const auto& d : j.at("deployed")) {
            WorkloadProfile wl = workload_from_json(detail::require(d, "workload", ctx));
            DeployDecision decision = server.deploy(wl, *set);
            if (!decision.accepted)
                throw ConfigError(ctx + ": deployed workload '" + wl.name +
                                  "' not admissible: " + decision.reason);
            if (d.contains("r_star")) {
                double expected = d.at("r_star").get<double>();
                if (std::abs(expected - decision.r_star) > 1e-9)
                    throw ConfigError(ctx + ": recorded r_star for '" + wl.name +
                                      "' disagrees with the curve set (" +
                                      format_double(expected) + " vs " +
                                      format_double(decision.r_star) + ")");
            }
        }
    }
    return server;
}

inline ServerState load_server(const std::string& path, const SplitCurveSet* set = nullptr) {
    nlohmann::json j = load_json_file(path);
    check_schema_version(j, "server");
    return server_from_json(j, set);
}

} // namespace salvage
