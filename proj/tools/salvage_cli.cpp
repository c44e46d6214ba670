// Command-line frontend: utility sweeps, split-curve families, offline curve
// set generation, deployment planning, interval simulation, and single AMAT
// queries. All outputs are deterministic given (config, seed); exit codes:
// 0 ok, 1 usage, 2 config/schema, 3 infeasible or capacity refusal.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "salvage/salvage.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kIoLevelLow = 0.10;
constexpr double kIoLevelMed = 0.50;
constexpr double kIoLevelHigh = 0.80;

double parse_io_level(const std::string& token) {
    if (token == "low")
        return kIoLevelLow;
    if (token == "med")
        return kIoLevelMed;
    if (token == "high")
        return kIoLevelHigh;
    throw std::invalid_argument("unknown I/O level '" + token + "' (expected low|med|high)");
}

std::pair<double, double> parse_io_scenario(const std::string& token) {
    auto sep = token.find('_');
    if (sep == std::string::npos)
        throw std::invalid_argument("I/O scenario must be rx_tx, e.g. low_high");
    return {parse_io_level(token.substr(0, sep)), parse_io_level(token.substr(sep + 1))};
}

// "1..16" or "1,2,8"
std::vector<std::size_t> parse_size_list(const std::string& spec) {
    std::vector<std::size_t> out;
    auto dots = spec.find("..");
    if (dots != std::string::npos) {
        std::size_t lo = std::stoull(spec.substr(0, dots));
        std::size_t hi = std::stoull(spec.substr(dots + 2));
        if (lo < 1 || hi < lo)
            throw std::invalid_argument("bad range '" + spec + "'");
        for (std::size_t v = lo; v <= hi; ++v)
            out.push_back(v);
        return out;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stoull(item));
    if (out.empty())
        throw std::invalid_argument("empty list '" + spec + "'");
    return out;
}

std::vector<double> parse_double_list(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        bool ok = false;
        double v = salvage::parse_double(item, ok);
        if (!ok)
            throw std::invalid_argument("bad number '" + item + "' in '" + spec + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw std::invalid_argument("empty list '" + spec + "'");
    return out;
}

// "min:max:step"
std::vector<double> parse_sweep(const std::string& spec) {
    std::vector<double> parts = parse_double_list([&] {
        std::string s = spec;
        std::replace(s.begin(), s.end(), ':', ',');
        return s;
    }());
    if (parts.size() != 3 || parts[2] <= 0.0 || parts[1] < parts[0])
        throw std::invalid_argument("sweep must be min:max:step, got '" + spec + "'");
    std::vector<double> out;
    for (double v = parts[0]; v <= parts[1] + 1e-9; v += parts[2])
        out.push_back(v);
    return out;
}

std::string resolve_config_path(const std::string& path) {
    if (fs::exists(path))
        return path;
    if (const char* dir = std::getenv("SALVAGE_CONFIG_DIR")) {
        fs::path candidate = fs::path(dir) / path;
        if (fs::exists(candidate))
            return candidate.string();
    }
    return path;
}

void write_text(const std::string& out_path, const std::string& text) {
    if (out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out)
        throw salvage::ConfigError("cannot open for writing: " + out_path);
    out << text;
}

std::string join_args(int argc, char** argv) {
    std::string cmd;
    for (int i = 0; i < argc; ++i) {
        if (i)
            cmd += ' ';
        cmd += argv[i];
    }
    return cmd;
}

struct VariantSpec {
    double premium_ns = 50.0;
    double boost = 0.5; // salvage bandwidth as a fraction of primary

    std::string label() const {
        std::ostringstream os;
        os << salvage::format_double(premium_ns) << "ns@" << salvage::format_double(boost * 100.0)
           << "%";
        return os.str();
    }
};

VariantSpec parse_variant(const std::string& spec) {
    auto sep = spec.find(':');
    if (sep == std::string::npos)
        throw std::invalid_argument("variant must be premium_ns:boost, e.g. 50:0.5");
    bool ok1 = false, ok2 = false;
    VariantSpec v;
    v.premium_ns = salvage::parse_double(spec.substr(0, sep), ok1);
    v.boost = salvage::parse_double(spec.substr(sep + 1), ok2);
    if (!ok1 || !ok2 || v.premium_ns < 0.0 || v.boost <= 0.0)
        throw std::invalid_argument("bad variant '" + spec + "'");
    return v;
}

// ---------------------------------------------------------------------------

int cmd_utility(const std::string& n_spec, const std::string& p_spec, const std::string& x_spec,
                std::size_t mc_samples, std::uint64_t seed, const std::string& out_path) {
    std::vector<std::size_t> ns = parse_size_list(n_spec);
    std::vector<double> ps = parse_double_list(p_spec);
    std::vector<double> xs = parse_double_list(x_spec);
    std::string csv = "n,p,x,utility_analytic,utility_mc\n";
    for (std::size_t n : ns)
        for (double p : ps)
            for (double x : xs) {
                double analytic = salvage::provisioned_utility(n, p, x);
                double mc = salvage::provisioned_utility_mc(n, p, x, mc_samples, seed);
                csv += std::to_string(n) + ',' + salvage::format_double(p) + ',' +
                       salvage::format_double(x) + ',' + salvage::format_double(analytic) + ',' +
                       salvage::format_double(mc) + '\n';
            }
    write_text(out_path, csv);
    return 0;
}

int cmd_split_curve(const std::string& config_path, const std::string& demand_spec,
                    std::vector<std::string> variant_specs, double grid_step,
                    const std::string& out_path) {
    salvage::SystemConfig base = salvage::load_system_config(resolve_config_path(config_path));
    if (variant_specs.empty())
        variant_specs = {"50:0.5", "200:0.5", "50:1.0", "200:1.0"};
    std::vector<double> demands = parse_sweep(demand_spec);
    std::string csv = "variant,demand_gbps,r_star\n";
    for (const auto& spec : variant_specs) {
        VariantSpec v = parse_variant(spec);
        salvage::SystemConfig cfg(base.b_p, v.boost * base.b_p, base.primary_curve,
                                  base.primary_curve.shifted(v.premium_ns), base.link, base.rho_rd);
        for (double d : demands) {
            salvage::SplitResult res = salvage::optimal_split(d, cfg, grid_step);
            csv += v.label() + ',' + salvage::format_double(d) + ',' +
                   salvage::format_double(res.r) + '\n';
        }
    }
    write_text(out_path, csv);
    return 0;
}

int cmd_gen_curves(const std::string& config_path, const std::string& out_path,
                   const std::string& fracs_spec, const std::string& demands_spec,
                   double grid_step, std::size_t cap) {
    salvage::SystemConfig cfg = salvage::load_system_config(resolve_config_path(config_path));
    salvage::AvailabilityGridSpec grid = salvage::default_grid_spec(cfg);
    grid.r_grid_step = grid_step;
    if (!fracs_spec.empty()) {
        std::vector<double> fracs = parse_double_list(fracs_spec);
        grid.fractions = {fracs, fracs, fracs, fracs};
    }
    if (!demands_spec.empty())
        grid.demand_grid_gbps = parse_sweep(demands_spec);
    salvage::SplitCurveSet set = salvage::generate_set(cfg, grid, cap);
    salvage::save_set(set, out_path);
    json j{{"curves", set.curves.size()},
           {"demand_points", set.grid.demand_grid_gbps.size()},
           {"path", out_path}};
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_plan(const std::string& set_path, const std::string& server_path,
             const std::string& workload_path, const std::string& log_path) {
    salvage::SplitCurveSet set = salvage::load_set(resolve_config_path(set_path));
    salvage::ServerState server =
        salvage::load_server(resolve_config_path(server_path), &set);
    salvage::WorkloadProfile wl = salvage::load_workload(resolve_config_path(workload_path));
    salvage::CurveSelection sel = salvage::select_curve(set, server.residual());
    salvage::SplitCurveEntry entry = salvage::probe(*sel.curve, wl.demand_mean_gbps);
    json out{{"r_star", entry.r_star},
             {"capacity_exceeded", entry.capacity_exceeded},
             {"curve_key", salvage::to_json(sel.key)}};
    std::cout << out.dump() << '\n';
    if (!log_path.empty()) {
        salvage::DeployDecision d;
        d.accepted = true;
        d.r_star = entry.r_star;
        d.capacity_exceeded = entry.capacity_exceeded;
        d.curve_key = sel.key;
        std::ofstream log(log_path, std::ios::app);
        if (!log)
            throw salvage::ConfigError("cannot open log: " + log_path);
        log << salvage::decision_event(server.name(), wl.name, d).dump() << '\n';
    }
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::string& io_scenario, std::optional<double> r_override,
                 std::optional<std::uint64_t> seed_override,
                 std::optional<std::size_t> intervals_override, const std::string& command_line) {
    std::string resolved = resolve_config_path(config_path);
    salvage::SimConfig cfg = salvage::load_sim_config(resolved);
    if (!io_scenario.empty()) {
        auto [rx, tx] = parse_io_scenario(io_scenario);
        cfg.io_rx_level = rx;
        cfg.io_tx_level = tx;
    }
    if (r_override)
        cfg.r_star = *r_override;
    if (seed_override)
        cfg.seed = *seed_override;
    if (intervals_override)
        cfg.n_intervals = *intervals_override;
    cfg.validate();

    salvage::SimMetrics metrics = salvage::run(cfg);
    fs::create_directories(out_dir);
    fs::path metrics_path = fs::path(out_dir) / "metrics.csv";
    fs::path summary_path = fs::path(out_dir) / "summary.json";
    fs::path manifest_path = fs::path(out_dir) / "manifest.json";
    write_text(metrics_path.string(), salvage::metrics_csv(metrics.intervals));
    json summary = salvage::to_json(metrics.summary);
    write_text(summary_path.string(), summary.dump(2) + "\n");

    salvage::RunManifest manifest;
    manifest.command = command_line;
    manifest.config_digest = salvage::digest_file(resolved);
    manifest.seed = cfg.seed;
    manifest.outputs = {metrics_path.string(), summary_path.string()};
    salvage::write_manifest(manifest, manifest_path.string());

    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_amat(const std::string& config_path, double r, double demand) {
    salvage::SystemConfig cfg = salvage::load_system_config(resolve_config_path(config_path));
    salvage::TrafficSplit split(r); // throws on out-of-range r (usage error)
    salvage::Utilizations u = salvage::utilizations(split, demand, cfg);
    double amat = salvage::amat_of(split, demand, cfg);
    json out{{"amat_ns", salvage::is_feasible(amat) ? json(amat) : json(nullptr)},
             {"u_p", u.u_p},
             {"u_s", salvage::is_feasible(u.u_s) ? json(u.u_s) : json(nullptr)},
             {"u_ing", u.u_ing},
             {"u_egr", u.u_egr},
             {"feasible", salvage::is_feasible(amat)}};
    std::cout << out.dump() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Idle I/O bandwidth salvage planning and simulation toolkit"};
    app.require_subcommand(1);

    // utility
    auto* utility = app.add_subcommand("utility", "Salvage-memory utility sweep (CSV)");
    std::string n_spec = "1..16", p_spec = "0.05,0.2,0.5", x_spec = "1";
    std::size_t mc_samples = 100000;
    std::uint64_t utility_seed = 1;
    std::string utility_out = "-";
    utility->add_option("--n", n_spec, "pod sizes, list or a..b range");
    utility->add_option("--p", p_spec, "idle-link probabilities, comma list");
    utility->add_option("--x", x_spec, "memory:link provisioning ratios, comma list");
    utility->add_option("--mc-samples", mc_samples, "Monte Carlo samples per row");
    utility->add_option("--seed", utility_seed, "Monte Carlo seed");
    utility->add_option("--out", utility_out, "output path or - for stdout");

    // split-curve
    auto* split = app.add_subcommand("split-curve", "Optimal split vs demand per variant (CSV)");
    std::string split_config, split_demands = "4:46:2", split_out = "-";
    std::vector<std::string> variant_specs;
    double split_grid_step = 0.05;
    split->add_option("--config", split_config, "system config JSON")->required();
    split->add_option("--demand", split_demands, "demand sweep min:max:step in GB/s");
    split->add_option("--variant", variant_specs,
                      "salvage variant premium_ns:boost (repeatable; default four stock variants)");
    split->add_option("--grid-step", split_grid_step, "candidate split increment");
    split->add_option("--out", split_out, "output path or - for stdout");

    // gen-curves
    auto* gen = app.add_subcommand("gen-curves", "Generate the offline split-curve set (JSON)");
    std::string gen_config, gen_out = "curves.json", gen_fracs, gen_demands;
    double gen_grid_step = 0.05;
    std::size_t gen_cap = salvage::kDefaultCurveSetCap;
    gen->add_option("--config", gen_config, "system config JSON")->required();
    gen->add_option("--out", gen_out, "output path");
    gen->add_option("--fracs", gen_fracs, "availability fractions per axis, comma list");
    gen->add_option("--demands", gen_demands, "demand grid min:max:step in GB/s");
    gen->add_option("--grid-step", gen_grid_step, "candidate split increment");
    gen->add_option("--cap", gen_cap, "refuse grids with more curves than this");

    // plan
    auto* plan = app.add_subcommand("plan", "Derive R* for a workload on a server");
    std::string plan_set, plan_server, plan_workload, plan_log;
    plan->add_option("--set", plan_set, "split-curve set JSON")->required();
    plan->add_option("--server", plan_server, "server state JSON")->required();
    plan->add_option("--workload", plan_workload, "workload profile JSON")->required();
    plan->add_option("--log", plan_log, "append the decision as a JSON line");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Interval simulation (CSV + summary JSON)");
    std::string sim_config, sim_out_dir = ".", sim_io;
    double sim_r = -1.0;
    std::int64_t sim_seed = -1;
    std::int64_t sim_intervals = -1;
    simulate->add_option("--config", sim_config, "sim config JSON")->required();
    simulate->add_option("--out-dir", sim_out_dir, "directory for metrics/summary/manifest");
    simulate->add_option("--io", sim_io, "I/O scenario rx_tx with levels low|med|high");
    simulate->add_option("--r", sim_r, "override the applied traffic split");
    simulate->add_option("--seed", sim_seed, "override the seed");
    simulate->add_option("--intervals", sim_intervals, "override the interval count");

    // amat
    auto* amat = app.add_subcommand("amat", "Evaluate the analytical model once (JSON)");
    std::string amat_config;
    double amat_r = 1.0, amat_demand = 0.0;
    amat->add_option("--config", amat_config, "system config JSON")->required();
    amat->add_option("--r", amat_r, "traffic split toward primary")->required();
    amat->add_option("--demand", amat_demand, "memory demand in GB/s")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (utility->parsed())
            return cmd_utility(n_spec, p_spec, x_spec, mc_samples, utility_seed, utility_out);
        if (split->parsed())
            return cmd_split_curve(split_config, split_demands, variant_specs, split_grid_step,
                                   split_out);
        if (gen->parsed())
            return cmd_gen_curves(gen_config, gen_out, gen_fracs, gen_demands, gen_grid_step,
                                  gen_cap);
        if (plan->parsed())
            return cmd_plan(plan_set, plan_server, plan_workload, plan_log);
        if (simulate->parsed())
            return cmd_simulate(sim_config, sim_out_dir, sim_io,
                                sim_r >= 0.0 ? std::optional<double>(sim_r) : std::nullopt,
                                sim_seed >= 0 ? std::optional<std::uint64_t>(
                                                    static_cast<std::uint64_t>(sim_seed))
                                              : std::nullopt,
                                sim_intervals >= 0 ? std::optional<std::size_t>(
                                                         static_cast<std::size_t>(sim_intervals))
                                                   : std::nullopt,
                                join_args(argc, argv));
        if (amat->parsed())
            return cmd_amat(amat_config, amat_r, amat_demand);
    } catch (const salvage::CapacityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const salvage::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const salvage::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
