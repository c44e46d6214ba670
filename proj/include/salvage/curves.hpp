#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "salvage/core.hpp"

namespace salvage {

struct CurvePoint {
    double utilization = 0.0; // fraction of peak sustainable bandwidth, [0,1]
    double latency_ns = 0.0;
};

/// Monotone utilization -> latency mapping for a memory device or one link
/// direction. Knots are sorted, start at utilization 0 (the unloaded
/// latency), and latency never decreases with load. Immutable after
/// construction, so queries are safe from any number of threads.
class LoadLatencyCurve {
  public:
    static LoadLatencyCurve from_points(std::vector<CurvePoint> points, std::string label = {}) {
        validate(points);
        return LoadLatencyCurve(std::move(points), std::move(label));
    }

    const std::vector<CurvePoint>& points() const { return points_; }
    const std::string& label() const { return label_; }
    double unloaded_latency_ns() const { return points_.front().latency_ns; }
    double max_utilization() const { return points_.back().utilization; }

    /// Linear interpolation between knots; exact at knots. Queries beyond the
    /// last knot return kInfeasibleLatency rather than extrapolating.
    double latency_at(double u) const {
        if (u < 0.0)
            throw std::invalid_argument("latency_at: utilization must be non-negative");
        if (u <= points_.front().utilization)
            return points_.front().latency_ns;
        if (u > points_.back().utilization)
            return kInfeasibleLatency;
        auto hi = std::lower_bound(points_.begin(), points_.end(), u,
                                   [](const CurvePoint& p, double x) { return p.utilization < x; });
        if (hi->utilization == u)
            return hi->latency_ns;
        auto lo = hi - 1;
        double t = (u - lo->utilization) / (hi->utilization - lo->utilization);
        return lo->latency_ns + (hi->latency_ns - lo->latency_ns) * t;
    }

    /// Same curve raised by a constant latency premium at every knot.
    LoadLatencyCurve shifted(double delta_ns) const {
        if (delta_ns < 0.0)
            throw std::invalid_argument("shift: delta must be non-negative");
        std::vector<CurvePoint> pts = points_;
        for (auto& p : pts)
            p.latency_ns += delta_ns;
        return LoadLatencyCurve(std::move(pts), label_);
    }

    bool operator==(const LoadLatencyCurve& other) const {
        if (points_.size() != other.points_.size())
            return false;
        for (size_t i = 0; i < points_.size(); ++i)
            if (points_[i].utilization != other.points_[i].utilization ||
                points_[i].latency_ns != other.points_[i].latency_ns)
                return false;
        return true;
    }

  private:
    LoadLatencyCurve(std::vector<CurvePoint> points, std::string label)
        : points_(std::move(points)), label_(std::move(label)) {}

    static void validate(const std::vector<CurvePoint>& pts) {
        if (pts.size() < 2)
            throw std::invalid_argument("curve needs at least 2 points");
        if (pts.front().utilization != 0.0)
            throw std::invalid_argument("curve must start at utilization 0");
        for (size_t i = 0; i < pts.size(); ++i) {
            if (i > 0 && pts[i].utilization <= pts[i - 1].utilization)
                throw std::invalid_argument("curve utilizations must be strictly increasing");
            if (i > 0 && pts[i].latency_ns < pts[i - 1].latency_ns)
                throw std::invalid_argument("curve latency must be non-decreasing");
        }
    }

    std::vector<CurvePoint> points_;
    std::string label_;
};

inline double latency_at(const LoadLatencyCurve& curve, double u) { return curve.latency_at(u); }

inline LoadLatencyCurve shift(const LoadLatencyCurve& curve, double delta_ns) {
    return curve.shifted(delta_ns);
}

/// Test-curve family L(u) = l0 + q*u/(1-u): flat near zero load with the
/// queuing knee past ~50% utilization, sampled at n_points uniform knots on
/// [0, u_max]. Analytically invertible, which the tests rely on.
inline LoadLatencyCurve synthetic_curve(double l0_ns, double q_ns, double u_max,
                                        std::size_t n_points, std::string label = {}) {
    if (l0_ns <= 0.0)
        throw std::invalid_argument("synthetic_curve: l0 must be positive");
    if (q_ns < 0.0)
        throw std::invalid_argument("synthetic_curve: q must be non-negative");
    if (!(u_max > 0.0 && u_max < 1.0))
        throw std::invalid_argument("synthetic_curve: u_max must lie in (0,1)");
    if (n_points < 2)
        throw std::invalid_argument("synthetic_curve: need at least 2 points");
    std::vector<CurvePoint> pts;
    pts.reserve(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        // Pin the endpoint so the curve's domain is exactly [0, u_max].
        double u = (i + 1 == n_points)
                       ? u_max
                       : u_max * static_cast<double>(i) / static_cast<double>(n_points - 1);
        pts.push_back({u, l0_ns + q_ns * u / (1.0 - u)});
    }
    return LoadLatencyCurve::from_points(std::move(pts), std::move(label));
}

inline constexpr std::string_view kCurveCsvHeader = "utilization,latency_ns";

/// Two-column CSV with the exact header `utilization,latency_ns`. Rows that
/// break the curve invariants are rejected with the offending data row named.
inline LoadLatencyCurve parse_curve_csv(std::string_view text, std::string label = {}) {
    std::vector<CurvePoint> pts;
    size_t pos = 0;
    size_t row = 0; // data rows, 1-based
    bool saw_header = false;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        if (!saw_header) {
            if (line != kCurveCsvHeader)
                throw ParseError("curve csv: expected header 'utilization,latency_ns'");
            saw_header = true;
            continue;
        }
        ++row;
        size_t comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
            throw ParseError("curve csv: row " + std::to_string(row) + ": expected two columns");
        bool ok_u = false, ok_l = false;
        double u = parse_double(line.substr(0, comma), ok_u);
        double l = parse_double(line.substr(comma + 1), ok_l);
        if (!ok_u || !ok_l)
            throw ParseError("curve csv: row " + std::to_string(row) + ": malformed number");
        if (row == 1 && u != 0.0)
            throw ParseError("curve csv: row 1: first utilization must be 0");
        if (!pts.empty() && u <= pts.back().utilization)
            throw ParseError("curve csv: row " + std::to_string(row) + ": utilization not increasing");
        if (!pts.empty() && l < pts.back().latency_ns)
            throw ParseError("curve csv: row " + std::to_string(row) + ": latency decreases");
        pts.push_back({u, l});
    }
    if (!saw_header)
        throw ParseError("curve csv: empty input");
    if (pts.size() < 2)
        throw ParseError("curve csv: need at least 2 data rows, got " + std::to_string(pts.size()));
    return LoadLatencyCurve::from_points(std::move(pts), std::move(label));
}

inline std::string emit_curve_csv(const LoadLatencyCurve& curve) {
    std::string out{kCurveCsvHeader};
    out += '\n';
    for (const auto& p : curve.points()) {
        out += format_double(p.utilization);
        out += ',';
        out += format_double(p.latency_ns);
        out += '\n';
    }
    return out;
}

} // namespace salvage
