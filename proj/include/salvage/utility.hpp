#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "salvage/core.hpp"

namespace salvage {

/// Pod of n servers sharing one salvage memory device; p is the probability
/// a server's link has enough idle bandwidth to salvage through, x the
/// provisioned memory-to-link bandwidth ratio. n == 1 is the solo topology.
struct PodConfig {
    std::size_t n = 1;
    double p = 0.0;
    double x = 1.0;

    void validate() const {
        if (n < 1)
            throw std::invalid_argument("pod: n must be at least 1");
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("pod: p must lie in [0,1]");
        if (!(x > 0.0))
            throw std::invalid_argument("pod: provisioning ratio must be positive");
    }
};

/// With a single server the provisioned memory is reachable exactly when
/// that server's link is idle.
inline double solo_utility(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("solo_utility: p must lie in [0,1]");
    return p;
}

/// Probability at least one of n independent links is idle: 1 - (1-p)^n.
inline double pod_utility(std::size_t n, double p) {
    if (n < 1)
        throw std::invalid_argument("pod_utility: n must be at least 1");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("pod_utility: p must lie in [0,1]");
    return 1.0 - std::pow(1.0 - p, static_cast<double>(n));
}

namespace detail {

// Binomial pmf. k == 0 uses the same pow(1-p, n) expression pod_utility
// uses, which keeps the x == 1 identity bit-exact; larger k go through
// log-space for stability at any n.
inline double binomial_pmf(std::size_t n, std::size_t k, double p) {
    if (k == 0)
        return std::pow(1.0 - p, static_cast<double>(n));
    if (p == 0.0)
        return 0.0;
    if (p == 1.0)
        return k == n ? 1.0 : 0.0;
    double nn = static_cast<double>(n);
    double kk = static_cast<double>(k);
    double log_choose =
        std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0);
    return std::exp(log_choose + kk * std::log(p) + (nn - kk) * std::log1p(-p));
}

// A fully idle link carries salvage traffic in both directions at once, so
// each of the K idle links contributes up to two link-widths of aggregate
// memory bandwidth against the provisioned x link-widths.
inline double usable_share(std::size_t k_idle, double x) {
    return std::min(2.0 * static_cast<double>(k_idle), x) / x;
}

} // namespace detail

/// Expected fraction of the provisioned salvage-memory bandwidth that the
/// pod's idle links can actually drive: E[min(2K, x)] / x with K ~ Bin(n, p),
/// by exact binomial summation. Reduces to pod_utility at x == 1.
inline double provisioned_utility(std::size_t n, double p, double x) {
    PodConfig{n, p, x}.validate();
    // 1 - E[(x - 2K)^+]/x; at x == 1 only the K = 0 term survives, giving
    // exactly 1 - (1-p)^n.
    double shortfall = 0.0;
    for (std::size_t k = 0; 2.0 * static_cast<double>(k) < x && k <= n; ++k)
        shortfall += detail::binomial_pmf(n, k, p) * (x - 2.0 * static_cast<double>(k));
    return 1.0 - shortfall / x;
}

/// Monte Carlo estimate of provisioned_utility from seeded binomial draws.
/// Deterministic for a fixed seed.
inline double provisioned_utility_mc(std::size_t n, double p, double x, std::size_t samples,
                                     std::uint64_t seed) {
    PodConfig{n, p, x}.validate();
    if (samples < 1)
        throw std::invalid_argument("provisioned_utility_mc: need at least 1 sample");
    if (p == 0.0)
        return 0.0;
    if (p == 1.0)
        return detail::usable_share(n, x);
    std::mt19937_64 rng(seed);
    std::binomial_distribution<int> idle(static_cast<int>(n), p);
    double acc = 0.0;
    for (std::size_t i = 0; i < samples; ++i)
        acc += detail::usable_share(static_cast<std::size_t>(idle(rng)), x);
    return acc / static_cast<double>(samples);
}

} // namespace salvage
