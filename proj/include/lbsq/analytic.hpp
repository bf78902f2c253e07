#pragma once

#include <cstddef>
#include <vector>

#include "lbsq/core.hpp"

namespace lbsq::analytic {

inline constexpr double kDefaultRootTolerance = 1e-10;
inline constexpr std::size_t kDefaultReportHorizon = 200;

/// Characteristic polynomial of the bulk queue,
///   f(z) = rho z^(k+1) - (r + rho) z^k + r.
/// z = 1 is always a root.
double characteristic(const SystemParams& p, double z);

/// f(z) / (z - 1) = rho z^k - r (z^(k-1) + ... + z + 1), i.e. the
/// characteristic polynomial with the trivial root divided out.
double deflated_characteristic(const SystemParams& p, double z);

struct CharacteristicRoot {
    double z0 = 0.0;
    double residual = 0.0;           // |f(z0)|
    double identity_residual = 0.0;  // |(rho/r)(z0 - 1) - (1 - z0^-k)|
    int iterations = 0;
    RawParams params;
};

/// Unique real root z0 > 1 of the characteristic polynomial. Bisection on the
/// deflated polynomial; the upper bracket is doubled from 2 until the sign
/// changes. Requires stable params.
CharacteristicRoot solve_z0(const SystemParams& p, double tol = kDefaultRootTolerance);

enum class DistributionKind { AnalyticPiecewise, CtmcNumeric, SimulationEmpirical };

/// Geometric tail P_n = first * ratio^(n - start) for n >= start.
struct GeometricTail {
    std::size_t start = 0;
    double ratio = 0.0;
    double first = 0.0;
};

struct StationaryDistribution {
    DistributionKind kind = DistributionKind::AnalyticPiecewise;
    std::vector<double> probabilities;  // P_0 .. P_N
    bool has_tail = false;
    GeometricTail tail;

    /// Mass of the explicit head plus the closed-form tail beyond it.
    double total_mass() const;
    /// sum n P_n including the tail beyond the head.
    double mean() const;
};

/// Queue-length probability P_n:
///   n <  k: (1/k)(1 - z0^(-n-1))
///   n >= k: (1/k)(z0^(k-n-1) - z0^(-n-1))
double state_prob(const SystemParams& p, const CharacteristicRoot& root, std::size_t n);

StationaryDistribution analytic_distribution(const SystemParams& p, const CharacteristicRoot& root,
                                             std::size_t horizon = kDefaultReportHorizon);

/// The closed forms as published:
///   L  = lambda/(mu r k) [k - 1/(z0-1)],   Lq = L - rho,
///   W  = 1/(mu r k) [k - 1/(z0-1)],        Wq = W - 1/mu,
///   S  = lambda/(mu r k).
/// These do not agree with the moments of the queue-length law above (at
/// k = 1, r = 1 they give L = 0), so the report carries a warning when L < 0
/// or when it strays more than 1% from distribution_metrics.
MetricsReport paper_metrics(const SystemParams& p, const CharacteristicRoot& root);

/// Metrics from the distribution itself: L = sum n P_n (closed-form tail),
/// W = L/lambda, Wq = W - 1/mu, Lq = lambda Wq, S = lambda/(mu r k).
MetricsReport distribution_metrics(const SystemParams& p, const CharacteristicRoot& root,
                                   std::size_t horizon = kDefaultReportHorizon);

/// Textbook M/M/1. Throws UnstableParameters unless lambda < mu.
MetricsReport mm1_metrics(double lambda, double mu);

struct ReductionReport {
    bool bulk_match = false;       // P_n == z0^(k-n-1)(1 - z0^-k)/k for n in [k, last]
    bool mm1_match = true;         // only checked when k == 1
    double max_bulk_deviation = 0.0;
    double max_mm1_deviation = 0.0;
    std::size_t last_index = 0;
};

/// Checks the r = 1 reduction to the M/M/1 bulk-service law over n = k..last
/// (and, for k = 1, against (1-rho) rho^n over n = 0..last). Throws
/// ReductionMismatch naming the first offending n, InvalidConfig if r != 1.
ReductionReport reduction_check(const SystemParams& p, std::size_t last = 50, double tol = 1e-10);

}  // namespace lbsq::analytic
