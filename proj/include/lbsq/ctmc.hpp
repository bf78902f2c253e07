#pragma once

#include <cstddef>
#include <vector>

#include "lbsq/core.hpp"

namespace lbsq::ctmc {

/// Dense solves are used up to this many states; larger chains fall back to
/// power iteration on the uniformized chain.
inline constexpr std::size_t kDenseLimit = 2000;
inline constexpr double kTailThreshold = 1e-8;
inline constexpr double kBalanceTolerance = 1e-10;

struct Transition {
    std::size_t to;
    double rate;
};

/// Generator of the bulk-service chain truncated to states 0..N.
/// Arrivals n -> n+1 at lambda for n < N; successful attempts n -> n-k at
/// mu*r for n >= k. Failed attempts are self-transitions and do not appear.
class GeneratorMatrix {
public:
    std::size_t truncation() const noexcept { return rows_.size() - 1; }
    std::size_t dimension() const noexcept { return rows_.size(); }
    const std::vector<Transition>& row(std::size_t n) const { return rows_.at(n); }
    double diagonal(std::size_t n) const { return diag_.at(n); }
    const SystemParams& params() const noexcept { return params_; }

    /// Off-diagonal rate n -> m, 0 when absent.
    double rate(std::size_t from, std::size_t to) const;

    friend GeneratorMatrix build_generator(const SystemParams& p, std::size_t truncation);

private:
    explicit GeneratorMatrix(const SystemParams& p) : params_(p) {}

    SystemParams params_;
    std::vector<std::vector<Transition>> rows_;
    std::vector<double> diag_;
};

/// Throws TruncationTooSmall when truncation < 10 k.
GeneratorMatrix build_generator(const SystemParams& p, std::size_t truncation);

enum class SolveMethod { DenseLu, PowerIteration };

struct CtmcSolution {
    std::vector<double> probabilities;
    double residual = 0.0;   // max violation of the printed balance relations
    double tail_mass = 0.0;  // mass of the top 10 states
    SolveMethod method = SolveMethod::DenseLu;
    RawParams params;
};

/// Largest violation of the state balance relations
///   n = 0:      P_0 lambda             = P_k mu r
///   0 < n < k:  P_n lambda             = P_{n-1} lambda + P_{n+k} mu r
///   n >= k:     P_n (mu r + lambda)    = P_{n-1} lambda + P_{n+k} mu r
/// over the states unaffected by truncation (n + k <= N - 1).
double balance_residual(const SystemParams& p, const std::vector<double>& pi);

/// Solves pi Q = 0 with sum(pi) = 1. Throws SingularSystem, TruncationTooSmall
/// (top-10 mass above 1e-8) or BalanceViolation.
CtmcSolution stationary(const GeneratorMatrix& g);

/// L = sum n pi_n, W = L/lambda, Wq = W - 1/mu, Lq = lambda Wq, S = lambda/(mu r k).
MetricsReport ctmc_metrics(const CtmcSolution& sol, const SystemParams& p);

}  // namespace lbsq::ctmc
