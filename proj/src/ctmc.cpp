#include "lbsq/ctmc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lbsq::ctmc {

double GeneratorMatrix::rate(std::size_t from, std::size_t to) const {
    for (const auto& t : rows_.at(from)) {
        if (t.to == to) return t.rate;
    }
    return 0.0;
}

GeneratorMatrix build_generator(const SystemParams& p, std::size_t truncation) {
    const auto k = static_cast<std::size_t>(p.k());
    if (truncation < 10 * k) {
        throw Error(ErrorKind::TruncationTooSmall,
                    "truncation " + std::to_string(truncation) + " is below 10k = " + std::to_string(10 * k));
    }
    GeneratorMatrix g(p);
    g.rows_.resize(truncation + 1);
    g.diag_.assign(truncation + 1, 0.0);
    const double service = p.mu() * p.r();
    for (std::size_t n = 0; n <= truncation; ++n) {
        auto& row = g.rows_[n];
        if (n < truncation) row.push_back({n + 1, p.lambda()});
        if (n >= k) row.push_back({n - k, service});
        double out = 0.0;
        for (const auto& t : row) out += t.rate;
        g.diag_[n] = -out;
    }
    return g;
}

double balance_residual(const SystemParams& p, const std::vector<double>& pi) {
    if (pi.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(p.k());
    const std::size_t top = pi.size() - 1;
    const double lambda = p.lambda();
    const double service = p.mu() * p.r();
    double worst = 0.0;
    for (std::size_t n = 0; n + k + 1 <= top; ++n) {
        double lhs = 0.0;
        double rhs = 0.0;
        if (n == 0) {
            lhs = pi[0] * lambda;
            rhs = pi[k] * service;
        } else if (n < k) {
            lhs = pi[n] * lambda;
            rhs = pi[n - 1] * lambda + pi[n + k] * service;
        } else {
            lhs = pi[n] * (service + lambda);
            rhs = pi[n - 1] * lambda + pi[n + k] * service;
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

namespace {

std::vector<double> solve_dense(const GeneratorMatrix& g) {
    const auto dim = static_cast<Eigen::Index>(g.dimension());
    // A = Q^T with the last balance equation replaced by normalization.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index n = 0; n < dim; ++n) {
        a(n, n) = g.diagonal(static_cast<std::size_t>(n));
        for (const auto& t : g.row(static_cast<std::size_t>(n))) a(static_cast<Eigen::Index>(t.to), n) += t.rate;
    }
    a.row(dim - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    b(dim - 1) = 1.0;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream os;
        os << "reciprocal condition number " << rcond;
        throw Error(ErrorKind::SingularSystem, os.str());
    }
    const Eigen::VectorXd x = lu.solve(b);
    return {x.data(), x.data() + x.size()};
}

std::vector<double> solve_power(const GeneratorMatrix& g) {
    const std::size_t dim = g.dimension();
    double max_out = 0.0;
    for (std::size_t n = 0; n < dim; ++n) max_out = std::max(max_out, -g.diagonal(n));
    // Slack keeps a self-loop on every state so the uniformized chain is aperiodic.
    const double uniform_rate = 1.05 * max_out;

    std::vector<double> pi(dim, 1.0 / static_cast<double>(dim));
    std::vector<double> next(dim);
    constexpr std::size_t kMaxIterations = 20'000'000;
    for (std::size_t it = 0; it < kMaxIterations; ++it) {
        for (std::size_t n = 0; n < dim; ++n) next[n] = pi[n] * (1.0 + g.diagonal(n) / uniform_rate);
        for (std::size_t n = 0; n < dim; ++n) {
            for (const auto& t : g.row(n)) next[t.to] += pi[n] * t.rate / uniform_rate;
        }
        double change = 0.0;
        for (std::size_t n = 0; n < dim; ++n) change += std::abs(next[n] - pi[n]);
        pi.swap(next);
        if (change < 1e-14) return pi;
    }
    throw Error(ErrorKind::SingularSystem, "power iteration did not converge");
}

}  // namespace

CtmcSolution stationary(const GeneratorMatrix& g) {
    CtmcSolution sol;
    sol.params = g.params().raw();
    if (g.dimension() <= kDenseLimit) {
        sol.probabilities = solve_dense(g);
        sol.method = SolveMethod::DenseLu;
    } else {
        sol.probabilities = solve_power(g);
        sol.method = SolveMethod::PowerIteration;
    }

    auto& pi = sol.probabilities;
    for (double& v : pi) {
        if (!std::isfinite(v)) throw Error(ErrorKind::SingularSystem, "non-finite stationary probability");
        v = std::max(v, 0.0);
    }
    const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& v : pi) v /= total;

    const std::size_t top = std::min<std::size_t>(10, pi.size());
    sol.tail_mass = std::accumulate(pi.end() - static_cast<std::ptrdiff_t>(top), pi.end(), 0.0);
    if (sol.tail_mass > kTailThreshold) {
        std::ostringstream os;
        os << "mass " << sol.tail_mass << " in the top 10 of " << pi.size() << " states exceeds " << kTailThreshold;
        throw Error(ErrorKind::TruncationTooSmall, os.str());
    }

    sol.residual = balance_residual(g.params(), pi);
    if (sol.residual > kBalanceTolerance) {
        std::ostringstream os;
        os << "balance residual " << sol.residual;
        throw Error(ErrorKind::BalanceViolation, os.str());
    }
    return sol;
}

MetricsReport ctmc_metrics(const CtmcSolution& sol, const SystemParams& p) {
    if (!(sol.params.lambda == p.lambda() && sol.params.mu == p.mu() && sol.params.k == p.k() &&
          sol.params.r == p.r())) {
        throw Error(ErrorKind::ParameterMismatch, "solution was computed for different parameters");
    }
    MetricsReport m;
    m.provenance = Provenance::Ctmc;
    m.params = p.raw();
    for (std::size_t n = 0; n < sol.probabilities.size(); ++n) m.L += static_cast<double>(n) * sol.probabilities[n];
    m.W = m.L / p.lambda();
    m.Wq = m.W - 1.0 / p.mu();
    m.Lq = p.lambda() * m.Wq;
    m.S = p.utilization();
    return m;
}

}  // namespace lbsq::ctmc
