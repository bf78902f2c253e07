#include "lbsq/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lbsq::analytic {

namespace {

long double characteristic_ld(const SystemParams& p, long double z) {
    const long double rho = p.rho();
    const long double r = p.r();
    const long double zk = std::pow(z, static_cast<long double>(p.k()));
    return zk * (rho * z - (r + rho)) + r;
}

// Horner on the quotient of f by (z - 1): coefficients rho, -r, -r, ..., -r.
long double deflated_ld(const SystemParams& p, long double z) {
    long double acc = p.rho();
    for (int i = 0; i < p.k(); ++i) acc = acc * z - static_cast<long double>(p.r());
    return acc;
}

}  // namespace

double characteristic(const SystemParams& p, double z) {
    return static_cast<double>(characteristic_ld(p, z));
}

double deflated_characteristic(const SystemParams& p, double z) {
    return static_cast<double>(deflated_ld(p, z));
}

CharacteristicRoot solve_z0(const SystemParams& p, double tol) {
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "root tolerance must be positive");
    if (!p.stable()) throw Error(ErrorKind::UnstableParameters, "characteristic root requires lambda < mu r k");

    long double lo = 1.0L + 1e-9L;
    long double hi = 2.0L;
    if (!(deflated_ld(p, lo) < 0.0L)) {
        throw Error(ErrorKind::NoRootBeyondOne, "deflated polynomial is not negative just above z = 1");
    }
    int doublings = 0;
    while (!(deflated_ld(p, hi) > 0.0L)) {
        lo = hi;
        hi *= 2.0L;
        if (++doublings > 2000) throw Error(ErrorKind::NoRootBeyondOne, "no sign change found above z = 1");
    }

    int iterations = 0;
    for (; iterations < 1000; ++iterations) {
        const long double mid = lo + (hi - lo) / 2.0L;
        if (mid <= lo || mid >= hi) break;
        const long double g = deflated_ld(p, mid);
        if (g == 0.0L) {
            lo = hi = mid;
            break;
        }
        (g < 0.0L ? lo : hi) = mid;
    }

    CharacteristicRoot root;
    root.z0 = static_cast<double>(lo + (hi - lo) / 2.0L);
    root.iterations = iterations;
    root.params = p.raw();
    root.residual = static_cast<double>(std::abs(characteristic_ld(p, root.z0)));

    // Rounding z0 to double perturbs f by about eps * z0 * f'(z0), which for
    // large z0 and k dwarfs any fixed absolute tolerance; compare against the
    // largest term of f once it exceeds 1.
    const long double z = root.z0;
    const long double scale = std::max(1.0L, p.rho() * std::pow(z, static_cast<long double>(p.k() + 1)));
    if (root.residual > tol * scale) {
        std::ostringstream os;
        os << "|f(z0)| = " << root.residual << " exceeds " << tol * scale;
        throw Error(ErrorKind::ToleranceNotReached, os.str());
    }

    const long double lhs = (static_cast<long double>(p.rho()) / p.r()) * (z - 1.0L);
    const long double rhs = 1.0L - std::pow(z, -static_cast<long double>(p.k()));
    root.identity_residual = static_cast<double>(std::abs(lhs - rhs));
    if (root.identity_residual > 10.0 * tol) {
        std::ostringstream os;
        os << "root identity (rho/r)(z0-1) = 1 - z0^-k violated by " << root.identity_residual;
        throw Error(ErrorKind::ToleranceNotReached, os.str());
    }
    return root;
}

double state_prob(const SystemParams& p, const CharacteristicRoot& root, std::size_t n) {
    const double k = p.k();
    const double z0 = root.z0;
    const double m = static_cast<double>(n);
    if (n < static_cast<std::size_t>(p.k())) {
        return (1.0 - std::pow(z0, -m - 1.0)) / k;
    }
    return (std::pow(z0, k - m - 1.0) - std::pow(z0, -m - 1.0)) / k;
}

double StationaryDistribution::total_mass() const {
    double mass = 0.0;
    for (double v : probabilities) mass += v;
    if (has_tail && tail.ratio < 1.0) {
        // sum over n >= N+1 of first * ratio^(n - start)
        const std::size_t next = probabilities.size();
        if (next >= tail.start) {
            const double lead = tail.first * std::pow(tail.ratio, static_cast<double>(next - tail.start));
            mass += lead / (1.0 - tail.ratio);
        }
    }
    return mass;
}

double StationaryDistribution::mean() const {
    double m = 0.0;
    for (std::size_t n = 0; n < probabilities.size(); ++n) m += static_cast<double>(n) * probabilities[n];
    if (has_tail && tail.ratio < 1.0) {
        const std::size_t next = probabilities.size();
        if (next >= tail.start) {
            // sum_{n >= a} n q^(n-s) = q^(a-s) [a/(1-q) + q/(1-q)^2]
            const double q = tail.ratio;
            const double a = static_cast<double>(next);
            const double lead = tail.first * std::pow(q, a - static_cast<double>(tail.start));
            m += lead * (a / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
        }
    }
    return m;
}

StationaryDistribution analytic_distribution(const SystemParams& p, const CharacteristicRoot& root,
                                             std::size_t horizon) {
    StationaryDistribution dist;
    dist.kind = DistributionKind::AnalyticPiecewise;
    dist.probabilities.reserve(horizon + 1);
    for (std::size_t n = 0; n <= horizon; ++n) dist.probabilities.push_back(state_prob(p, root, n));
    dist.has_tail = true;
    dist.tail.start = static_cast<std::size_t>(p.k());
    dist.tail.ratio = 1.0 / root.z0;
    dist.tail.first = state_prob(p, root, dist.tail.start);
    return dist;
}

MetricsReport paper_metrics(const SystemParams& p, const CharacteristicRoot& root) {
    const double lambda = p.lambda();
    const double mu = p.mu();
    const double rk = p.r() * p.k();
    const double bracket = p.k() - 1.0 / (root.z0 - 1.0);

    MetricsReport m;
    m.provenance = Provenance::PaperClosedForm;
    m.params = p.raw();
    m.L = lambda / (mu * rk) * bracket;
    m.Lq = m.L - p.rho();
    m.W = bracket / (mu * rk);
    m.Wq = m.W - 1.0 / mu;
    m.S = lambda / (mu * rk);

    if (m.L < 0.0) m.warnings.push_back("closed-form L is negative");
    const MetricsReport ref = distribution_metrics(p, root);
    const double rel = std::abs(m.L - ref.L) / ref.L;
    if (rel > 0.01) {
        std::ostringstream os;
        os.precision(12);
        os << "closed-form L = " << m.L << " differs from sum n P_n = " << ref.L << " by " << rel * 100.0 << "%";
        m.warnings.push_back(os.str());
    }
    return m;
}

MetricsReport distribution_metrics(const SystemParams& p, const CharacteristicRoot& root, std::size_t horizon) {
    const StationaryDistribution dist = analytic_distribution(p, root, horizon);
    MetricsReport m;
    m.provenance = Provenance::Distribution;
    m.params = p.raw();
    m.L = dist.mean();
    m.W = m.L / p.lambda();
    m.Wq = m.W - 1.0 / p.mu();
    m.Lq = p.lambda() * m.Wq;
    m.S = p.utilization();
    return m;
}

MetricsReport mm1_metrics(double lambda, double mu) {
    if (!(lambda > 0.0) || !(mu > 0.0)) throw Error(ErrorKind::NonPositiveRate, "M/M/1 rates must be positive");
    if (!(lambda < mu)) throw Error(ErrorKind::UnstableParameters, "M/M/1 requires lambda < mu");
    const double rho = lambda / mu;
    MetricsReport m;
    m.provenance = Provenance::Mm1Baseline;
    m.params = RawParams{lambda, mu, 1, 1.0};
    m.L = rho / (1.0 - rho);
    m.W = 1.0 / (mu - lambda);
    m.Lq = rho * rho / (1.0 - rho);
    m.Wq = rho / (mu - lambda);
    m.S = rho;
    return m;
}

ReductionReport reduction_check(const SystemParams& p, std::size_t last, double tol) {
    if (p.r() != 1.0) throw Error(ErrorKind::InvalidConfig, "reduction check requires r = 1");
    const CharacteristicRoot root = solve_z0(p);
    const double z0 = root.z0;
    const double k = p.k();

    ReductionReport rep;
    rep.last_index = last;
    for (std::size_t n = static_cast<std::size_t>(p.k()); n <= last; ++n) {
        const double bulk = std::pow(z0, k - static_cast<double>(n) - 1.0) / k * (1.0 - std::pow(z0, -k));
        const double dev = std::abs(state_prob(p, root, n) - bulk);
        rep.max_bulk_deviation = std::max(rep.max_bulk_deviation, dev);
        if (dev > tol) {
            throw Error(ErrorKind::ReductionMismatch, "bulk-service law differs at n = " + std::to_string(n));
        }
    }
    rep.bulk_match = true;

    if (p.k() == 1) {
        const double rho = p.rho();
        for (std::size_t n = 0; n <= last; ++n) {
            const double mm1 = (1.0 - rho) * std::pow(rho, static_cast<double>(n));
            const double dev = std::abs(state_prob(p, root, n) - mm1);
            rep.max_mm1_deviation = std::max(rep.max_mm1_deviation, dev);
            if (dev > tol) {
                throw Error(ErrorKind::ReductionMismatch, "M/M/1 law differs at n = " + std::to_string(n));
            }
        }
    }
    return rep;
}

}  // namespace lbsq::analytic
