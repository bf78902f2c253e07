#include "lbsq/core.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <utility>

namespace lbsq {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UnstableParameters: return "UnstableParameters";
        case ErrorKind::NonPositiveRate: return "NonPositiveRate";
        case ErrorKind::ROutOfRange: return "ROutOfRange";
        case ErrorKind::InvalidK: return "InvalidK";
        case ErrorKind::NoRootBeyondOne: return "NoRootBeyondOne";
        case ErrorKind::ToleranceNotReached: return "ToleranceNotReached";
        case ErrorKind::ReductionMismatch: return "ReductionMismatch";
        case ErrorKind::TruncationTooSmall: return "TruncationTooSmall";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::BalanceViolation: return "BalanceViolation";
        case ErrorKind::InvalidGeometry: return "InvalidGeometry";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::ParameterMismatch: return "ParameterMismatch";
        case ErrorKind::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::PaperClosedForm: return "paper-closed-form";
        case Provenance::Distribution: return "distribution";
        case Provenance::Ctmc: return "ctmc";
        case Provenance::Simulation: return "simulation";
        case Provenance::Mm1Baseline: return "mm1-baseline";
    }
    return "unknown";
}

namespace {

void check_domain(const RawParams& p) {
    if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) {
        throw Error(ErrorKind::NonPositiveRate, "lambda must be positive");
    }
    if (!(p.mu > 0.0) || !std::isfinite(p.mu)) {
        throw Error(ErrorKind::NonPositiveRate, "mu must be positive");
    }
    if (p.k < 1) {
        throw Error(ErrorKind::InvalidK, "k must be at least 1");
    }
    if (!(p.r > 0.0 && p.r <= 1.0)) {
        throw Error(ErrorKind::ROutOfRange, "r must lie in (0, 1]");
    }
}

}  // namespace

SystemParams validate_params(const RawParams& p) {
    check_domain(p);
    SystemParams checked(p.lambda, p.mu, p.k, p.r);
    if (!checked.stable()) {
        std::ostringstream os;
        os << "lambda = " << p.lambda << " >= mu*r*k = " << checked.capacity()
           << "; the queue drains k requests per successful attempt at rate mu*r, so stability needs lambda < mu*r*k";
        throw Error(ErrorKind::UnstableParameters, os.str());
    }
    return checked;
}

SystemParams admit_unstable(const RawParams& p) {
    check_domain(p);
    return SystemParams(p.lambda, p.mu, p.k, p.r);
}

void check_region(const Region& region) {
    if (!(region.width > 0.0) || !(region.height > 0.0)) {
        throw Error(ErrorKind::InvalidGeometry, "region dimensions must be positive");
    }
}

void check_query(const LbsQuery& q, const Region& region) {
    if (q.position.x < 0.0 || q.position.x > region.width || q.position.y < 0.0 || q.position.y > region.height) {
        throw Error(ErrorKind::InvalidGeometry, "query position outside region");
    }
    if (q.dx < 0.0 || q.dy < 0.0 || q.dt < 0.0) {
        throw Error(ErrorKind::InvalidGeometry, "tolerances must be non-negative");
    }
    if (q.anonymity_k < 1) {
        throw Error(ErrorKind::InvalidK, "anonymity level must be at least 1");
    }
}

void check_unique_ids(const std::vector<LbsQuery>& queries) {
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    for (const auto& q : queries) {
        if (!seen.emplace(q.user_id, q.query_no).second) {
            throw Error(ErrorKind::InvalidConfig, "duplicate (user_id, query_no) = (" + std::to_string(q.user_id) + ", " +
                                                      std::to_string(q.query_no) + ")");
        }
    }
}

double MetricsReport::littles_law_residual() const {
    if (L == 0.0) return 0.0;
    return std::abs(L - params.lambda * W) / L;
}

}  // namespace lbsq
