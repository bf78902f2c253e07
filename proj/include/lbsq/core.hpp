#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lbsq {

/// Error categories raised across the toolkit. The CLI maps these to exit codes.
enum class ErrorKind {
    UnstableParameters,
    NonPositiveRate,
    ROutOfRange,
    InvalidK,
    NoRootBeyondOne,
    ToleranceNotReached,
    ReductionMismatch,
    TruncationTooSmall,
    SingularSystem,
    BalanceViolation,
    InvalidGeometry,
    InvalidConfig,
    ParameterMismatch,
    IoFailure,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Unvalidated parameter tuple as read from flags or config.
struct RawParams {
    double lambda = 5.0;
    double mu = 10.0;
    int k = 3;
    double r = 0.33;
};

/// Checked (lambda, mu, k, r). Only obtainable through validate_params or
/// admit_unstable, so holders can rely on positivity and 0 < r <= 1.
class SystemParams {
public:
    double lambda() const noexcept { return lambda_; }
    double mu() const noexcept { return mu_; }
    int k() const noexcept { return k_; }
    double r() const noexcept { return r_; }

    /// Traffic intensity lambda/mu. Reported as a diagnostic; it is not the
    /// stability criterion for the bulk chain.
    double rho() const noexcept { return lambda_ / mu_; }

    /// Effective batch throughput capacity mu*r*k.
    double capacity() const noexcept { return mu_ * r_ * k_; }

    /// lambda / (mu r k)
    double utilization() const noexcept { return lambda_ / capacity(); }

    bool stable() const noexcept { return lambda_ < capacity(); }

    RawParams raw() const noexcept { return {lambda_, mu_, k_, r_}; }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;

    friend SystemParams validate_params(const RawParams& p);
    friend SystemParams admit_unstable(const RawParams& p);

private:
    SystemParams(double lambda, double mu, int k, double r) : lambda_(lambda), mu_(mu), k_(k), r_(r) {}

    double lambda_;
    double mu_;
    int k_;
    double r_;
};

/// Throws NonPositiveRate, InvalidK, ROutOfRange or UnstableParameters
/// (lambda >= mu r k), checked in that order.
SystemParams validate_params(const RawParams& p);

/// Same domain checks as validate_params but skips the stability test. Only
/// the simulator's unstable-run mode should use this.
SystemParams admit_unstable(const RawParams& p);

struct Region {
    double width = 1.0;   // X
    double height = 1.0;  // Y

    double area() const noexcept { return width * height; }
};

void check_region(const Region& region);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Anonymization request: identity, position/time, requested anonymity level,
/// spatial/temporal tolerance and opaque content.
struct LbsQuery {
    std::uint64_t user_id = 0;
    std::uint64_t query_no = 0;
    Point position;
    double timestamp = 0.0;
    int anonymity_k = 1;
    double dx = 0.0;  // full width of the tolerance rectangle
    double dy = 0.0;
    double dt = 0.0;
    std::string content;
    // Maximum movement boundary area, only consulted by the MMB edge rule.
    double mmb_area = 0.0;
};

/// Throws InvalidGeometry when the position lies outside the region or a
/// tolerance is negative.
void check_query(const LbsQuery& q, const Region& region);

/// Throws InvalidConfig if any (user_id, query_no) pair repeats.
void check_unique_ids(const std::vector<LbsQuery>& queries);

enum class Provenance { PaperClosedForm, Distribution, Ctmc, Simulation, Mm1Baseline };

std::string_view to_string(Provenance p);

struct MetricsReport {
    double L = 0.0;
    double Lq = 0.0;
    double W = 0.0;
    double Wq = 0.0;
    double S = 0.0;
    Provenance provenance = Provenance::Distribution;
    RawParams params;
    std::vector<std::string> warnings;

    /// |L - lambda W| / L using the nominal arrival rate; 0 when L == 0.
    double littles_law_residual() const;
};

}  // namespace lbsq
