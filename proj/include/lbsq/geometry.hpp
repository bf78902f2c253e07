#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "lbsq/core.hpp"
#include "lbsq/random.hpp"

namespace lbsq::geometry {

enum class EdgeRule {
    MutualContainment,  // each position inside the other's tolerance rectangle
    AverageDistance,    // distance <= mean pairwise distance among the nodes
    Mmb,                // each position inside the other's movement boundary
};

struct Tolerance {
    double dx = 0.0;
    double dy = 0.0;
};

/// Every node i uses tolerances[i % size].
struct FixedTolerances {
    std::vector<Tolerance> tolerances;
};

/// dx ~ U[dx_min, dx_max], dy ~ U[dy_min, dy_max], independently per node.
struct UniformTolerances {
    double dx_min = 0.0;
    double dx_max = 0.0;
    double dy_min = 0.0;
    double dy_max = 0.0;
};

using ToleranceModel = std::variant<FixedTolerances, UniformTolerances>;

struct GeometryConfig {
    Region region;
    ToleranceModel tolerance_model = FixedTolerances{{Tolerance{0.2, 0.2}}};
    EdgeRule edge_rule = EdgeRule::MutualContainment;
    int k = 2;
    std::vector<double> mmb_areas;  // node i uses mmb_areas[i % size]
};

/// Throws InvalidGeometry. Tolerance widths may reach twice the region size:
/// a centered rectangle needs full width 2X to cover the region from any
/// anchor point.
void check_config(const GeometryConfig& cfg);

/// Pairwise test context. average_distance is only read by AverageDistance
/// and must be set (non-empty) for that rule to produce edges.
struct EdgeContext {
    EdgeRule rule = EdgeRule::MutualContainment;
    std::optional<double> average_distance;
};

/// Symmetric in (p, q) for every rule. Tolerance rectangles are centered on
/// the issuing position with full widths dx, dy; an MMB of area a is the
/// centered square of side sqrt(a).
bool edge(const LbsQuery& p, const LbsQuery& q, const EdgeContext& ctx);

/// Mean Euclidean distance over all unordered node pairs; empty when fewer
/// than two nodes.
std::optional<double> mean_pairwise_distance(const std::vector<LbsQuery>& nodes);

class ConstraintGraph {
public:
    ConstraintGraph() = default;
    explicit ConstraintGraph(std::vector<LbsQuery> nodes);

    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<LbsQuery>& nodes() const noexcept { return nodes_; }

    bool adjacent(std::size_t a, std::size_t b) const;
    void connect(std::size_t a, std::size_t b);
    void disconnect(std::size_t a, std::size_t b);
    std::size_t edge_count() const;

private:
    std::vector<LbsQuery> nodes_;
    std::vector<char> adj_;  // row-major size x size
};

/// Constraint graph over `nodes` with edges from the given rule. For
/// AverageDistance the threshold is the mean pairwise distance of all nodes.
ConstraintGraph build_graph(std::vector<LbsQuery> nodes, EdgeRule rule);

/// Some k-clique containing the most recently added node (the last one), as
/// ascending node indices. k = 1 returns that node alone.
std::optional<std::vector<std::size_t>> clique_exists(const ConstraintGraph& g, int k);

/// Lexicographically smallest k-clique among all nodes (so older nodes are
/// preferred when nodes are in arrival order).
std::optional<std::vector<std::size_t>> find_clique(const ConstraintGraph& g, int k);

/// Closed-form success probability, two readings of the same derivation.
struct ClosedFormR {
    /// prod_i a_i^(k-1) / (XY)^(2k), as published.
    double printed = 0.0;
    /// prod_i a_i^(k-1) / (XY)^(k(k-1)): one factor a_p a_q / (XY)^2 per
    /// edge of the k-clique, edges treated as independent. Equal to the
    /// printed value when k = 3.
    double independence = 0.0;
};

/// a_i = min(dx_i, X) * min(dy_i, Y). Requires k >= 2 and one tolerance per
/// node (size == k); throws InvalidGeometry otherwise.
ClosedFormR r_cliquecloak(const std::vector<Tolerance>& tolerances, const Region& region, int k);

/// Same as r_cliquecloak with a_i = min(MMB_i, XY).
ClosedFormR r_iclique(const std::vector<double>& mmb_areas, const Region& region, int k);

struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
    std::size_t successes = 0;
};

/// Monte Carlo probability that k uniformly placed queries (tolerances drawn
/// per the config) form a k-clique. Requires samples >= 1e4.
Estimate mc_clique_prob(const GeometryConfig& cfg, std::size_t samples, RandomStream& stream);

/// Draws a query position uniformly in the region and tolerances/MMB for the
/// node with the given index.
LbsQuery sample_query(const GeometryConfig& cfg, std::size_t node_index, RandomStream& stream);

}  // namespace lbsq::geometry
