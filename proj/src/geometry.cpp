#include "lbsq/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lbsq::geometry {

void check_config(const GeometryConfig& cfg) {
    check_region(cfg.region);
    const double max_dx = 2.0 * cfg.region.width;
    const double max_dy = 2.0 * cfg.region.height;
    auto check_tol = [&](double dx, double dy) {
        if (dx < 0.0 || dy < 0.0 || dx > max_dx || dy > max_dy) {
            throw Error(ErrorKind::InvalidGeometry, "tolerances must lie in [0, 2X] x [0, 2Y]");
        }
    };
    std::visit(
        [&](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, FixedTolerances>) {
                if (model.tolerances.empty()) throw Error(ErrorKind::InvalidGeometry, "no tolerances given");
                for (const auto& t : model.tolerances) check_tol(t.dx, t.dy);
            } else {
                check_tol(model.dx_min, model.dy_min);
                check_tol(model.dx_max, model.dy_max);
                if (model.dx_min > model.dx_max || model.dy_min > model.dy_max) {
                    throw Error(ErrorKind::InvalidGeometry, "tolerance range is inverted");
                }
            }
        },
        cfg.tolerance_model);
    if (cfg.k < 1) throw Error(ErrorKind::InvalidK, "clique size must be at least 1");
    if (cfg.edge_rule == EdgeRule::Mmb) {
        if (cfg.mmb_areas.empty()) throw Error(ErrorKind::InvalidGeometry, "MMB rule needs mmb areas");
        for (double a : cfg.mmb_areas) {
            if (a < 0.0) throw Error(ErrorKind::InvalidGeometry, "MMB areas must be non-negative");
        }
    }
}

namespace {

bool inside_centered(const Point& point, const Point& center, double width, double height) {
    return std::abs(point.x - center.x) <= width / 2.0 && std::abs(point.y - center.y) <= height / 2.0;
}

}  // namespace

bool edge(const LbsQuery& p, const LbsQuery& q, const EdgeContext& ctx) {
    switch (ctx.rule) {
        case EdgeRule::MutualContainment:
            return inside_centered(p.position, q.position, q.dx, q.dy) &&
                   inside_centered(q.position, p.position, p.dx, p.dy);
        case EdgeRule::AverageDistance: {
            if (!ctx.average_distance) return false;
            const double d = std::hypot(p.position.x - q.position.x, p.position.y - q.position.y);
            return d <= *ctx.average_distance;
        }
        case EdgeRule::Mmb: {
            const double sp = std::sqrt(std::max(p.mmb_area, 0.0));
            const double sq = std::sqrt(std::max(q.mmb_area, 0.0));
            return inside_centered(p.position, q.position, sq, sq) && inside_centered(q.position, p.position, sp, sp);
        }
    }
    return false;
}

std::optional<double> mean_pairwise_distance(const std::vector<LbsQuery>& nodes) {
    if (nodes.size() < 2) return std::nullopt;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            sum += std::hypot(nodes[i].position.x - nodes[j].position.x, nodes[i].position.y - nodes[j].position.y);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

ConstraintGraph::ConstraintGraph(std::vector<LbsQuery> nodes)
    : nodes_(std::move(nodes)), adj_(nodes_.size() * nodes_.size(), 0) {}

bool ConstraintGraph::adjacent(std::size_t a, std::size_t b) const {
    return adj_.at(a * nodes_.size() + b) != 0;
}

void ConstraintGraph::connect(std::size_t a, std::size_t b) {
    if (a == b) return;  // irreflexive
    adj_.at(a * nodes_.size() + b) = 1;
    adj_.at(b * nodes_.size() + a) = 1;
}

void ConstraintGraph::disconnect(std::size_t a, std::size_t b) {
    adj_.at(a * nodes_.size() + b) = 0;
    adj_.at(b * nodes_.size() + a) = 0;
}

std::size_t ConstraintGraph::edge_count() const {
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), 1)) / 2;
}

ConstraintGraph build_graph(std::vector<LbsQuery> nodes, EdgeRule rule) {
    EdgeContext ctx{rule, std::nullopt};
    if (rule == EdgeRule::AverageDistance) ctx.average_distance = mean_pairwise_distance(nodes);
    ConstraintGraph g(std::move(nodes));
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            if (edge(g.nodes()[i], g.nodes()[j], ctx)) g.connect(i, j);
        }
    }
    return g;
}

namespace {

// Depth-first extension in ascending index order; the first clique found is
// the lexicographically smallest.
bool extend(const ConstraintGraph& g, std::vector<std::size_t>& chosen, const std::vector<std::size_t>& candidates,
            std::size_t start, std::size_t need) {
    if (chosen.size() == need) return true;
    for (std::size_t i = start; i < candidates.size(); ++i) {
        if (candidates.size() - i < need - chosen.size()) return false;
        const std::size_t v = candidates[i];
        const bool fits = std::all_of(chosen.begin(), chosen.end(), [&](std::size_t u) { return g.adjacent(u, v); });
        if (!fits) continue;
        chosen.push_back(v);
        if (extend(g, chosen, candidates, i + 1, need)) return true;
        chosen.pop_back();
    }
    return false;
}

}  // namespace

std::optional<std::vector<std::size_t>> clique_exists(const ConstraintGraph& g, int k) {
    if (k < 1) throw Error(ErrorKind::InvalidK, "clique size must be at least 1");
    if (g.size() == 0 || static_cast<std::size_t>(k) > g.size()) return std::nullopt;
    const std::size_t anchor = g.size() - 1;
    std::vector<std::size_t> neighbours;
    for (std::size_t v = 0; v < anchor; ++v) {
        if (g.adjacent(anchor, v)) neighbours.push_back(v);
    }
    std::vector<std::size_t> chosen;
    if (!extend(g, chosen, neighbours, 0, static_cast<std::size_t>(k - 1))) return std::nullopt;
    chosen.push_back(anchor);
    return chosen;
}

std::optional<std::vector<std::size_t>> find_clique(const ConstraintGraph& g, int k) {
    if (k < 1) throw Error(ErrorKind::InvalidK, "clique size must be at least 1");
    if (static_cast<std::size_t>(k) > g.size()) return std::nullopt;
    std::vector<std::size_t> all(g.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<std::size_t> chosen;
    if (!extend(g, chosen, all, 0, static_cast<std::size_t>(k))) return std::nullopt;
    return chosen;
}

namespace {

ClosedFormR closed_form(const std::vector<double>& areas, const Region& region, int k) {
    if (k < 2) throw Error(ErrorKind::InvalidK, "closed-form r needs k >= 2");
    if (areas.size() != static_cast<std::size_t>(k)) {
        throw Error(ErrorKind::InvalidGeometry, "expected " + std::to_string(k) + " per-node areas");
    }
    check_region(region);
    const double total = region.area();
    // Work in area fractions so large k does not overflow.
    double prod = 1.0;
    for (double a : areas) {
        if (a < 0.0) throw Error(ErrorKind::InvalidGeometry, "areas must be non-negative");
        prod *= std::pow(a / total, k - 1.0);
    }
    // prod = prod_i a_i^(k-1) / (XY)^(k(k-1))
    ClosedFormR out;
    out.independence = prod;
    const double kk = k;
    out.printed = prod * std::pow(total, kk * (kk - 1.0) - 2.0 * kk);
    return out;
}

}  // namespace

ClosedFormR r_cliquecloak(const std::vector<Tolerance>& tolerances, const Region& region, int k) {
    std::vector<double> areas;
    areas.reserve(tolerances.size());
    for (const auto& t : tolerances) {
        if (t.dx < 0.0 || t.dy < 0.0) throw Error(ErrorKind::InvalidGeometry, "tolerances must be non-negative");
        areas.push_back(std::min(t.dx, region.width) * std::min(t.dy, region.height));
    }
    return closed_form(areas, region, k);
}

ClosedFormR r_iclique(const std::vector<double>& mmb_areas, const Region& region, int k) {
    std::vector<double> areas;
    areas.reserve(mmb_areas.size());
    for (double a : mmb_areas) areas.push_back(a < 0.0 ? a : std::min(a, region.area()));
    return closed_form(areas, region, k);
}

LbsQuery sample_query(const GeometryConfig& cfg, std::size_t node_index, RandomStream& stream) {
    LbsQuery q;
    q.query_no = node_index;
    q.anonymity_k = std::max(cfg.k, 1);
    q.position.x = stream.uniform(0.0, cfg.region.width);
    q.position.y = stream.uniform(0.0, cfg.region.height);
    std::visit(
        [&](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, FixedTolerances>) {
                const auto& t = model.tolerances[node_index % model.tolerances.size()];
                q.dx = t.dx;
                q.dy = t.dy;
            } else {
                q.dx = stream.uniform(model.dx_min, model.dx_max);
                q.dy = stream.uniform(model.dy_min, model.dy_max);
            }
        },
        cfg.tolerance_model);
    if (!cfg.mmb_areas.empty()) q.mmb_area = cfg.mmb_areas[node_index % cfg.mmb_areas.size()];
    return q;
}

Estimate mc_clique_prob(const GeometryConfig& cfg, std::size_t samples, RandomStream& stream) {
    if (samples < 10'000) throw Error(ErrorKind::InvalidConfig, "Monte Carlo needs at least 1e4 samples");
    check_config(cfg);
    Estimate est;
    est.samples = samples;
    std::vector<LbsQuery> nodes(static_cast<std::size_t>(cfg.k));
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = sample_query(cfg, i, stream);
        const ConstraintGraph g = build_graph(nodes, cfg.edge_rule);
        if (clique_exists(g, cfg.k)) ++est.successes;
    }
    const double n = static_cast<double>(samples);
    est.value = static_cast<double>(est.successes) / n;
    est.standard_error = std::sqrt(est.value * (1.0 - est.value) / n);
    return est;
}

}  // namespace lbsq::geometry
