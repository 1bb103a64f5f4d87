#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "elicit/belief.hpp"
#include "elicit/instance.hpp"

namespace elicit {

struct EstimateOutOfSpace : std::runtime_error {
    explicit EstimateOutOfSpace(const std::string& w) : std::runtime_error(w) {}
};

enum class LossKind { square, quantity_at_price, revenue_max_price, utilitarian };

inline std::string loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::square: return "square";
        case LossKind::quantity_at_price: return "quantity_at_price";
        case LossKind::revenue_max_price: return "revenue_max_price";
        case LossKind::utilitarian: return "utilitarian";
    }
    return "?";
}

// Loss L(e, F_{V|w}) over an estimate space that is either an interval
// (approximated by analytic candidates plus a grid where needed) or {0,1}
// for the utilitarian case.
struct LossFunction {
    LossKind kind = LossKind::square;
    double price = 0.0;  // quantity_at_price only
    double space_lo = 0.0;
    double space_hi = 1.0;
    int grid_points = 201;  // argmin-set resolution over interval spaces

    static LossFunction square(double lo, double hi) {
        LossFunction l;
        l.kind = LossKind::square;
        l.space_lo = lo;
        l.space_hi = hi;
        return l;
    }
    static LossFunction quantity(double p) {
        LossFunction l;
        l.kind = LossKind::quantity_at_price;
        l.price = p;
        l.space_lo = 0.0;
        l.space_hi = 1.0;
        return l;
    }
    static LossFunction revenue(double lo, double hi) {
        LossFunction l;
        l.kind = LossKind::revenue_max_price;
        l.space_lo = lo;
        l.space_hi = hi;
        return l;
    }
    static LossFunction utilitarian() {
        LossFunction l;
        l.kind = LossKind::utilitarian;
        l.space_lo = 0.0;
        l.space_hi = 1.0;
        return l;
    }
};

// Exact expectation of the loss over a finite demand curve.
inline double expected_loss(const LossFunction& loss, double e, const Belief& demand) {
    if (e < loss.space_lo - 1e-12 || e > loss.space_hi + 1e-12)
        throw EstimateOutOfSpace("estimate " + format_real(e) + " outside estimate space");
    switch (loss.kind) {
        case LossKind::square: {
            double s = 0.0;
            for (std::size_t i = 0; i < demand.size(); ++i)
                s += demand.prob(i) * (e - demand.atom(i)) * (e - demand.atom(i));
            return s;
        }
        case LossKind::quantity_at_price: {
            double s = 0.0;
            for (std::size_t i = 0; i < demand.size(); ++i) {
                double ind = demand.atom(i) >= loss.price ? 1.0 : 0.0;
                s += demand.prob(i) * (e - ind) * (e - ind);
            }
            return s;
        }
        case LossKind::revenue_max_price: return -e * demand.mass_at_least(e);
        case LossKind::utilitarian: {
            if (e != 0.0 && e != 1.0) throw EstimateOutOfSpace("utilitarian estimate must be 0 or 1");
            return -e * demand.mean();
        }
    }
    throw std::logic_error("unreachable");
}

namespace detail {

// Candidate estimates that can attain the minimum: analytic optima, support
// atoms (the revenue objective is piecewise linear between them), the space
// endpoints, and a uniform grid for argmin-set comparisons.
inline std::vector<double> candidate_estimates(const LossFunction& loss, const Belief& demand, bool with_grid) {
    std::vector<double> cands;
    auto push = [&](double e) {
        if (e >= loss.space_lo - 1e-12 && e <= loss.space_hi + 1e-12)
            cands.push_back(std::min(std::max(e, loss.space_lo), loss.space_hi));
    };
    switch (loss.kind) {
        case LossKind::square: push(demand.mean()); break;
        case LossKind::quantity_at_price: push(demand.mass_at_least(loss.price)); break;
        case LossKind::revenue_max_price:
            for (std::size_t i = 0; i < demand.size(); ++i) push(demand.atom(i));
            break;
        case LossKind::utilitarian:
            cands = {0.0, 1.0};
            return cands;
    }
    push(loss.space_lo);
    push(loss.space_hi);
    if (with_grid && loss.grid_points > 1) {
        for (int g = 0; g < loss.grid_points; ++g)
            push(loss.space_lo + (loss.space_hi - loss.space_lo) * g / (loss.grid_points - 1));
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    return cands;
}

}  // namespace detail

inline double min_expected_loss(const LossFunction& loss, const Belief& demand) {
    double best = kInf;
    for (double e : detail::candidate_estimates(loss, demand, /*with_grid=*/false))
        best = std::min(best, expected_loss(loss, e, demand));
    return best;
}

inline double argmin_expected_loss(const LossFunction& loss, const Belief& demand) {
    double best = kInf, arg = loss.space_lo;
    for (double e : detail::candidate_estimates(loss, demand, /*with_grid=*/false)) {
        double v = expected_loss(loss, e, demand);
        if (v < best) {
            best = v;
            arg = e;
        }
    }
    return arg;
}

// Argmin set on the candidate grid, within `tol` of the minimum.
inline std::vector<double> argmin_set(const LossFunction& loss, const Belief& demand, double tol = 1e-9) {
    auto cands = detail::candidate_estimates(loss, demand, /*with_grid=*/true);
    double best = kInf;
    for (double e : cands) best = std::min(best, expected_loss(loss, e, demand));
    std::vector<double> out;
    for (double e : cands)
        if (expected_loss(loss, e, demand) <= best + tol) out.push_back(e);
    return out;
}

struct BenchmarkResult {
    double ex_ante = 0.0;
    double ex_post = 0.0;
    double argmin_ex_ante = 0.0;
    std::vector<double> per_state_argmin;
};

// Ex-post benchmark: expected minimal conditional loss knowing the realized
// state. Ex-ante: minimal loss knowing only the instance. Loss functionals
// here are linear in the demand curve, so the ex-ante problem minimizes
// against the value distribution mixed over states.
inline BenchmarkResult benchmarks(const Instance& inst, const LossFunction& loss) {
    BenchmarkResult res;
    for (std::size_t w = 0; w < inst.states.size(); ++w) {
        Belief demand = inst.demand_curve(static_cast<int>(w));
        res.ex_post += inst.state_dist[w] * min_expected_loss(loss, demand);
        res.per_state_argmin.push_back(argmin_expected_loss(loss, demand));
    }
    Belief mixture = inst.value_distribution();
    res.ex_ante = min_expected_loss(loss, mixture);
    res.argmin_ex_ante = argmin_expected_loss(loss, mixture);
    return res;
}

// Expected loss of a mechanism whose per-state estimate distribution is
// known exactly.
inline double expected_loss_of_estimator(const Instance& inst, const LossFunction& loss,
                                         const std::vector<Belief>& estimator_dist) {
    double total = 0.0;
    for (std::size_t w = 0; w < inst.states.size(); ++w) {
        Belief demand = inst.demand_curve(static_cast<int>(w));
        double s = 0.0;
        for (std::size_t i = 0; i < estimator_dist[w].size(); ++i)
            s += estimator_dist[w].prob(i) * expected_loss(loss, estimator_dist[w].atom(i), demand);
        total += inst.state_dist[w] * s;
    }
    return total;
}

// Expected loss of the estimator's per-state limit (its conditional mean).
inline double expected_loss_at_limit(const Instance& inst, const LossFunction& loss,
                                     const std::vector<double>& estimator_limit) {
    double total = 0.0;
    for (std::size_t w = 0; w < inst.states.size(); ++w)
        total += inst.state_dist[w] * expected_loss(loss, estimator_limit[w], inst.demand_curve(static_cast<int>(w)));
    return total;
}

struct SquareLikeResult {
    bool not_square_like = false;
    std::optional<std::pair<double, double>> witness;  // (a, b) with disjoint argmin sets
};

// Two-point versus degenerate test: scan (a,b) pairs in the value range and
// look for disjoint argmin sets between Uniform{a,b} and Dirac((a+b)/2).
// A pass over the whole grid means "no witness found", not a proof.
inline SquareLikeResult is_square_like(const LossFunction& loss, double v_lo, double v_hi, int grid = 21,
                                       double tol = 1e-9) {
    SquareLikeResult res;
    for (int ia = 0; ia < grid; ++ia) {
        for (int ib = ia + 1; ib < grid; ++ib) {
            double a = v_lo + (v_hi - v_lo) * ia / (grid - 1);
            double b = v_lo + (v_hi - v_lo) * ib / (grid - 1);
            Belief two = Belief::from_weighted({{a, 0.5}, {b, 0.5}});
            Belief mid = Belief::dirac(0.5 * (a + b));
            auto set_a = argmin_set(loss, two, tol);
            auto set_b = argmin_set(loss, mid, tol);
            bool overlap = false;
            for (double x : set_a) {
                for (double y : set_b)
                    if (std::fabs(x - y) <= tol) {
                        overlap = true;
                        break;
                    }
                if (overlap) break;
            }
            if (!overlap) {
                res.not_square_like = true;
                res.witness = {a, b};
                return res;
            }
        }
    }
    return res;
}

}  // namespace elicit
