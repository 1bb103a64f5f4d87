#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "elicit/belief.hpp"
#include "elicit/rng.hpp"

namespace elicit {

struct RealizationOutOfDomain : std::runtime_error {
    explicit RealizationOutOfDomain(const std::string& what) : std::runtime_error(what) {}
};

// Parameters of a proper scoring rule. The base rule is the continuous ranked
// probability score over [z_lo, z_hi]; voting and VCG mechanisms compose it
// with a quadratic score on the pivotality event and (for VCG) a second CRPS
// on the sign indicator of the scored statistic. `shift` is a constant added
// once per evaluation so realized transfers stay non-negative; it never
// affects which report maximizes the expected score.
struct ScoreParams {
    double z_lo = 0.0;
    double z_hi = 1.0;
    bool use_crps = true;
    bool use_quadratic = false;
    bool use_sign_crps = false;
    double shift = 0.0;
    bool sign_flip = false;  // negative control for propriety tests

    static ScoreParams crps(double lo, double hi, double shift_ = 0.0) {
        ScoreParams p;
        p.z_lo = lo;
        p.z_hi = hi;
        p.shift = shift_;
        return p;
    }
};

namespace detail {

// Integral over [lo,hi] of (F_b(z) - 1(x <= z))^2 where F_b is the reported
// CDF. Both are right-continuous step functions, so the integrand is constant
// between breakpoints.
inline double crps_penalty(const Belief& b, double x, double lo, double hi) {
    std::vector<double> cuts;
    cuts.reserve(b.size() + 3);
    cuts.push_back(lo);
    for (std::size_t i = 0; i < b.size(); ++i) {
        double a = b.atom(i);
        if (a > lo && a < hi) cuts.push_back(a);
    }
    if (x > lo && x < hi) cuts.push_back(x);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double width = cuts[k + 1] - cuts[k];
        if (width <= 0.0) continue;
        double f = b.cdf(cuts[k]);
        double h = (x <= cuts[k]) ? 1.0 : 0.0;
        total += (f - h) * (f - h) * width;
    }
    return total;
}

// Integral over [lo,hi] of F(z) * (1 - F(z)) for the CDF of `g`: the expected
// CRPS penalty of a truthful report.
inline double crps_self_penalty(const Belief& g, double lo, double hi) {
    std::vector<double> cuts;
    cuts.push_back(lo);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double a = g.atom(i);
        if (a > lo && a < hi) cuts.push_back(a);
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double width = cuts[k + 1] - cuts[k];
        if (width <= 0.0) continue;
        double f = g.cdf(cuts[k]);
        total += f * (1.0 - f) * width;
    }
    return total;
}

// E_{x~g}[(F_r(z) - 1(x<=z))^2] integrated over [lo,hi]:
// integrand F_r^2 - 2 F_r G + G with G the CDF of the true distribution.
inline double crps_cross_penalty(const Belief& report, const Belief& truth, double lo, double hi) {
    std::vector<double> cuts;
    cuts.push_back(lo);
    for (std::size_t i = 0; i < report.size(); ++i) {
        double a = report.atom(i);
        if (a > lo && a < hi) cuts.push_back(a);
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double a = truth.atom(i);
        if (a > lo && a < hi) cuts.push_back(a);
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double width = cuts[k + 1] - cuts[k];
        if (width <= 0.0) continue;
        double f = report.cdf(cuts[k]);
        double g = truth.cdf(cuts[k]);
        total += (f * f - 2.0 * f * g + g) * width;
    }
    return total;
}

}  // namespace detail

// SR^CRPS(b, x) = -integral of the squared CDF gap, plus the configured shift.
// Zero (before shift) exactly when the belief is Dirac at the realization.
inline double crps_score(const Belief& b, double x, const ScoreParams& p) {
    if (x < p.z_lo || x > p.z_hi)
        throw RealizationOutOfDomain("crps_score: realization " + std::to_string(x) + " outside [" +
                                     std::to_string(p.z_lo) + "," + std::to_string(p.z_hi) + "]");
    double s = -detail::crps_penalty(b, x, p.z_lo, p.z_hi);
    if (p.sign_flip) s = -s;
    return s + p.shift;
}

// SR^Q: 2*1(Q)*q + 2*1(!Q)*(1-q) - q^2 - (1-q)^2.
inline double quadratic_score(double reported_prob, bool occurred) {
    if (reported_prob < 0.0 || reported_prob > 1.0)
        throw std::invalid_argument("quadratic_score: probability outside [0,1]");
    double q = reported_prob;
    double hit = occurred ? q : (1.0 - q);
    return 2.0 * hit - q * q - (1.0 - q) * (1.0 - q);
}

// Expected CRPS score of reporting `report` when the statistic is distributed
// per `truth` (exact, finite supports).
inline double expected_crps_score(const Belief& report, const Belief& truth, const ScoreParams& p) {
    double s = -detail::crps_cross_penalty(report, truth, p.z_lo, p.z_hi);
    if (p.sign_flip) s = -s;
    return s + p.shift;
}

// Expected CRPS of the truthful report itself.
inline double expected_crps_truthful(const Belief& truth, const ScoreParams& p) {
    double s = -detail::crps_self_penalty(truth, p.z_lo, p.z_hi);
    if (p.sign_flip) s = -s;
    return s + p.shift;
}

// Expected quadratic score when the event has probability q and q_hat is
// reported.
inline double expected_quadratic_score(double q_hat, double q) {
    return 2.0 * q * q_hat + 2.0 * (1.0 - q) * (1.0 - q_hat) - q_hat * q_hat - (1.0 - q_hat) * (1.0 - q_hat);
}

struct PropertyReport {
    int trials = 0;
    int violations = 0;
    double worst_gap = 0.0;  // most negative value of E[truthful] - E[misreport]
};

// Randomized propriety check: draws finite-support true distributions and
// misreports inside the score domain and verifies that truthful reporting is
// never beaten by more than 1e-10. The quadratic term is exercised through a
// random event probability.
inline PropertyReport check_propriety(const ScoreParams& params, int trial_count, std::uint64_t rng_seed) {
    PropertyReport rep;
    rep.trials = trial_count;
    RngStream rng(rng_seed, 0x5c03e5u);
    for (int t = 0; t < trial_count; ++t) {
        int k = rng.uniform_int(1, 5);
        std::vector<std::pair<double, double>> true_mass, mis_mass;
        for (int i = 0; i < k; ++i)
            true_mass.emplace_back(rng.uniform(params.z_lo, params.z_hi), rng.next_unit() + 1e-3);
        int km = rng.uniform_int(1, 5);
        for (int i = 0; i < km; ++i)
            mis_mass.emplace_back(rng.uniform(params.z_lo, params.z_hi), rng.next_unit() + 1e-3);
        Belief truth = Belief::from_weighted(true_mass, true);
        Belief mis = Belief::from_weighted(mis_mass, true);

        double gap = 0.0;
        if (params.use_crps) gap += expected_crps_truthful(truth, params) - expected_crps_score(mis, truth, params);
        if (params.use_quadratic) {
            double threshold = rng.uniform(params.z_lo, params.z_hi);
            double q = truth.mass_at_least(threshold);
            double q_mis = mis.mass_at_least(threshold);
            gap += expected_quadratic_score(q, q) - expected_quadratic_score(q_mis, q);
        }
        if (params.use_sign_crps) {
            double q = truth.mass_at_least(0.0);
            double q_mis = mis.mass_at_least(0.0);
            Belief ind_true = q >= 1.0   ? Belief::dirac(1.0)
                              : q <= 0.0 ? Belief::dirac(0.0)
                                         : Belief::from_weighted({{0.0, 1.0 - q}, {1.0, q}});
            Belief ind_mis = q_mis >= 1.0   ? Belief::dirac(1.0)
                             : q_mis <= 0.0 ? Belief::dirac(0.0)
                                            : Belief::from_weighted({{0.0, 1.0 - q_mis}, {1.0, q_mis}});
            ScoreParams unit = ScoreParams::crps(0.0, 1.0);
            unit.sign_flip = params.sign_flip;
            gap += expected_crps_truthful(ind_true, unit) - expected_crps_score(ind_mis, ind_true, unit);
        }
        if (gap < rep.worst_gap) rep.worst_gap = gap;
        if (gap < -1e-10) ++rep.violations;
    }
    return rep;
}

}  // namespace elicit
