#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "elicit/strategy.hpp"

namespace elicit {

struct IntractableExact : std::runtime_error {
    explicit IntractableExact(const std::string& w) : std::runtime_error(w) {}
};

using Dist = std::map<double, double>;  // finite distribution, exact-value keys

namespace detail {

inline Dist convolve(const Dist& a, const Dist& b) {
    Dist out;
    for (const auto& [x, p] : a)
        for (const auto& [y, q] : b) out[x + y] += p * q;
    return out;
}

}  // namespace detail

struct UtilityBreakdown {
    double consumption = 0.0;
    double score = 0.0;  // lambda included
    double cost = 0.0;
    double total() const { return consumption + score - cost; }
};

struct ErrorStats {
    double eps_mean = 0.0;
    double eps_var = 0.0;
    double cov_eps_peer = 0.0;  // cov(eps_i, E[peer stat | state])
};

struct EquilibriumReport {
    Profile profile;
    double epsilon = 0.0;  // max deviation gain found
    double tolerance = 0.0;
    bool passed = false;
    bool exact = true;
    std::vector<double> per_agent_gap;
    std::vector<std::string> best_deviation_signal;
    std::vector<ErrorStats> error_stats;
    std::vector<Belief> estimator_dist;   // per state
    std::vector<double> estimator_limit;  // per state: E[estimate | state]
    double phi1 = 0.0;
    double phi2 = 0.0;
    std::optional<double> welfare_match_prob;  // voting: P(chosen = welfare maximizer)
};

// Exact evaluation of one profile: per-state report distributions,
// leave-one-out statistics, utilities, and best responses. All expectations
// are computed by enumeration over the joint support and dynamic-programming
// convolution of opponent reports; prices integrate in closed form.
class Evaluator {
public:
    // Report distributions and peer beliefs are well-defined for every
    // mechanism; only the exact utility entry points reject the VCG variant
    // (its bias term is continuous), steering callers to Monte Carlo.
    Evaluator(EvalContext& ctx, const Profile& profile) : ctx_(ctx), profile_(profile) {
        if (static_cast<int>(profile.agents.size()) != ctx.n())
            throw std::invalid_argument("profile size != n_agents");
        symmetric_ = profile.is_symmetric();
    }

    const Profile& profile() const { return profile_; }
    EvalContext& ctx() { return ctx_; }

    // Distribution of one agent's report conditional on the state.
    const Dist& report_dist(int agent, int state) {
        int key_agent = symmetric_ ? 0 : agent;
        auto key = std::make_pair(key_agent, state);
        auto it = report_dist_.find(key);
        if (it != report_dist_.end()) return it->second;
        const Strategy& strat = profile_.agents[static_cast<std::size_t>(key_agent)];
        Dist d;
        const auto& inst = ctx_.instance();
        for (const auto& [sig_id, pi] : strat.mixture) {
            if (pi <= 0.0) continue;
            const SignalInfo& info = ctx_.signal_info(sig_id);
            for (std::size_t k = 0; k < inst.support.size(); ++k) {
                if (inst.support[k].state != state) continue;
                double w = pi * inst.type_dist_given_state[static_cast<std::size_t>(state)]
                                                          [static_cast<std::size_t>(inst.support[k].type)];
                if (w <= 0.0) continue;
                const InfoSet& set = info.sets[static_cast<std::size_t>(info.set_of_support[k])];
                d[ctx_.report_value(strat, sig_id, set)] += w;
            }
        }
        return report_dist_.emplace(key, std::move(d)).first->second;
    }

    // Distribution of the sum of reports of all agents except `agent`.
    const Dist& loo_sum(int agent, int state) {
        int key_agent = symmetric_ ? 0 : agent;
        auto key = std::make_pair(key_agent, state);
        auto it = loo_sum_.find(key);
        if (it != loo_sum_.end()) return it->second;
        Dist acc{{0.0, 1.0}};
        for (int j = 0; j < ctx_.n(); ++j) {
            if (j == agent) continue;
            acc = detail::convolve(acc, report_dist(j, state));
        }
        return loo_sum_.emplace(key, std::move(acc)).first->second;
    }

    double peer_scale() const {
        const auto& mech = ctx_.mech();
        if (mech.is_voting())
            return mech.vote_normalizer == VoteShareNormalizer::over_n ? 1.0 / ctx_.n() : 1.0 / (ctx_.n() - 1);
        return 1.0 / (ctx_.n() - 1);
    }

    // E[peer statistic | state] for `agent`.
    double peer_mean(int agent, int state) {
        double m = 0.0;
        for (const auto& [s, p] : loo_sum(agent, state)) m += s * p;
        return m * peer_scale();
    }

    // Truthful belief over the scored statistic given posterior state weights.
    Belief peer_belief(int agent, const std::vector<double>& state_probs) {
        std::vector<std::pair<double, double>> mass;
        double scale = peer_scale();
        for (std::size_t w = 0; w < state_probs.size(); ++w) {
            if (state_probs[w] <= 0.0) continue;
            for (const auto& [s, p] : loo_sum(agent, static_cast<int>(w)))
                mass.emplace_back(s * scale, state_probs[w] * p);
        }
        return Belief::from_weighted(mass);
    }

    // P(exact (n-1)/2 split among the others | state); zero for even n.
    double split_prob(int agent, int state) {
        if (ctx_.n() % 2 == 0) return 0.0;
        double half = static_cast<double>((ctx_.n() - 1) / 2);
        double p = 0.0;
        for (const auto& [s, q] : loo_sum(agent, state))
            if (s == half) p += q;
        return p;
    }

    // Probability that the chosen alternative is 1 given the state, for
    // voting mechanisms, with `agent` voting `a` (exact over the dictator
    // lottery and the vote-count distribution).
    double outcome_prob(int agent, int state, double a) {
        const auto& mech = ctx_.mech();
        int n = ctx_.n();
        double maj = 0.0;
        for (const auto& [s, p] : loo_sum(agent, state))
            if (2.0 * (s + a) >= static_cast<double>(n)) maj += p;
        double dict = a;
        for (int j = 0; j < n; ++j) {
            if (j == agent) continue;
            double m = 0.0;
            for (const auto& [r, p] : report_dist(j, state)) m += r * p;
            dict += m;
        }
        dict /= static_cast<double>(n);
        return (1.0 - mech.delta) * maj + mech.delta * dict;
    }

    // ----- utilities -----

    UtilityBreakdown candidate_utility(int agent, const std::string& sig_id, const Strategy& reports_strat) {
        require_exact();
        const auto& mech = ctx_.mech();
        UtilityBreakdown u;
        u.cost = ctx_.expected_cost(sig_id);
        if (!(u.cost < kInf)) {
            u.cost = kInf;
            return u;
        }
        const SignalInfo& info = ctx_.signal_info(sig_id);
        const auto& inst = ctx_.instance();
        if (mech.is_voting()) {
            for (std::size_t k = 0; k < inst.support.size(); ++k) {
                const InfoSet& set = info.sets[static_cast<std::size_t>(info.set_of_support[k])];
                double a = ctx_.report_value(reports_strat, sig_id, set);
                double v = inst.values[static_cast<std::size_t>(inst.support[k].type)];
                u.consumption += inst.support[k].prob * v * outcome_prob(agent, inst.support[k].state, a);
            }
        } else {
            for (const auto& set : info.sets) {
                double rep = ctx_.report_value(reports_strat, sig_id, set);
                u.consumption +=
                    set.prob * bdm_expected_consumption_utility(set.value_mean, rep, mech.v_lo, mech.v_hi);
            }
        }
        if (mech.is_betting() && mech.lambda > 0.0) {
            for (const auto& set : info.sets) {
                double s = 0.0;
                if (mech.score.use_crps)
                    s += expected_crps_truthful(peer_belief(agent, set.state_probs), mech.score);
                if (mech.score.use_quadratic) {
                    double q = mech.delta / ctx_.n();
                    double split = 0.0;
                    for (std::size_t w = 0; w < set.state_probs.size(); ++w)
                        if (set.state_probs[w] > 0.0)
                            split += set.state_probs[w] * split_prob(agent, static_cast<int>(w));
                    q += (1.0 - mech.delta / ctx_.n()) * split;
                    s += q * q + (1.0 - q) * (1.0 - q);
                }
                u.score += set.prob * mech.lambda * s;
            }
        }
        return u;
    }

    double utility(int agent) {
        const Strategy& strat = profile_.agents[static_cast<std::size_t>(agent)];
        double total = 0.0;
        for (const auto& [sig_id, pi] : strat.mixture) {
            if (pi <= 0.0) continue;
            UtilityBreakdown u = candidate_utility(agent, sig_id, strat);
            if (!(u.cost < kInf)) return -kInf;
            total += pi * u.total();
        }
        return total;
    }

    // ----- best response -----

    struct BestResponse {
        Strategy strategy;
        double utility = -kInf;
        double gain = 0.0;
    };

    // Exhaustive over the signal universe; per-realization reports are chosen
    // optimally (posterior means for value reports, vote-wise argmax for
    // votes, plus the optional report grid).
    BestResponse best_response(int agent) {
        require_exact();
        const auto& mech = ctx_.mech();
        BestResponse best;
        for (const auto& cand : ctx_.universe().all()) {
            double cost = ctx_.expected_cost(cand.sig.id);
            if (!(cost < kInf)) continue;
            Strategy s = Strategy::pure(cand.sig.id, ReportRule::explicit_map);
            const SignalInfo& info = ctx_.signal_info(cand.sig.id);
            auto& rmap = s.explicit_reports[cand.sig.id];
            if (mech.is_voting()) {
                const auto& inst = ctx_.instance();
                for (const auto& set : info.sets) {
                    double v0 = 0.0, v1 = 0.0;
                    for (int k : set.support_points) {
                        const auto& sp = inst.support[static_cast<std::size_t>(k)];
                        double v = inst.values[static_cast<std::size_t>(sp.type)];
                        v0 += sp.prob * v * outcome_prob(agent, sp.state, 0.0);
                        v1 += sp.prob * v * outcome_prob(agent, sp.state, 1.0);
                    }
                    double a = v1 > v0 ? 1.0 : v1 < v0 ? 0.0 : (set.value_mean >= 0.0 ? 1.0 : 0.0);
                    rmap[set.real] = a;
                }
            } else {
                for (const auto& set : info.sets) {
                    double best_rep = std::min(std::max(set.value_mean, mech.v_lo), mech.v_hi);
                    if (report_grid_points_ > 1) {
                        double best_val =
                            bdm_expected_consumption_utility(set.value_mean, best_rep, mech.v_lo, mech.v_hi);
                        for (int g = 0; g < report_grid_points_; ++g) {
                            double rep = mech.v_lo + (mech.v_hi - mech.v_lo) * g / (report_grid_points_ - 1);
                            double val = bdm_expected_consumption_utility(set.value_mean, rep, mech.v_lo, mech.v_hi);
                            if (val > best_val) {
                                best_val = val;
                                best_rep = rep;
                            }
                        }
                    }
                    rmap[set.real] = best_rep;
                }
            }
            double u = candidate_utility(agent, cand.sig.id, s).total();
            if (u > best.utility) {
                best.utility = u;
                best.strategy = s;
            }
        }
        best.gain = best.utility - utility(agent);
        return best;
    }

    void set_report_grid_points(int g) { report_grid_points_ = g; }

    // ----- profile statistics -----

    // Error eps_i = v_i - E[v_i | info] under the profile's own information.
    ErrorStats error_stats(int agent) {
        const Strategy& strat = profile_.agents[static_cast<std::size_t>(agent)];
        const auto& inst = ctx_.instance();
        std::vector<double> peer_by_state(inst.states.size());
        for (std::size_t w = 0; w < inst.states.size(); ++w)
            peer_by_state[w] = peer_mean(agent, static_cast<int>(w));
        double e_mean = 0.0, e2 = 0.0, eg = 0.0, g_mean = 0.0;
        for (std::size_t w = 0; w < inst.states.size(); ++w) g_mean += inst.state_dist[w] * peer_by_state[w];
        for (const auto& [sig_id, pi] : strat.mixture) {
            if (pi <= 0.0) continue;
            const SignalInfo& info = ctx_.signal_info(sig_id);
            for (std::size_t k = 0; k < inst.support.size(); ++k) {
                const InfoSet& set = info.sets[static_cast<std::size_t>(info.set_of_support[k])];
                double eps = inst.values[static_cast<std::size_t>(inst.support[k].type)] - set.value_mean;
                double w = pi * inst.support[k].prob;
                e_mean += w * eps;
                e2 += w * eps * eps;
                eg += w * eps * peer_by_state[static_cast<std::size_t>(inst.support[k].state)];
            }
        }
        ErrorStats st;
        st.eps_mean = e_mean;
        st.eps_var = e2 - e_mean * e_mean;
        st.cov_eps_peer = eg - e_mean * g_mean;
        return st;
    }

    // Estimator distribution given the state.
    Belief estimator_distribution(int state) {
        require_exact();
        const auto& mech = ctx_.mech();
        if (mech.is_voting()) {
            double p1 = outcome_all_prob(state);
            if (p1 >= 1.0) return Belief::dirac(1.0);
            if (p1 <= 0.0) return Belief::dirac(0.0);
            return Belief::from_weighted({{0.0, 1.0 - p1}, {1.0, p1}});
        }
        Dist acc{{0.0, 1.0}};
        for (int j = 0; j < ctx_.n(); ++j) acc = detail::convolve(acc, report_dist(j, state));
        std::vector<std::pair<double, double>> mass;
        for (const auto& [s, p] : acc) mass.emplace_back(s / ctx_.n(), p);
        return Belief::from_weighted(mass);
    }

    // P(chosen alternative = 1 | state) counting the dictator lottery.
    double outcome_all_prob(int state) {
        const auto& mech = ctx_.mech();
        int n = ctx_.n();
        Dist acc{{0.0, 1.0}};
        double mean_votes = 0.0;
        for (int j = 0; j < n; ++j) {
            acc = detail::convolve(acc, report_dist(j, state));
            for (const auto& [r, p] : report_dist(j, state)) mean_votes += r * p;
        }
        double maj = 0.0;
        for (const auto& [s, p] : acc)
            if (2.0 * s >= static_cast<double>(n)) maj += p;
        return (1.0 - mech.delta) * maj + mech.delta * mean_votes / n;
    }

private:
    void require_exact() const {
        if (ctx_.mech().kind == MechanismKind::vcg_betting)
            throw IntractableExact("vcg_betting has a continuous bias term; use Monte Carlo evaluation");
    }

    EvalContext& ctx_;
    Profile profile_;
    bool symmetric_ = false;
    int report_grid_points_ = 0;
    std::map<std::pair<int, int>, Dist> report_dist_;
    std::map<std::pair<int, int>, Dist> loo_sum_;
};

inline double expected_utility(EvalContext& ctx, const Profile& profile, int agent) {
    return Evaluator(ctx, profile).utility(agent);
}

// (phi1, phi2)-truthfulness at phi2 = 0: the worst gap, over reachable
// information sets in the profile's support, between the report sent and the
// conditionally optimal one.
inline std::pair<double, double> truthfulness_report(EvalContext& ctx, const Profile& profile) {
    double phi1 = 0.0;
    const bool voting = ctx.mech().is_voting();
    for (const auto& strat : profile.agents) {
        for (const auto& [sig_id, pi] : strat.mixture) {
            if (pi <= 0.0) continue;
            const SignalInfo& info = ctx.signal_info(sig_id);
            for (const auto& set : info.sets) {
                double rep = ctx.report_value(strat, sig_id, set);
                double gap;
                if (voting) {
                    gap = std::max(set.value_mean, 0.0) - set.value_mean * rep;
                } else {
                    gap = std::fabs(rep - set.value_mean);
                }
                phi1 = std::max(phi1, gap);
            }
        }
    }
    return {phi1, 0.0};
}

// Pivotality probability and the realization-averaged gap
// |E[v | info, pivotal] - E[v | info]| for voting mechanisms.
inline std::pair<double, double> pivot_stats(EvalContext& ctx, const Profile& profile, int agent) {
    if (!ctx.mech().is_voting()) throw std::invalid_argument("pivot_stats: voting mechanisms only");
    Evaluator ev(ctx, profile);
    const auto& inst = ctx.instance();
    const auto& mech = ctx.mech();
    int n = ctx.n();
    std::vector<double> q_by_state(inst.states.size());
    for (std::size_t w = 0; w < inst.states.size(); ++w)
        q_by_state[w] =
            mech.delta / n + (1.0 - mech.delta / n) * ev.split_prob(agent, static_cast<int>(w));
    double q_total = 0.0;
    for (std::size_t w = 0; w < inst.states.size(); ++w) q_total += inst.state_dist[w] * q_by_state[w];

    double gap = 0.0;
    const Strategy& strat = profile.agents[static_cast<std::size_t>(agent)];
    for (const auto& [sig_id, pi] : strat.mixture) {
        if (pi <= 0.0) continue;
        const SignalInfo& info = ctx.signal_info(sig_id);
        for (const auto& set : info.sets) {
            double num = 0.0, den = 0.0;
            for (int k : set.support_points) {
                const auto& sp = inst.support[static_cast<std::size_t>(k)];
                double w = sp.prob / set.prob;
                double qv = q_by_state[static_cast<std::size_t>(sp.state)];
                num += w * qv * inst.values[static_cast<std::size_t>(sp.type)];
                den += w * qv;
            }
            if (den > 0.0) gap += pi * set.prob * std::fabs(num / den - set.value_mean);
        }
    }
    return {q_total, gap};
}

inline EquilibriumReport verify_bne(EvalContext& ctx, const Profile& profile, double epsilon = 1e-9) {
    Evaluator ev(ctx, profile);
    EquilibriumReport rep;
    rep.profile = profile;
    rep.tolerance = epsilon;
    int n = ctx.n();
    rep.per_agent_gap.resize(static_cast<std::size_t>(n));
    rep.best_deviation_signal.resize(static_cast<std::size_t>(n));
    rep.error_stats.resize(static_cast<std::size_t>(n));
    bool symmetric = profile.is_symmetric();
    for (int i = 0; i < n; ++i) {
        if (symmetric && i > 0) {
            rep.per_agent_gap[static_cast<std::size_t>(i)] = rep.per_agent_gap[0];
            rep.best_deviation_signal[static_cast<std::size_t>(i)] = rep.best_deviation_signal[0];
            rep.error_stats[static_cast<std::size_t>(i)] = rep.error_stats[0];
            continue;
        }
        auto br = ev.best_response(i);
        rep.per_agent_gap[static_cast<std::size_t>(i)] = br.gain;
        rep.best_deviation_signal[static_cast<std::size_t>(i)] =
            br.strategy.mixture.empty() ? "" : br.strategy.mixture[0].first;
        rep.error_stats[static_cast<std::size_t>(i)] = ev.error_stats(i);
    }
    rep.epsilon = *std::max_element(rep.per_agent_gap.begin(), rep.per_agent_gap.end());
    rep.passed = rep.epsilon <= epsilon;
    const auto& inst = ctx.instance();
    for (std::size_t w = 0; w < inst.states.size(); ++w) {
        Belief d = ev.estimator_distribution(static_cast<int>(w));
        // E[estimate | state]: computed from single-agent report means, which
        // is exact where the convolved distribution mean picks up rounding.
        double limit;
        if (ctx.mech().is_voting()) {
            limit = ev.outcome_all_prob(static_cast<int>(w));
        } else {
            std::vector<double> means(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j) {
                double m = 0.0;
                for (const auto& [r, p] : ev.report_dist(j, static_cast<int>(w))) m += r * p;
                means[static_cast<std::size_t>(j)] = m;
            }
            bool all_equal = std::all_of(means.begin(), means.end(), [&](double m) { return m == means[0]; });
            if (all_equal) {
                limit = means[0];
            } else {
                double s = 0.0;
                for (double m : means) s += m;
                limit = s / n;
            }
        }
        rep.estimator_limit.push_back(limit);
        rep.estimator_dist.push_back(std::move(d));
    }
    auto [p1, p2] = truthfulness_report(ctx, profile);
    rep.phi1 = p1;
    rep.phi2 = p2;
    if (ctx.mech().is_voting()) {
        double match = 0.0;
        for (std::size_t w = 0; w < inst.states.size(); ++w) {
            double mean_v = inst.value_mean_given_state(static_cast<int>(w));
            double p1w = ev.outcome_all_prob(static_cast<int>(w));
            double m = mean_v > 0.0 ? p1w : mean_v < 0.0 ? 1.0 - p1w : 1.0;
            match += inst.state_dist[w] * m;
        }
        rep.welfare_match_prob = match;
    }
    return rep;
}

// ----- symmetric equilibrium search -----

struct CandidateResult {
    std::string signal_id;
    bool converged = true;
    EquilibriumReport report;
};

struct SearchResult {
    std::vector<CandidateResult> candidates;
    std::vector<std::vector<std::string>> cycles;  // signal-level best-response cycles
};

namespace detail {

// Resolve a rule-based strategy into an explicit report map (needed to
// compare iterates exactly).
inline Strategy resolve_reports(EvalContext& ctx, const std::string& sig_id, const Strategy& strat) {
    Strategy out = Strategy::pure(sig_id, ReportRule::explicit_map);
    const SignalInfo& info = ctx.signal_info(sig_id);
    auto& rmap = out.explicit_reports[sig_id];
    for (const auto& set : info.sets) rmap[set.real] = ctx.report_value(strat, sig_id, set);
    return out;
}

}  // namespace detail

// Enumerates pure symmetric signal profiles over the universe, closes the
// report maps by best-response iteration, then verifies each fixed point
// against the full deviation space. Candidates whose report iteration cycles
// are flagged; signal-level best-response cycles across candidates are
// reported as evidence against pure symmetric equilibria.
inline SearchResult search_symmetric_equilibria(EvalContext& ctx, double epsilon = 1e-9, int max_iters = 16) {
    SearchResult result;
    std::map<std::string, std::string> br_signal;
    for (const auto& cand : ctx.universe().all()) {
        if (!(ctx.expected_cost(cand.sig.id) < kInf)) continue;
        ReportRule rule = ctx.mech().is_voting() ? ReportRule::truthful_vote : ReportRule::posterior_mean;
        Strategy current = detail::resolve_reports(ctx, cand.sig.id, Strategy::pure(cand.sig.id, rule));
        bool converged = false;
        for (int it = 0; it < max_iters; ++it) {
            Evaluator ev(ctx, Profile::symmetric(ctx.n(), current));
            auto br = ev.best_response(0);
            if (br.strategy.mixture[0].first != cand.sig.id) {
                // Best response leaves the candidate signal: the signal-level
                // rejection is decided by verification below.
                converged = true;
                break;
            }
            if (br.strategy == current) {
                converged = true;
                break;
            }
            current = br.strategy;
        }
        CandidateResult cr;
        cr.signal_id = cand.sig.id;
        cr.converged = converged;
        cr.report = verify_bne(ctx, Profile::symmetric(ctx.n(), current), epsilon);
        br_signal[cand.sig.id] = cr.report.best_deviation_signal.empty() ? cand.sig.id
                                                                         : cr.report.best_deviation_signal[0];
        result.candidates.push_back(std::move(cr));
    }
    // Walk the best-response map to surface cycles among rejected candidates.
    std::set<std::string> seen_cycle_keys;
    for (const auto& cr : result.candidates) {
        if (cr.report.passed) continue;
        std::vector<std::string> path;
        std::map<std::string, int> pos;
        std::string cur = cr.signal_id;
        while (br_signal.count(cur) && !pos.count(cur)) {
            pos[cur] = static_cast<int>(path.size());
            path.push_back(cur);
            cur = br_signal[cur];
        }
        if (!pos.count(cur)) continue;  // walked outside the candidate set
        std::vector<std::string> cycle(path.begin() + pos[cur], path.end());
        if (cycle.size() < 2) continue;
        auto lo = std::min_element(cycle.begin(), cycle.end());
        std::rotate(cycle.begin(), lo, cycle.end());
        std::string key;
        for (const auto& s : cycle) key += s + ";";
        if (seen_cycle_keys.insert(key).second) result.cycles.push_back(cycle);
    }
    return result;
}

// Symmetric mixed profile over two signals, solved to indifference by
// bisection on the mixing weight. Returns nothing when no interior
// indifference point exists. Reports use posterior means throughout.
struct MixtureSolution {
    double q = 0.0;  // probability of sig_a
    double residual = 0.0;
    Profile profile;
};

inline std::optional<MixtureSolution> solve_two_signal_mixture(EvalContext& ctx, const std::string& sig_a,
                                                               const std::string& sig_b) {
    auto gap = [&](double q) {
        Strategy mixed;
        mixed.mixture = {{sig_a, q}, {sig_b, 1.0 - q}};
        mixed.rule = ReportRule::posterior_mean;
        Profile prof = Profile::symmetric(ctx.n(), mixed);
        Evaluator ev(ctx, prof);
        Strategy rule = Strategy::pure(sig_a, ReportRule::posterior_mean);
        double ua = ev.candidate_utility(0, sig_a, rule).total();
        Strategy rule_b = Strategy::pure(sig_b, ReportRule::posterior_mean);
        double ub = ev.candidate_utility(0, sig_b, rule_b).total();
        return ua - ub;
    };
    double f0 = gap(0.0), f1 = gap(1.0);
    if (f0 == 0.0 || f1 == 0.0 || (f0 < 0.0) == (f1 < 0.0)) return std::nullopt;
    double lo = 0.0, hi = 1.0, flo = f0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        double fm = gap(mid);
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    MixtureSolution sol;
    sol.q = 0.5 * (lo + hi);
    sol.residual = std::fabs(gap(sol.q));
    Strategy mixed;
    mixed.mixture = {{sig_a, sol.q}, {sig_b, 1.0 - sol.q}};
    mixed.rule = ReportRule::posterior_mean;
    sol.profile = Profile::symmetric(ctx.n(), mixed);
    return sol;
}

// ----- Monte Carlo path (used for the VCG variant and as an independent
// cross-check of the exact path) -----

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long draws = 0;
    bool exact_unavailable = false;
};

inline McEstimate mc_expected_utility(EvalContext& ctx, const Profile& profile, int agent, long num_draws,
                                      std::uint64_t seed) {
    const auto& inst = ctx.instance();
    const auto& mech = ctx.mech();
    int n = ctx.n();
    RngStream rng(seed, 0x11cfULL);

    // Precomputed tables: support index by (state, type), cumulative dists.
    std::vector<std::vector<int>> sup_idx(inst.states.size(), std::vector<int>(inst.types.size(), -1));
    for (std::size_t k = 0; k < inst.support.size(); ++k)
        sup_idx[static_cast<std::size_t>(inst.support[k].state)][static_cast<std::size_t>(inst.support[k].type)] =
            static_cast<int>(k);

    // Truthful beliefs per (agent, signal, info set); agents of a symmetric
    // profile share one slot.
    Evaluator ev_for_beliefs(ctx, profile);
    bool symmetric = profile.is_symmetric();
    std::map<std::tuple<int, std::string, int>, Belief> beliefs;
    auto belief_for = [&](int i, const std::string& sig_id, int set_idx) -> const Belief& {
        auto key = std::make_tuple(symmetric ? 0 : i, sig_id, set_idx);
        auto it = beliefs.find(key);
        if (it != beliefs.end()) return it->second;
        const auto& set = ctx.signal_info(sig_id).sets[static_cast<std::size_t>(set_idx)];
        Belief b = ev_for_beliefs.peer_belief(i, set.state_probs);
        return beliefs.emplace(key, std::move(b)).first->second;
    };

    double sum = 0.0, sum2 = 0.0;
    std::vector<Message> msgs(static_cast<std::size_t>(n));
    std::vector<std::string> sig_of(static_cast<std::size_t>(n));
    std::vector<int> type_of(static_cast<std::size_t>(n));
    for (long d = 0; d < num_draws; ++d) {
        double uw = rng.next_unit();
        int w = 0;
        double acc = 0.0;
        for (std::size_t s = 0; s < inst.state_dist.size(); ++s) {
            acc += inst.state_dist[s];
            if (uw < acc || s + 1 == inst.state_dist.size()) {
                w = static_cast<int>(s);
                break;
            }
        }
        for (int j = 0; j < n; ++j) {
            double ut = rng.next_unit();
            int ty = 0;
            double at = 0.0;
            const auto& row = inst.type_dist_given_state[static_cast<std::size_t>(w)];
            for (std::size_t t = 0; t < row.size(); ++t) {
                at += row[t];
                if (ut < at || t + 1 == row.size()) {
                    ty = static_cast<int>(t);
                    break;
                }
            }
            type_of[static_cast<std::size_t>(j)] = ty;
            const Strategy& strat = profile.agents[static_cast<std::size_t>(j)];
            double us = rng.next_unit();
            double as = 0.0;
            std::string sig = strat.mixture.back().first;
            for (const auto& [id, pi] : strat.mixture) {
                as += pi;
                if (us < as) {
                    sig = id;
                    break;
                }
            }
            sig_of[static_cast<std::size_t>(j)] = sig;
            int k = sup_idx[static_cast<std::size_t>(w)][static_cast<std::size_t>(ty)];
            const SignalInfo& info = ctx.signal_info(sig);
            int set_idx = info.set_of_support[static_cast<std::size_t>(k)];
            const InfoSet& set = info.sets[static_cast<std::size_t>(set_idx)];
            Message& m = msgs[static_cast<std::size_t>(j)];
            double rep = ctx.report_value(strat, sig, set);
            if (mech.is_voting()) m.vote = rep >= 0.5 ? 1 : 0;
            else m.value_report = rep;
            if (mech.is_betting() && mech.lambda > 0.0) m.belief = belief_for(j, sig, set_idx);
            else m.belief = Belief::dirac(0.0);
        }
        MechanismDraws draws = MechanismDraws::draw(mech, n, rng);
        Outcome out = mechanism_outcome(mech, msgs, draws);
        auto ai = static_cast<std::size_t>(agent);
        double v = inst.values[static_cast<std::size_t>(type_of[ai])];
        double cost = ctx.universe().by_id(sig_of[ai]).cost_by_type[static_cast<std::size_t>(type_of[ai])];
        double u = v * out.allocations[ai] + out.transfers[ai] - cost;
        sum += u;
        sum2 += u * u;
    }
    McEstimate est;
    est.draws = num_draws;
    est.mean = sum / static_cast<double>(num_draws);
    double var = sum2 / static_cast<double>(num_draws) - est.mean * est.mean;
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(num_draws));
    est.exact_unavailable = mech.kind == MechanismKind::vcg_betting;
    return est;
}

// Monte Carlo estimator mean conditional on one state (used to check the
// finite-sample estimator against its exact limit).
inline McEstimate mc_estimator_mean(EvalContext& ctx, const Profile& profile, int state, long reps,
                                    std::uint64_t seed) {
    const auto& inst = ctx.instance();
    const auto& mech = ctx.mech();
    int n = ctx.n();
    RngStream rng(seed, 0xe571u);
    double sum = 0.0, sum2 = 0.0;
    std::vector<std::vector<int>> sup_idx(inst.states.size(), std::vector<int>(inst.types.size(), -1));
    for (std::size_t k = 0; k < inst.support.size(); ++k)
        sup_idx[static_cast<std::size_t>(inst.support[k].state)][static_cast<std::size_t>(inst.support[k].type)] =
            static_cast<int>(k);
    std::vector<Message> msgs(static_cast<std::size_t>(n));
    for (long d = 0; d < reps; ++d) {
        for (int j = 0; j < n; ++j) {
            const auto& row = inst.type_dist_given_state[static_cast<std::size_t>(state)];
            double ut = rng.next_unit(), at = 0.0;
            int ty = 0;
            for (std::size_t t = 0; t < row.size(); ++t) {
                at += row[t];
                if (ut < at || t + 1 == row.size()) {
                    ty = static_cast<int>(t);
                    break;
                }
            }
            const Strategy& strat = profile.agents[static_cast<std::size_t>(j)];
            double us = rng.next_unit(), as = 0.0;
            std::string sig = strat.mixture.back().first;
            for (const auto& [id, pi] : strat.mixture) {
                as += pi;
                if (us < as) {
                    sig = id;
                    break;
                }
            }
            int k = sup_idx[static_cast<std::size_t>(state)][static_cast<std::size_t>(ty)];
            const SignalInfo& info = ctx.signal_info(sig);
            const InfoSet& set = info.sets[static_cast<std::size_t>(info.set_of_support[k])];
            double rep = ctx.report_value(strat, sig, set);
            if (mech.is_voting()) msgs[static_cast<std::size_t>(j)].vote = rep >= 0.5 ? 1 : 0;
            else msgs[static_cast<std::size_t>(j)].value_report = rep;
            msgs[static_cast<std::size_t>(j)].belief = Belief::dirac(0.0);
        }
        MechanismConfig quiet = mech;
        quiet.lambda = 0.0;  // estimator does not depend on the scoring stage
        MechanismDraws draws = MechanismDraws::draw(quiet, n, rng);
        Outcome out = mechanism_outcome(quiet, msgs, draws);
        sum += out.estimate;
        sum2 += out.estimate * out.estimate;
    }
    McEstimate est;
    est.draws = reps;
    est.mean = sum / static_cast<double>(reps);
    double var = sum2 / static_cast<double>(reps) - est.mean * est.mean;
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(reps));
    return est;
}

}  // namespace elicit
