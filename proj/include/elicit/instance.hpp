#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "elicit/belief.hpp"
#include "elicit/scoring.hpp"

namespace elicit {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Signal realizations are finite sequences of 64-bit floats compared exactly.
// Instance authors must use exactly representable values.
using Realization = std::vector<double>;

inline std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

inline std::string format_realization(const Realization& r) {
    std::string s = "(";
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) s += ",";
        s += format_real(r[i]);
    }
    return s + ")";
}

struct ZeroProbabilityRealization : std::runtime_error {
    explicit ZeroProbabilityRealization(const std::string& w) : std::runtime_error(w) {}
};
struct UnknownSignal : std::runtime_error {
    explicit UnknownSignal(const std::string& w) : std::runtime_error(w) {}
};
struct TriggerOutsideRange : std::runtime_error {
    explicit TriggerOutsideRange(const std::string& w) : std::runtime_error(w) {}
};

enum class SignalKind { base, combined, dynamic };

// A signal is stored extensionally: one realization row per joint support
// point of (state, type). Combined and dynamic signals keep enough structure
// to recover how they were built.
struct Signal {
    std::string id;
    SignalKind kind = SignalKind::base;
    std::vector<std::string> parts;       // combined: flattened base ids; dynamic: {first, continuation}
    std::vector<Realization> trigger;     // dynamic only
    std::vector<Realization> table;       // indexed by Instance support point
};

struct SupportPoint {
    int state = 0;
    int type = 0;
    double prob = 0.0;
};

class Instance {
public:
    std::vector<std::string> states;
    std::vector<double> state_dist;
    std::vector<std::string> types;
    std::vector<std::vector<double>> type_dist_given_state;  // [state][type]
    std::vector<double> values;                              // v(type)
    double v_lo = 0.0;
    double v_hi = 1.0;
    std::vector<Signal> signals;
    std::vector<std::vector<double>> costs;  // [signal][type], may be +inf
    int n_agents = 1;

    std::vector<SupportPoint> support;  // joint support of F, state-major

    void finalize() {
        support.clear();
        for (std::size_t w = 0; w < states.size(); ++w) {
            for (std::size_t t = 0; t < types.size(); ++t) {
                double p = state_dist[w] * type_dist_given_state[w][t];
                if (p > 0.0) support.push_back({static_cast<int>(w), static_cast<int>(t), p});
            }
        }
        if (support.empty()) throw std::invalid_argument("Instance: empty joint support");
        for (const auto& sig : signals)
            if (sig.table.size() != support.size())
                throw std::invalid_argument("Instance: signal '" + sig.id + "' table does not cover support");
        if (costs.size() != signals.size())
            throw std::invalid_argument("Instance: cost table does not cover signals");
    }

    int signal_index(const std::string& id) const {
        for (std::size_t i = 0; i < signals.size(); ++i)
            if (signals[i].id == id) return static_cast<int>(i);
        return -1;
    }

    const Signal& signal(const std::string& id) const {
        int i = signal_index(id);
        if (i < 0) throw UnknownSignal("unknown signal '" + id + "'");
        return signals[static_cast<std::size_t>(i)];
    }

    // Marginal P(type), support types only.
    std::vector<double> type_marginal() const {
        std::vector<double> m(types.size(), 0.0);
        for (const auto& sp : support) m[static_cast<std::size_t>(sp.type)] += sp.prob;
        return m;
    }

    double value_mean_given_state(int w) const {
        double num = 0.0, den = 0.0;
        for (const auto& sp : support) {
            if (sp.state != w) continue;
            num += sp.prob * values[static_cast<std::size_t>(sp.type)];
            den += sp.prob;
        }
        return den > 0.0 ? num / den : 0.0;
    }

    double value_mean() const {
        double m = 0.0;
        for (const auto& sp : support) m += sp.prob * values[static_cast<std::size_t>(sp.type)];
        return m;
    }

    // Realized demand curve F_{V|w} as a finite distribution.
    Belief demand_curve(int w) const {
        std::vector<std::pair<double, double>> mass;
        double den = 0.0;
        for (const auto& sp : support) {
            if (sp.state != w) continue;
            mass.emplace_back(values[static_cast<std::size_t>(sp.type)], sp.prob);
            den += sp.prob;
        }
        for (auto& [v, p] : mass) p /= den;
        return Belief::from_weighted(mass);
    }

    Belief value_distribution() const {
        std::vector<std::pair<double, double>> mass;
        for (const auto& sp : support) mass.emplace_back(values[static_cast<std::size_t>(sp.type)], sp.prob);
        return Belief::from_weighted(mass);
    }
};

// Posterior over the joint support given one signal realization.
struct Posterior {
    const Instance* instance = nullptr;
    std::string signal_id;
    Realization realization;
    std::vector<double> probs;      // aligned to instance->support
    double marginal_prob = 0.0;     // P(realization)

    double value_mean() const {
        double m = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k)
            m += probs[k] * instance->values[static_cast<std::size_t>(instance->support[k].type)];
        return m;
    }

    double value_variance() const {
        double m = value_mean(), v = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            double d = instance->values[static_cast<std::size_t>(instance->support[k].type)] - m;
            v += probs[k] * d * d;
        }
        return v;
    }

    // P(state = w | realization)
    double state_prob(int w) const {
        double s = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k)
            if (instance->support[k].state == w) s += probs[k];
        return s;
    }

    Belief value_belief() const {
        std::vector<std::pair<double, double>> mass;
        for (std::size_t k = 0; k < probs.size(); ++k)
            if (probs[k] > 0.0)
                mass.emplace_back(instance->values[static_cast<std::size_t>(instance->support[k].type)], probs[k]);
        return Belief::from_weighted(mass);
    }

    // Belief over a per-state statistic.
    Belief statistic_belief(const std::vector<double>& stat_by_state) const {
        std::vector<std::pair<double, double>> mass;
        for (std::size_t k = 0; k < probs.size(); ++k)
            if (probs[k] > 0.0) mass.emplace_back(stat_by_state[static_cast<std::size_t>(instance->support[k].state)], probs[k]);
        return Belief::from_weighted(mass);
    }
};

inline Posterior posterior(const Instance& inst, const Signal& sig, const Realization& real) {
    Posterior post;
    post.instance = &inst;
    post.signal_id = sig.id;
    post.realization = real;
    post.probs.assign(inst.support.size(), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < inst.support.size(); ++k) {
        if (sig.table[k] == real) {
            post.probs[k] = inst.support[k].prob;
            total += inst.support[k].prob;
        }
    }
    if (total <= 0.0)
        throw ZeroProbabilityRealization("signal '" + sig.id + "' never produces " + format_realization(real));
    for (double& p : post.probs) p /= total;
    post.marginal_prob = total;
    return post;
}

// Distinct realizations of a signal with their marginal probabilities,
// ordered lexicographically for determinism.
inline std::vector<std::pair<Realization, double>> reachable_realizations(const Instance& inst, const Signal& sig) {
    std::map<Realization, double> acc;
    for (std::size_t k = 0; k < inst.support.size(); ++k) acc[sig.table[k]] += inst.support[k].prob;
    return {acc.begin(), acc.end()};
}

// Var[v_i | s_i(w,theta_i)] == 0 for every reachable realization.
inline bool is_revealing(const Instance& inst, const Signal& sig) {
    for (const auto& [real, prob] : reachable_realizations(inst, sig)) {
        (void)prob;
        if (posterior(inst, sig, real).value_variance() > kProbTolerance) return false;
    }
    return true;
}

namespace detail {

// Flatten a list of signal ids into the sorted set of base ids they cover.
inline std::vector<std::string> flatten_base_ids(const Instance& inst, const std::vector<std::string>& ids) {
    std::set<std::string> base;
    for (const auto& id : ids) {
        const Signal& s = inst.signal(id);
        if (s.kind == SignalKind::base) {
            base.insert(s.id);
        } else if (s.kind == SignalKind::combined) {
            for (const auto& p : s.parts) base.insert(p);
        } else {
            throw std::invalid_argument("combine_signals: dynamic signal '" + id + "' cannot be combined");
        }
    }
    return {base.begin(), base.end()};
}

inline std::string combined_id(const std::vector<std::string>& base_ids) {
    std::string id = "comb(";
    for (std::size_t i = 0; i < base_ids.size(); ++i) {
        if (i) id += "+";
        id += base_ids[i];
    }
    return id + ")";
}

}  // namespace detail

// Concatenated realization of the (flattened, sorted) base parts.
inline Signal combine_signals(const Instance& inst, const std::vector<std::string>& part_ids) {
    if (part_ids.empty()) throw std::invalid_argument("combine_signals: no parts");
    auto base_ids = detail::flatten_base_ids(inst, part_ids);
    if (base_ids.size() == 1) return inst.signal(base_ids[0]);
    Signal out;
    out.id = detail::combined_id(base_ids);
    out.kind = SignalKind::combined;
    out.parts = base_ids;
    out.table.resize(inst.support.size());
    for (std::size_t k = 0; k < inst.support.size(); ++k) {
        Realization row;
        for (const auto& id : base_ids) {
            const Signal& part = inst.signal(id);
            row.insert(row.end(), part.table[k].begin(), part.table[k].end());
        }
        out.table[k] = row;
    }
    return out;
}

// Cost row of a combined signal: an explicit instance entry with the same
// base-part set wins; otherwise the parts' costs add (which keeps the
// finiteness closure of Assumption-style combination intact).
inline std::vector<double> combined_cost_row(const Instance& inst, const std::vector<std::string>& base_ids) {
    for (std::size_t i = 0; i < inst.signals.size(); ++i) {
        const Signal& s = inst.signals[i];
        if (s.kind == SignalKind::combined && s.parts == base_ids) return inst.costs[i];
        if (s.kind == SignalKind::base && base_ids.size() == 1 && s.id == base_ids[0]) return inst.costs[i];
    }
    std::vector<double> row(inst.types.size(), 0.0);
    for (const auto& id : base_ids) {
        const auto& part_cost = inst.costs[static_cast<std::size_t>(inst.signal_index(id))];
        for (std::size_t t = 0; t < row.size(); ++t) row[t] += part_cost[t];
    }
    return row;
}

// Dynamic signal: observe `first`; continue with `continuation` only when the
// first realization falls in the trigger set.
inline Signal make_dynamic_signal(const Instance& inst, const std::string& first_id,
                                  const std::string& continuation_id, const std::vector<Realization>& trigger) {
    const Signal& first = inst.signal(first_id);
    const Signal& cont = inst.signal(continuation_id);
    std::set<Realization> reachable;
    for (const auto& [real, p] : reachable_realizations(inst, first)) {
        (void)p;
        reachable.insert(real);
    }
    std::set<Realization> trig(trigger.begin(), trigger.end());
    for (const auto& r : trig)
        if (!reachable.count(r))
            throw TriggerOutsideRange("trigger " + format_realization(r) + " unreachable for '" + first_id + "'");
    Signal out;
    out.kind = SignalKind::dynamic;
    out.parts = {first_id, continuation_id};
    out.trigger.assign(trig.begin(), trig.end());
    std::string id = "dyn(" + first_id + ";" + continuation_id + ";";
    for (std::size_t i = 0; i < out.trigger.size(); ++i) {
        if (i) id += "|";
        id += format_realization(out.trigger[i]);
    }
    out.id = id + ")";
    out.table.resize(inst.support.size());
    for (std::size_t k = 0; k < inst.support.size(); ++k) {
        Realization row = first.table[k];
        if (trig.count(first.table[k])) row.insert(row.end(), cont.table[k].begin(), cont.table[k].end());
        out.table[k] = row;
    }
    return out;
}

// Cost of a dynamic signal per type: the first signal's cost plus the
// continuation cost weighted by the probability (given the type) that the
// trigger fires.
inline std::vector<double> dynamic_cost_row(const Instance& inst, const Signal& dyn) {
    const Signal& first = inst.signal(dyn.parts[0]);
    const auto& c_first = inst.costs[static_cast<std::size_t>(inst.signal_index(dyn.parts[0]))];
    const auto& c_cont = inst.costs[static_cast<std::size_t>(inst.signal_index(dyn.parts[1]))];
    std::set<Realization> trig(dyn.trigger.begin(), dyn.trigger.end());
    std::vector<double> fire(inst.types.size(), 0.0), mass(inst.types.size(), 0.0);
    for (std::size_t k = 0; k < inst.support.size(); ++k) {
        auto t = static_cast<std::size_t>(inst.support[k].type);
        mass[t] += inst.support[k].prob;
        if (trig.count(first.table[k])) fire[t] += inst.support[k].prob;
    }
    std::vector<double> row(inst.types.size(), 0.0);
    for (std::size_t t = 0; t < row.size(); ++t) {
        double p_fire = mass[t] > 0.0 ? fire[t] / mass[t] : 0.0;
        row[t] = c_first[t] + (p_fire > 0.0 ? c_cont[t] * p_fire : 0.0);
    }
    return row;
}

struct ValidationIssue {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    bool has(const std::string& code) const {
        for (const auto& i : issues)
            if (i.code == code) return true;
        return false;
    }
};

// Checks the distributional invariants plus the finiteness (A2),
// combination-closure (A5) and revealing-signal (A6) assumptions.
// `closure_enabled` reports whether on-demand combined-signal generation is
// available; when it is not, A5 requires explicit combined entries.
inline ValidationReport validate_instance(const Instance& inst, bool closure_enabled = true) {
    ValidationReport rep;
    auto flag = [&rep](const std::string& code, const std::string& msg) { rep.issues.push_back({code, msg}); };

    double s = 0.0;
    for (double p : inst.state_dist) {
        if (p < 0.0) flag("dist", "negative state probability");
        s += p;
    }
    if (std::fabs(s - 1.0) > kProbTolerance) flag("dist", "state distribution sums to " + format_real(s));
    for (std::size_t w = 0; w < inst.type_dist_given_state.size(); ++w) {
        double st = 0.0;
        for (double p : inst.type_dist_given_state[w]) {
            if (p < 0.0) flag("dist", "negative type probability");
            st += p;
        }
        if (std::fabs(st - 1.0) > kProbTolerance)
            flag("dist", "type distribution for state '" + inst.states[w] + "' sums to " + format_real(st));
    }
    for (std::size_t t = 0; t < inst.values.size(); ++t)
        if (inst.values[t] < inst.v_lo || inst.values[t] > inst.v_hi)
            flag("bounds", "value of type '" + inst.types[t] + "' outside [v_lo, v_hi]");
    if (inst.support.empty()) flag("A2", "empty joint support");
    if (inst.signals.empty()) flag("A2", "empty signal space");
    for (const auto& row : inst.costs)
        for (double c : row)
            if (c < 0.0) flag("cost", "negative signal cost");

    auto marginal = inst.type_marginal();
    auto finite_for_support = [&](std::size_t sig_idx) {
        for (std::size_t t = 0; t < inst.types.size(); ++t)
            if (marginal[t] > 0.0 && !(inst.costs[sig_idx][t] < kInf)) return false;
        return true;
    };

    bool has_revealing = false;
    for (std::size_t i = 0; i < inst.signals.size(); ++i) {
        if (finite_for_support(i) && is_revealing(inst, inst.signals[i])) {
            has_revealing = true;
            break;
        }
    }
    if (!has_revealing) flag("A6", "no finite-cost revealing signal");

    if (!closure_enabled) {
        std::vector<std::string> finite_base;
        for (std::size_t i = 0; i < inst.signals.size(); ++i)
            if (inst.signals[i].kind == SignalKind::base && finite_for_support(i)) finite_base.push_back(inst.signals[i].id);
        for (std::size_t a = 0; a < finite_base.size(); ++a) {
            for (std::size_t b = a + 1; b < finite_base.size(); ++b) {
                bool covered = false;
                for (const auto& sig : inst.signals) {
                    if (sig.kind != SignalKind::combined) continue;
                    if (std::count(sig.parts.begin(), sig.parts.end(), finite_base[a]) &&
                        std::count(sig.parts.begin(), sig.parts.end(), finite_base[b])) {
                        covered = true;
                        break;
                    }
                }
                if (!covered)
                    flag("A5", "no combined signal covering {" + finite_base[a] + "," + finite_base[b] + "}");
            }
        }
    }
    return rep;
}

// How well a signal predicts a per-state statistic: the maximal expected CRPS
// attained after observing the signal, with the integration domain set to the
// achievable range of the statistic. Uninformative signals on a constant
// statistic score zero.
inline double predictiveness(const Instance& inst, const Signal& sig, const std::vector<double>& stat_by_state) {
    double lo = *std::min_element(stat_by_state.begin(), stat_by_state.end());
    double hi = *std::max_element(stat_by_state.begin(), stat_by_state.end());
    ScoreParams params = ScoreParams::crps(lo, hi);
    double rho = 0.0;
    for (const auto& [real, prob] : reachable_realizations(inst, sig)) {
        Belief b = posterior(inst, sig, real).statistic_belief(stat_by_state);
        rho += prob * expected_crps_truthful(b, params);
    }
    return rho;
}

// Default predictiveness target: E[v_j | w].
inline std::vector<double> state_mean_statistic(const Instance& inst) {
    std::vector<double> stat(inst.states.size(), 0.0);
    for (std::size_t w = 0; w < inst.states.size(); ++w) stat[w] = inst.value_mean_given_state(static_cast<int>(w));
    return stat;
}

}  // namespace elicit
