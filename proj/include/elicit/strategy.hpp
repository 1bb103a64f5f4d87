#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "elicit/instance.hpp"
#include "elicit/mechanisms.hpp"

namespace elicit {

struct ClosureBoundExceeded : std::runtime_error {
    explicit ClosureBoundExceeded(const std::string& w) : std::runtime_error(w) {}
};

// How an agent maps (signal, realization) to an action report. Belief reports
// are not part of the strategy: they are always the truthful posterior of the
// scored statistic (propriety makes that a best response against any fixed
// opponent profile, and beliefs only enter the reporter's own transfer).
enum class ReportRule {
    posterior_mean,  // value mechanisms: report E[v | signal, realization]
    truthful_vote,   // vote 1(E[v | info] >= 0)
    exante_vote,     // vote 1(E[v] > 0) regardless of the realization
    explicit_map,    // realization-indexed table
};

struct Strategy {
    std::vector<std::pair<std::string, double>> mixture;  // (signal id, prob), sums to 1
    ReportRule rule = ReportRule::posterior_mean;
    std::map<std::string, std::map<Realization, double>> explicit_reports;

    static Strategy pure(const std::string& signal_id, ReportRule r = ReportRule::posterior_mean) {
        Strategy s;
        s.mixture = {{signal_id, 1.0}};
        s.rule = r;
        return s;
    }

    bool operator==(const Strategy& o) const {
        return mixture == o.mixture && rule == o.rule && explicit_reports == o.explicit_reports;
    }
};

struct Profile {
    std::vector<Strategy> agents;

    static Profile symmetric(int n, const Strategy& s) {
        Profile p;
        p.agents.assign(static_cast<std::size_t>(n), s);
        return p;
    }

    bool is_symmetric() const {
        for (std::size_t i = 1; i < agents.size(); ++i)
            if (!(agents[i] == agents[0])) return false;
        return true;
    }
};

// A signal available to deviating agents, with its per-type cost row.
struct CandidateSignal {
    Signal sig;
    std::vector<double> cost_by_type;
    bool from_instance = false;
};

struct ClosureOptions {
    bool combined = true;
    bool dynamic_signals = false;
    int max_generated = 64;
    std::size_t max_trigger_realizations = 4;  // skip dynamics whose first signal has more realizations
};

// The instance's signal set plus the combined/dynamic closure, generated up
// front within a configured bound. Exceeding the bound is an error, not a
// silent truncation.
class SignalUniverse {
public:
    SignalUniverse(const Instance& inst, ClosureOptions opts = {}) : inst_(&inst), opts_(opts) {
        for (std::size_t i = 0; i < inst.signals.size(); ++i)
            add({inst.signals[i], inst.costs[i], true});
        if (opts.combined) generate_combined();
        if (opts.dynamic_signals) generate_dynamics();
    }

    const Instance& instance() const { return *inst_; }
    const std::vector<CandidateSignal>& all() const { return all_; }

    const CandidateSignal& by_id(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw UnknownSignal("signal '" + id + "' not in universe");
        return all_[it->second];
    }

    bool has(const std::string& id) const { return index_.count(id) != 0; }

    // Combined signal over the given parts, registered in the closure.
    const CandidateSignal& combined(const std::vector<std::string>& part_ids) {
        Signal sig = combine_signals(*inst_, part_ids);
        if (has(sig.id)) return by_id(sig.id);
        std::vector<double> cost =
            sig.kind == SignalKind::combined ? combined_cost_row(*inst_, sig.parts)
                                             : inst_->costs[static_cast<std::size_t>(inst_->signal_index(sig.id))];
        add({sig, cost, false});
        return all_.back();
    }

    // The signal combining every base signal with a finite cost on the
    // support (the construction behind the auxiliary instance).
    const CandidateSignal& all_signals_combination() {
        auto marginal = inst_->type_marginal();
        std::set<std::string> base;
        for (std::size_t i = 0; i < inst_->signals.size(); ++i) {
            bool finite = true;
            for (std::size_t t = 0; t < inst_->types.size(); ++t)
                if (marginal[t] > 0.0 && !(inst_->costs[i][t] < kInf)) finite = false;
            if (!finite) continue;
            const Signal& s = inst_->signals[i];
            if (s.kind == SignalKind::base) base.insert(s.id);
            else
                for (const auto& p : s.parts) base.insert(p);
        }
        if (base.empty()) throw std::invalid_argument("no finite-cost signals to combine");
        return combined({base.begin(), base.end()});
    }

private:
    void add(CandidateSignal cs) {
        if (index_.count(cs.sig.id)) return;
        if (static_cast<int>(all_.size()) - static_cast<int>(inst_->signals.size()) >= opts_.max_generated)
            throw ClosureBoundExceeded("signal closure exceeds " + std::to_string(opts_.max_generated));
        index_[cs.sig.id] = all_.size();
        all_.push_back(std::move(cs));
    }

    void generate_combined() {
        std::vector<std::string> base;
        for (const auto& s : inst_->signals)
            if (s.kind == SignalKind::base) base.push_back(s.id);
        std::size_t b = base.size();
        if (b < 2 || b > 16) return;
        for (std::size_t mask = 1; mask < (1u << b); ++mask) {
            if (!(mask & (mask - 1))) continue;  // singletons
            std::vector<std::string> parts;
            for (std::size_t j = 0; j < b; ++j)
                if (mask & (1u << j)) parts.push_back(base[j]);
            combined(parts);
        }
    }

    void generate_dynamics() {
        std::vector<std::string> base;
        for (const auto& s : inst_->signals)
            if (s.kind == SignalKind::base) base.push_back(s.id);
        for (const auto& first : base) {
            auto reach = reachable_realizations(*inst_, inst_->signal(first));
            if (reach.size() < 2 || reach.size() > opts_.max_trigger_realizations) continue;
            for (const auto& cont : base) {
                if (cont == first) continue;
                std::size_t m = reach.size();
                for (std::size_t mask = 1; mask + 1 < (1u << m); ++mask) {  // nonempty proper subsets
                    std::vector<Realization> trigger;
                    for (std::size_t j = 0; j < m; ++j)
                        if (mask & (1u << j)) trigger.push_back(reach[j].first);
                    Signal dyn = make_dynamic_signal(*inst_, first, cont, trigger);
                    if (has(dyn.id)) continue;
                    add({dyn, dynamic_cost_row(*inst_, dyn), false});
                }
            }
        }
    }

    const Instance* inst_;
    ClosureOptions opts_;
    std::vector<CandidateSignal> all_;
    std::map<std::string, std::size_t> index_;
};

// One reachable realization of a signal together with the exact posterior it
// induces.
struct InfoSet {
    Realization real;
    double prob = 0.0;
    double value_mean = 0.0;
    std::vector<double> state_probs;   // P(state | realization)
    std::vector<int> support_points;   // indices into Instance::support
};

struct SignalInfo {
    std::vector<InfoSet> sets;
    std::vector<int> set_of_support;  // support index -> info set index
};

// Shared evaluation state: instance + mechanism + signal universe + caches.
class EvalContext {
public:
    EvalContext(const Instance& inst, MechanismConfig mech, ClosureOptions opts = {})
        : inst_(inst), mech_(std::move(mech)), universe_(inst, opts) {
        mech_.validate();
    }

    const Instance& instance() const { return inst_; }
    const MechanismConfig& mech() const { return mech_; }
    SignalUniverse& universe() { return universe_; }
    const SignalUniverse& universe() const { return universe_; }
    int n() const { return inst_.n_agents; }

    const SignalInfo& signal_info(const std::string& id) {
        auto it = info_.find(id);
        if (it != info_.end()) return it->second;
        const CandidateSignal& cs = universe_.by_id(id);
        SignalInfo si;
        si.set_of_support.assign(inst_.support.size(), -1);
        std::map<Realization, int> where;
        for (std::size_t k = 0; k < inst_.support.size(); ++k) {
            const Realization& r = cs.sig.table[k];
            auto w = where.find(r);
            int idx;
            if (w == where.end()) {
                idx = static_cast<int>(si.sets.size());
                where[r] = idx;
                InfoSet s;
                s.real = r;
                s.state_probs.assign(inst_.states.size(), 0.0);
                si.sets.push_back(std::move(s));
            } else {
                idx = w->second;
            }
            auto& set = si.sets[static_cast<std::size_t>(idx)];
            set.prob += inst_.support[k].prob;
            set.state_probs[static_cast<std::size_t>(inst_.support[k].state)] += inst_.support[k].prob;
            set.support_points.push_back(static_cast<int>(k));
            si.set_of_support[k] = idx;
        }
        for (auto& s : si.sets) {
            double mean = 0.0;
            for (int k : s.support_points)
                mean += inst_.support[static_cast<std::size_t>(k)].prob *
                        inst_.values[static_cast<std::size_t>(inst_.support[static_cast<std::size_t>(k)].type)];
            s.value_mean = mean / s.prob;
            for (auto& p : s.state_probs) p /= s.prob;
        }
        return info_.emplace(id, std::move(si)).first->second;
    }

    // Expected information-acquisition cost of a signal (prior type marginal).
    double expected_cost(const std::string& id) {
        const CandidateSignal& cs = universe_.by_id(id);
        auto marginal = inst_.type_marginal();
        double c = 0.0;
        for (std::size_t t = 0; t < marginal.size(); ++t) {
            if (marginal[t] <= 0.0) continue;
            if (!(cs.cost_by_type[t] < kInf)) return kInf;
            c += marginal[t] * cs.cost_by_type[t];
        }
        return c;
    }

    // Action report of a strategy at one information set.
    double report_value(const Strategy& strat, const std::string& sig_id, const InfoSet& set) const {
        switch (strat.rule) {
            case ReportRule::posterior_mean:
                if (mech_.is_voting()) return set.value_mean >= 0.0 ? 1.0 : 0.0;
                return set.value_mean;
            case ReportRule::truthful_vote: return set.value_mean >= 0.0 ? 1.0 : 0.0;
            case ReportRule::exante_vote: return inst_.value_mean() > 0.0 ? 1.0 : 0.0;
            case ReportRule::explicit_map: {
                auto sit = strat.explicit_reports.find(sig_id);
                if (sit == strat.explicit_reports.end())
                    throw std::invalid_argument("strategy has no report map for signal '" + sig_id + "'");
                auto rit = sit->second.find(set.real);
                if (rit == sit->second.end())
                    throw std::invalid_argument("report map for '" + sig_id + "' misses realization " +
                                                format_realization(set.real));
                return rit->second;
            }
        }
        throw std::logic_error("unreachable");
    }

private:
    const Instance& inst_;
    MechanismConfig mech_;
    SignalUniverse universe_;
    std::map<std::string, SignalInfo> info_;
};

}  // namespace elicit
