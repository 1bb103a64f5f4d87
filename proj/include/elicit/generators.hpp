#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "elicit/instance.hpp"

namespace elicit {

// Binary states and values with a free signal 1(v_i >= state) that is
// uninformative in state 0 and revealing in state 1, plus a revealing signal
// costing c_bar > 1. The profile where everyone rides the free signal is the
// equilibrium whose estimate misses the ex-ante optimum.
inline Instance make_prop1_instance(double c_bar = 2.0, int n = 200) {
    Instance inst;
    inst.states = {"w0", "w1"};
    inst.state_dist = {0.5, 0.5};
    inst.types = {"v0", "v1"};
    inst.values = {0.0, 1.0};
    inst.v_lo = 0.0;
    inst.v_hi = 1.0;
    inst.type_dist_given_state = {{0.5, 0.5}, {0.5, 0.5}};
    inst.n_agents = n;
    Signal sf;
    sf.id = "sF";
    Signal sr;
    sr.id = "sR";
    for (int w = 0; w < 2; ++w) {
        for (int t = 0; t < 2; ++t) {
            double v = inst.values[static_cast<std::size_t>(t)];
            sf.table.push_back({v >= static_cast<double>(w) ? 1.0 : 0.0});
            sr.table.push_back({v});
        }
    }
    inst.signals = {sf, sr};
    inst.costs = {{0.0, 0.0}, {c_bar, c_bar}};
    inst.finalize();
    return inst;
}

enum class FreeSignalKind {
    constant,  // realization 0 everywhere: strictly uninformative
    sign,      // realization 1(v_i >= 0): the initial-information refinement
};

// Values v = beta*state + eps with eps uniform on {-1, +1}. The free signal
// is either strictly uninformative or the sign indicator; the revealing
// signal costs c_bar. With `with_dynamic`, a dynamic signal "observe the
// free signal, then pay for the revealing one only on the trigger
// realization 1" is added explicitly.
inline Instance make_sec42_instance(double beta, double c_bar = 2.0, int n = 9,
                                    FreeSignalKind free_kind = FreeSignalKind::sign, bool with_dynamic = false) {
    Instance inst;
    inst.states = {"w0", "w1"};
    inst.state_dist = {0.5, 0.5};
    std::vector<double> vals;
    for (int w = 0; w < 2; ++w)
        for (double e : {-1.0, 1.0}) vals.push_back(beta * w + e);
    // distinct sorted values as types with state-dependent supports
    std::vector<double> uniq = vals;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    inst.types.clear();
    for (double v : uniq) inst.types.push_back("v" + format_real(v));
    inst.values = uniq;
    inst.v_lo = uniq.front();
    inst.v_hi = uniq.back();
    inst.type_dist_given_state.assign(2, std::vector<double>(uniq.size(), 0.0));
    for (int w = 0; w < 2; ++w) {
        for (double e : {-1.0, 1.0}) {
            double v = beta * w + e;
            auto it = std::find(uniq.begin(), uniq.end(), v);
            inst.type_dist_given_state[static_cast<std::size_t>(w)]
                                      [static_cast<std::size_t>(it - uniq.begin())] += 0.5;
        }
    }
    inst.n_agents = n;
    Signal su;
    su.id = "sU";
    Signal sr;
    sr.id = "sR";
    for (int w = 0; w < 2; ++w) {
        for (std::size_t t = 0; t < uniq.size(); ++t) {
            if (inst.type_dist_given_state[static_cast<std::size_t>(w)][t] <= 0.0) continue;
            double v = uniq[t];
            su.table.push_back({free_kind == FreeSignalKind::constant ? 0.0 : (v >= 0.0 ? 1.0 : 0.0)});
            sr.table.push_back({v});
        }
    }
    inst.signals = {su, sr};
    inst.costs = {std::vector<double>(uniq.size(), 0.0), std::vector<double>(uniq.size(), c_bar)};
    inst.finalize();
    if (with_dynamic) {
        Signal dyn = make_dynamic_signal(inst, "sU", "sR", {{1.0}});
        std::vector<double> dyn_cost = dynamic_cost_row(inst, dyn);
        dyn.id = "sD";
        inst.signals.push_back(dyn);
        inst.costs.push_back(dyn_cost);
        inst.finalize();
    }
    return inst;
}

// Binary-value voting instance (values in {-1, +1}): P(v = 1 | state) is p0
// in state 0 and p1 in state 1. p0 != p1 gives the positive-covariance case
// in which informed voting is sustained; p0 == p1 gives the uncorrelated
// case in which the uninformed profile picks the ex-ante optimum.
inline Instance make_voting_instance(double p0, double p1, double c_bar = 2.0, int n = 9) {
    if (n % 2 == 0) throw std::invalid_argument("voting instance: n must be odd");
    Instance inst;
    inst.states = {"w0", "w1"};
    inst.state_dist = {0.5, 0.5};
    inst.types = {"v-1", "v+1"};
    inst.values = {-1.0, 1.0};
    inst.v_lo = -1.0;
    inst.v_hi = 1.0;
    inst.type_dist_given_state = {{1.0 - p0, p0}, {1.0 - p1, p1}};
    inst.n_agents = n;
    Signal su;
    su.id = "sU";
    Signal sr;
    sr.id = "sR";
    for (int w = 0; w < 2; ++w) {
        for (int t = 0; t < 2; ++t) {
            if (inst.type_dist_given_state[static_cast<std::size_t>(w)][static_cast<std::size_t>(t)] <= 0.0) continue;
            su.table.push_back({0.0});
            sr.table.push_back({inst.values[static_cast<std::size_t>(t)]});
        }
    }
    inst.signals = {su, sr};
    inst.costs = {{0.0, 0.0}, {c_bar, c_bar}};
    inst.finalize();
    return inst;
}

}  // namespace elicit
