#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "elicit/belief.hpp"
#include "elicit/rng.hpp"
#include "elicit/scoring.hpp"

namespace elicit {

struct ReportOutOfBounds : std::runtime_error {
    explicit ReportOutOfBounds(const std::string& w) : std::runtime_error(w) {}
};
struct InvalidSchedule : std::runtime_error {
    explicit InvalidSchedule(const std::string& w) : std::runtime_error(w) {}
};

enum class MechanismKind { bdm, bdm_betting, majority, majority_betting, vcg_betting };

inline std::string mechanism_kind_name(MechanismKind k) {
    switch (k) {
        case MechanismKind::bdm: return "bdm";
        case MechanismKind::bdm_betting: return "bdm_betting";
        case MechanismKind::majority: return "majority";
        case MechanismKind::majority_betting: return "majority_betting";
        case MechanismKind::vcg_betting: return "vcg_betting";
    }
    return "?";
}

// The peer average in voting mechanisms divides the leave-one-out vote count
// by n as printed in the source definition; the bdm variants divide by n-1.
// The switch exists because the two normalizers are inconsistent between the
// printed formulas and we do not guess intent.
enum class VoteShareNormalizer { over_n, over_n_minus_1 };

struct MechanismConfig {
    MechanismKind kind = MechanismKind::bdm;
    double lambda = 0.0;  // scoring scale
    double delta = 0.0;   // dictator probability
    double beta = 1.0;    // Laplace scale of the VCG bias term
    double v_lo = 0.0;    // price support = value bounds
    double v_hi = 1.0;
    ScoreParams score;
    VoteShareNormalizer vote_normalizer = VoteShareNormalizer::over_n;

    bool is_betting() const { return kind != MechanismKind::bdm && kind != MechanismKind::majority; }
    bool is_voting() const {
        return kind == MechanismKind::majority || kind == MechanismKind::majority_betting;
    }
    bool is_value_report() const { return kind == MechanismKind::bdm || kind == MechanismKind::bdm_betting || kind == MechanismKind::vcg_betting; }

    void validate() const {
        if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("mechanism: delta outside [0,1]");
        if (lambda < 0.0) throw std::invalid_argument("mechanism: lambda negative");
        if (kind == MechanismKind::vcg_betting && !(beta > 0.0))
            throw std::invalid_argument("mechanism: beta must be positive");
    }
};

struct Message {
    double value_report = 0.0;  // v_hat (value mechanisms)
    int vote = 0;               // x_hat (voting mechanisms)
    Belief belief;              // b_hat over the scored statistic
};

// Explicit randomness so outcomes replay exactly.
struct MechanismDraws {
    std::vector<double> prices;  // one per agent (BDM); entry 0 doubles as the dictator price
    int dictator = -1;           // -1: none
    double bias = 0.0;           // VCG bias draw v_0
    std::optional<double> dictator_coin;  // recorded for replay/serialization

    static MechanismDraws draw(const MechanismConfig& cfg, int n, RngStream& rng) {
        MechanismDraws d;
        d.prices.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) d.prices[static_cast<std::size_t>(i)] = rng.uniform(cfg.v_lo, cfg.v_hi);
        double coin = rng.next_unit();
        d.dictator_coin = coin;
        d.dictator = (coin < cfg.delta) ? rng.uniform_int(0, n - 1) : -1;
        d.bias = (cfg.kind == MechanismKind::vcg_betting) ? rng.laplace(cfg.beta) : 0.0;
        return d;
    }
};

struct Outcome {
    std::vector<int> allocations;
    std::vector<double> transfers;
    double estimate = 0.0;
    std::optional<int> dictator;
    std::optional<double> bias_draw;
    std::vector<double> price_draws;
};

// Closed form of E[(v - p) 1(v_hat >= p)] with p ~ Uniform[v_lo, v_hi] and
// posterior mean m: the exact consumption value of a BDM report.
inline double bdm_expected_consumption_utility(double posterior_mean, double report, double v_lo, double v_hi) {
    if (report < v_lo || report > v_hi) throw ReportOutOfBounds("bdm report outside value bounds");
    double width = v_hi - v_lo;
    if (width <= 0.0) return 0.0;
    return (posterior_mean * (report - v_lo) - 0.5 * (report * report - v_lo * v_lo)) / width;
}

namespace detail {

inline void check_value_reports(const MechanismConfig& cfg, const std::vector<Message>& msgs) {
    for (const auto& m : msgs)
        if (m.value_report < cfg.v_lo || m.value_report > cfg.v_hi)
            throw ReportOutOfBounds("value report " + std::to_string(m.value_report) + " outside bounds");
}

inline double leave_one_out_mean(const std::vector<Message>& msgs, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < msgs.size(); ++j)
        if (j != i) s += msgs[j].value_report;
    return s / static_cast<double>(msgs.size() - 1);
}

inline double vote_share(const MechanismConfig& cfg, const std::vector<Message>& msgs, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < msgs.size(); ++j)
        if (j != i) s += msgs[j].vote;
    double denom = cfg.vote_normalizer == VoteShareNormalizer::over_n ? static_cast<double>(msgs.size())
                                                                      : static_cast<double>(msgs.size() - 1);
    return s * (1.0 / denom);  // matches how belief atoms are scaled
}

// Realized composite score for voting/VCG variants. q_hat is the
// belief-implied pivotality probability; `pivotal` the realized event.
// The CRPS penalty integral is evaluated directly so that statistics outside
// the integration window (possible under the unbounded VCG bias draw) score
// the windowed squared-CDF gap instead of failing.
inline double realized_score(const MechanismConfig& cfg, const Belief& belief, double stat, bool pivotal,
                             double q_hat) {
    double s = 0.0;
    if (cfg.score.use_crps) s += -crps_penalty(belief, stat, cfg.score.z_lo, cfg.score.z_hi) + cfg.score.shift;
    if (cfg.score.use_quadratic) s += quadratic_score(q_hat, pivotal);
    if (cfg.score.use_sign_crps) {
        double q = belief.mass_at_least(0.0);
        Belief ind = q >= 1.0 ? Belief::dirac(1.0) : q <= 0.0 ? Belief::dirac(0.0) : Belief::from_weighted({{0.0, 1.0 - q}, {1.0, q}});
        s += -crps_penalty(ind, stat >= 0.0 ? 1.0 : 0.0, 0.0, 1.0);
    }
    return s;
}

}  // namespace detail

// Sale at a random per-agent price; estimator = average reported value.
inline Outcome bdm_outcome(const MechanismConfig& cfg, const std::vector<Message>& msgs, const MechanismDraws& draws) {
    detail::check_value_reports(cfg, msgs);
    std::size_t n = msgs.size();
    Outcome out;
    out.allocations.resize(n);
    out.transfers.resize(n);
    out.price_draws = draws.prices;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = draws.prices[i];
        int x = msgs[i].value_report >= p ? 1 : 0;
        out.allocations[i] = x;
        out.transfers[i] = -p * x;
        sum += msgs[i].value_report;
    }
    out.estimate = sum / static_cast<double>(n);
    return out;
}

// BDM plus a scaled proper-scoring bonus on the leave-one-out average report.
inline Outcome bdm_betting_outcome(const MechanismConfig& cfg, const std::vector<Message>& msgs,
                                   const MechanismDraws& draws) {
    Outcome out = bdm_outcome(cfg, msgs, draws);
    if (cfg.lambda != 0.0) {
        for (std::size_t i = 0; i < msgs.size(); ++i) {
            double tilde_v = detail::leave_one_out_mean(msgs, i);
            out.transfers[i] += cfg.lambda * crps_score(msgs[i].belief, tilde_v, cfg.score);
        }
    }
    return out;
}

// Plain majority rule with an inclusive threshold at one half; zero transfers.
inline Outcome majority_outcome(const std::vector<Message>& msgs) {
    std::size_t n = msgs.size();
    double share = 0.0;
    for (const auto& m : msgs) share += m.vote;
    share /= static_cast<double>(n);
    int x = share >= 0.5 ? 1 : 0;
    Outcome out;
    out.allocations.assign(n, x);
    out.transfers.assign(n, 0.0);
    out.estimate = x;
    return out;
}

// Majority rule with a dictator lottery and prediction bonuses on the
// leave-one-out vote share. Votes are never bought: the vote does not enter
// the voter's own transfer.
inline Outcome majority_betting_outcome(const MechanismConfig& cfg, const std::vector<Message>& msgs,
                                        const MechanismDraws& draws) {
    std::size_t n = msgs.size();
    Outcome out;
    int x;
    if (draws.dictator >= 0) {
        x = msgs[static_cast<std::size_t>(draws.dictator)].vote;
        out.dictator = draws.dictator;
    } else {
        x = majority_outcome(msgs).allocations[0];
    }
    out.allocations.assign(n, x);
    out.transfers.assign(n, 0.0);
    out.estimate = x;
    if (cfg.lambda != 0.0) {
        int half = (static_cast<int>(n) - 1) / 2;  // odd n: the exact split count
        // built as count * (1/denominator) to match belief atoms bit-exactly
        double split_share = cfg.vote_normalizer == VoteShareNormalizer::over_n
                                 ? static_cast<double>(half) * (1.0 / static_cast<double>(n))
                                 : static_cast<double>(half) * (1.0 / static_cast<double>(n - 1));
        for (std::size_t i = 0; i < n; ++i) {
            double tilde_n = detail::vote_share(cfg, msgs, i);
            int others = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) others += msgs[j].vote;
            bool pivotal = (draws.dictator == static_cast<int>(i)) || (2 * others == static_cast<int>(n) - 1);
            double q_hat = cfg.delta / static_cast<double>(n) +
                           (1.0 - cfg.delta / static_cast<double>(n)) * msgs[i].belief.prob_at(split_share);
            out.transfers[i] += cfg.lambda * detail::realized_score(cfg, msgs[i].belief, tilde_n, pivotal, q_hat);
        }
    }
    return out;
}

// Belief-implied probability of the VCG potential-pivotality event
// {D = i} or {D = 0 and v_lo <= -n*tilde_v <= v_hi}.
inline double pivot_q_hat(const MechanismConfig& cfg, const Belief& belief, int n) {
    double nn = static_cast<double>(n);
    double p_window = 0.0;
    for (std::size_t k = 0; k < belief.size(); ++k) {
        double eff = -nn * belief.atom(k);
        if (eff >= cfg.v_lo && eff <= cfg.v_hi) p_window += belief.prob(k);
    }
    return cfg.delta / nn + (1.0 - cfg.delta) * p_window;
}

// Binary-alternative VCG with a Laplace bias term, pivot transfers, a
// dictator lottery that runs BDM for the dictator, and prediction bonuses.
// Alternative-0 values are normalized to zero, so report i enters as
// v_hat_{i1} = v_hat_i and the bias enters alternative 1 only. Ties in the
// argmax go to alternative 1.
inline Outcome vcg_betting_outcome(const MechanismConfig& cfg, const std::vector<Message>& msgs,
                                   const MechanismDraws& draws) {
    detail::check_value_reports(cfg, msgs);
    std::size_t n = msgs.size();
    Outcome out;
    out.allocations.resize(n);
    out.transfers.assign(n, 0.0);
    out.bias_draw = draws.bias;
    out.price_draws = draws.prices;

    auto scored_stat = [&](std::size_t i) {
        double s = draws.bias;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) s += msgs[j].value_report;
        return s / static_cast<double>(n);
    };
    auto add_score = [&](std::size_t i) {
        if (cfg.lambda == 0.0) return;
        double tilde_v = scored_stat(i);
        bool pivotal;
        double q_hat;
        if (draws.dictator == static_cast<int>(i)) {
            pivotal = true;  // the dictator's BDM price always lies in [v_lo, v_hi]
            q_hat = pivot_q_hat(cfg, msgs[i].belief, static_cast<int>(n));
        } else {
            double eff_price = -static_cast<double>(n) * tilde_v;
            pivotal = draws.dictator < 0 && eff_price >= cfg.v_lo && eff_price <= cfg.v_hi;
            q_hat = pivot_q_hat(cfg, msgs[i].belief, static_cast<int>(n));
        }
        out.transfers[i] += cfg.lambda * detail::realized_score(cfg, msgs[i].belief, tilde_v, pivotal, q_hat);
    };

    if (draws.dictator >= 0) {
        auto d = static_cast<std::size_t>(draws.dictator);
        out.dictator = draws.dictator;
        double p = draws.prices[d];
        int x = msgs[d].value_report >= p ? 1 : 0;
        for (std::size_t i = 0; i < n; ++i) out.allocations[i] = x;
        out.transfers[d] -= p * x;
        out.estimate = x;
        for (std::size_t i = 0; i < n; ++i) add_score(i);
        return out;
    }

    double total = draws.bias;
    for (const auto& m : msgs) total += m.value_report;
    int x = total >= 0.0 ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) out.allocations[i] = x;
    out.estimate = x;
    for (std::size_t i = 0; i < n; ++i) {
        double others = draws.bias;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others += msgs[j].value_report;
        double chosen_value = x == 1 ? others : 0.0;
        double best_without_i = std::max(others, 0.0);
        out.transfers[i] += chosen_value - best_without_i;
        add_score(i);
    }
    return out;
}

inline Outcome mechanism_outcome(const MechanismConfig& cfg, const std::vector<Message>& msgs,
                                 const MechanismDraws& draws) {
    switch (cfg.kind) {
        case MechanismKind::bdm: return bdm_outcome(cfg, msgs, draws);
        case MechanismKind::bdm_betting: return bdm_betting_outcome(cfg, msgs, draws);
        case MechanismKind::majority: return majority_outcome(msgs);
        case MechanismKind::majority_betting: return majority_betting_outcome(cfg, msgs, draws);
        case MechanismKind::vcg_betting: return vcg_betting_outcome(cfg, msgs, draws);
    }
    throw std::logic_error("unreachable");
}

// Named parameter schedules: lambda_n = lambda0 * n^a, delta_n = n^-d,
// beta_n = n^b. The growth constraints (lambda_n -> inf, delta_n -> 0,
// beta_n -> inf, beta_n/n -> 0) translate to a > 0, d > 0, 0 < b < 1.
struct ScheduleProfile {
    double lambda0 = 1.0;
    double lambda_exponent = 7.0;
    double delta_exponent = 0.5;
    double beta_exponent = 0.5;
};

inline void validate_schedule(const ScheduleProfile& p) {
    if (!(p.lambda0 > 0.0)) throw InvalidSchedule("lambda0 must be positive");
    if (!(p.lambda_exponent > 0.0)) throw InvalidSchedule("lambda_n must grow");
    if (!(p.delta_exponent > 0.0)) throw InvalidSchedule("delta_n must vanish");
    if (!(p.beta_exponent > 0.0)) throw InvalidSchedule("beta_n must grow");
    if (!(p.beta_exponent < 1.0)) throw InvalidSchedule("beta_n/n must vanish");
}

inline MechanismConfig schedule(int n, const ScheduleProfile& profile, MechanismConfig base) {
    if (n < 1) throw InvalidSchedule("n must be positive");
    validate_schedule(profile);
    double nn = static_cast<double>(n);
    base.lambda = profile.lambda0 * std::pow(nn, profile.lambda_exponent);
    base.delta = std::pow(nn, -profile.delta_exponent);
    base.beta = std::pow(nn, profile.beta_exponent);
    return base;
}

}  // namespace elicit
