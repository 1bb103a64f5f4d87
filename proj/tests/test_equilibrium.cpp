#include <catch2/catch_amalgamated.hpp>

#include "elicit/equilibrium.hpp"
#include "elicit/generators.hpp"

using namespace elicit;

namespace {

MechanismConfig betting_config(const Instance& inst, double lambda) {
    MechanismConfig cfg;
    cfg.kind = MechanismKind::bdm_betting;
    cfg.lambda = lambda;
    cfg.v_lo = inst.v_lo;
    cfg.v_hi = inst.v_hi;
    cfg.score = ScoreParams::crps(inst.v_lo, inst.v_hi, inst.v_hi - inst.v_lo);
    return cfg;
}

MechanismConfig voting_config(const Instance& inst, double lambda, double delta) {
    MechanismConfig cfg;
    cfg.kind = MechanismKind::majority_betting;
    cfg.lambda = lambda;
    cfg.delta = delta;
    cfg.v_lo = inst.v_lo;
    cfg.v_hi = inst.v_hi;
    cfg.score = ScoreParams::crps(0.0, 1.0, 2.0);
    cfg.score.use_quadratic = true;
    return cfg;
}

}  // namespace

TEST_CASE("expected utility of the uninformative-signal profile under plain BDM") {
    Instance inst = make_prop1_instance(2.0, 5);
    MechanismConfig cfg;
    cfg.kind = MechanismKind::bdm;
    cfg.v_lo = 0.0;
    cfg.v_hi = 1.0;
    EvalContext ctx(inst, cfg);
    // report the prior mean regardless of the realization: consumption
    // utility collapses (by linearity in the posterior mean) to the closed
    // form at (prior mean, prior mean) = (0.5, 0.5)
    Strategy prior_report = Strategy::pure("sF", ReportRule::explicit_map);
    prior_report.explicit_reports["sF"] = {{{0.0}, 0.5}, {{1.0}, 0.5}};
    Profile prof = Profile::symmetric(5, prior_report);
    Evaluator ev(ctx, prof);
    double consumption_only = ev.utility(0);
    double want = 0.25 * bdm_expected_consumption_utility(0.0, 0.5, 0.0, 1.0) +
                  0.75 * bdm_expected_consumption_utility(2.0 / 3.0, 0.5, 0.0, 1.0);
    CHECK_THAT(consumption_only, Catch::Matchers::WithinAbs(want, 1e-14));
    CHECK_THAT(consumption_only,
               Catch::Matchers::WithinAbs(bdm_expected_consumption_utility(0.5, 0.5, 0.0, 1.0), 1e-14));
}

TEST_CASE("infinite-cost signals poison a mixture") {
    Instance inst = make_prop1_instance(2.0, 5);
    inst.costs[1] = {kInf, kInf};
    MechanismConfig cfg;
    cfg.kind = MechanismKind::bdm;
    cfg.v_lo = 0.0;
    cfg.v_hi = 1.0;
    EvalContext ctx(inst, cfg);
    Strategy mix;
    mix.mixture = {{"sF", 0.5}, {"sR", 0.5}};
    Profile prof = Profile::symmetric(5, mix);
    CHECK(expected_utility(ctx, prof, 0) == -kInf);
}

TEST_CASE("signal costs enter utilities") {
    Instance inst = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    EvalContext ctx(inst, betting_config(inst, 200.0));
    Profile informed = Profile::symmetric(9, Strategy::pure("sR"));
    Profile free_ride = informed;
    free_ride.agents[0] = Strategy::pure("sU");
    Evaluator ev_informed(ctx, informed);
    Evaluator ev_free(ctx, free_ride);
    // cost difference shows up directly; the informed agent pays 2 more
    double diff = ev_free.candidate_utility(0, "sU", Strategy::pure("sU")).cost -
                  ev_informed.candidate_utility(0, "sR", Strategy::pure("sR")).cost;
    CHECK_THAT(diff, Catch::Matchers::WithinAbs(-2.0, 1e-15));
}

TEST_CASE("best responses and deviation gains") {
    Instance inst = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    EvalContext ctx(inst, betting_config(inst, 200.0));
    // the uninformed profile invites deviation to the revealing signal:
    // predicting the ex-post average pays more than the cost
    Profile uninformed = Profile::symmetric(9, Strategy::pure("sU"));
    Evaluator ev(ctx, uninformed);
    auto br = ev.best_response(0);
    CHECK(br.gain > 1.0);
    CHECK(br.strategy.mixture[0].first == "sR");
    // an informed profile is its own best response
    Profile informed = Profile::symmetric(9, Strategy::pure("sR"));
    Evaluator ev2(ctx, informed);
    CHECK_THAT(ev2.best_response(0).gain, Catch::Matchers::WithinAbs(0.0, 1e-12));

    // uncorrelated values: the revealing signal brings no scoring edge
    Instance beta0 = make_sec42_instance(0.0, 2.0, 9, FreeSignalKind::constant);
    EvalContext ctx0(beta0, betting_config(beta0, 200.0));
    Profile uninf0 = Profile::symmetric(9, Strategy::pure("sU"));
    Evaluator ev0(ctx0, uninf0);
    auto br0 = ev0.best_response(0);
    CHECK(br0.gain <= 1e-12);
}

TEST_CASE("deviation gain is never negative") {
    Instance inst = make_sec42_instance(1.0, 2.0, 5, FreeSignalKind::sign);
    RngStream rng(404, 2);
    for (double lambda : {0.0, 3.0, 50.0}) {
        EvalContext ctx(inst, betting_config(inst, lambda));
        for (int t = 0; t < 10; ++t) {
            double q = rng.next_unit();
            Strategy mix;
            mix.mixture = {{"sR", q}, {"sU", 1.0 - q}};
            Profile prof = Profile::symmetric(5, mix);
            Evaluator ev(ctx, prof);
            CHECK(ev.best_response(0).gain >= -1e-12);
        }
    }
}

TEST_CASE("verify_bne on the correlated instance") {
    Instance inst = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    EvalContext ctx(inst, betting_config(inst, 200.0));
    auto informed = verify_bne(ctx, Profile::symmetric(9, Strategy::pure("sR")), 1e-9);
    CHECK(informed.passed);
    CHECK(informed.epsilon <= 1e-9);
    CHECK(informed.estimator_limit[0] == 0.0);
    CHECK(informed.estimator_limit[1] == 1.0);
    CHECK(informed.phi1 == 0.0);
    // estimator distribution sums to one per state
    for (const auto& d : informed.estimator_dist)
        CHECK_THAT(d.total_mass(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    // reports equal posterior means at every reachable realization
    auto uninformed = verify_bne(ctx, Profile::symmetric(9, Strategy::pure("sU")), 1e-9);
    CHECK_FALSE(uninformed.passed);
    CHECK(uninformed.epsilon > 0.0);

    // at small stakes the uninformed profile survives
    EvalContext small(inst, betting_config(inst, 2.0));
    auto uninformed_small = verify_bne(small, Profile::symmetric(9, Strategy::pure("sU")), 1e-9);
    CHECK(uninformed_small.passed);
}

TEST_CASE("remark-style initial information removes the uninformed equilibrium") {
    Instance inst = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign, /*with_dynamic=*/true);
    ClosureOptions opts;
    opts.dynamic_signals = true;
    EvalContext ctx(inst, betting_config(inst, 200.0), opts);
    auto uninformed = verify_bne(ctx, Profile::symmetric(9, Strategy::pure("sU")), 1e-9);
    CHECK_FALSE(uninformed.passed);
    auto informed = verify_bne(ctx, Profile::symmetric(9, Strategy::pure("sD")), 1e-9);
    CHECK(informed.passed);
}

TEST_CASE("symmetric search: two-signal instance") {
    Instance inst = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    EvalContext ctx(inst, betting_config(inst, 200.0));
    auto res = search_symmetric_equilibria(ctx, 1e-9, 16);
    bool informed_found = false, uninformed_rejected = false;
    for (const auto& c : res.candidates) {
        if (c.signal_id == "sR") informed_found = c.report.passed;
        if (c.signal_id == "sU") uninformed_rejected = !c.report.passed;
    }
    CHECK(informed_found);
    CHECK(uninformed_rejected);
}

TEST_CASE("symmetric search reports cycles when no pure profile survives") {
    Instance inst = make_prop1_instance(2.0, 9);
    MechanismConfig cfg = betting_config(inst, 400.0);
    ClosureOptions opts;
    opts.dynamic_signals = true;
    EvalContext ctx(inst, cfg, opts);
    auto res = search_symmetric_equilibria(ctx, 1e-9, 16);
    for (const auto& c : res.candidates) CHECK_FALSE(c.report.passed);
    CHECK_FALSE(res.cycles.empty());
}

TEST_CASE("single-state instance: posterior-mean reporting is a BDM equilibrium") {
    // zero-cost revealing signal, single state: reports are dominant
    Instance inst;
    inst.states = {"w"};
    inst.state_dist = {1.0};
    inst.types = {"lo", "hi"};
    inst.values = {0.2, 0.8};
    inst.v_lo = 0.0;
    inst.v_hi = 1.0;
    inst.type_dist_given_state = {{0.5, 0.5}};
    inst.n_agents = 4;
    Signal sr;
    sr.id = "sR";
    sr.table = {{0.2}, {0.8}};
    Signal su;
    su.id = "sU";
    su.table = {{0.0}, {0.0}};
    inst.signals = {sr, su};
    inst.costs = {{0.0, 0.0}, {0.0, 0.0}};
    inst.finalize();
    MechanismConfig cfg;
    cfg.kind = MechanismKind::bdm;
    cfg.v_lo = 0.0;
    cfg.v_hi = 1.0;
    EvalContext ctx(inst, cfg);
    // the fully informed profile is an equilibrium outright
    CHECK(verify_bne(ctx, Profile::symmetric(4, Strategy::pure("sR")), 1e-9).passed);
    // and posterior-mean reporting is report-stage optimal for any signal:
    // a dense report grid never beats the posterior mean
    for (const char* sig : {"sR", "sU"}) {
        Profile prof = Profile::symmetric(4, Strategy::pure(sig));
        Evaluator ev(ctx, prof);
        double base = ev.candidate_utility(0, sig, Strategy::pure(sig)).total();
        for (int g = 0; g <= 100; ++g) {
            Strategy fixed = Strategy::pure(sig, ReportRule::explicit_map);
            for (const auto& [real, prob] : reachable_realizations(inst, inst.signal(sig))) {
                (void)prob;
                fixed.explicit_reports[sig][real] = g / 100.0;
            }
            CHECK(ev.candidate_utility(0, sig, fixed).total() <= base + 1e-12);
        }
    }
}

TEST_CASE("exact and Monte Carlo evaluation agree") {
    Instance inst = make_sec42_instance(1.0, 2.0, 2, FreeSignalKind::sign);
    EvalContext ctx(inst, betting_config(inst, 3.0));
    RngStream rng(606, 3);
    for (int t = 0; t < 20; ++t) {
        double q = rng.next_unit();
        Strategy mix;
        mix.mixture = {{"sR", q}, {"sU", 1.0 - q}};
        Profile prof = Profile::symmetric(2, mix);
        double exact = expected_utility(ctx, prof, 0);
        auto mc = mc_expected_utility(ctx, prof, 0, 1'000'000, 1000 + static_cast<std::uint64_t>(t));
        CHECK(std::fabs(mc.mean - exact) <= 4.0 * mc.std_error);
    }
}

TEST_CASE("exact and Monte Carlo evaluation agree for voting with a dictator") {
    // n = 11 exercises the vote-share atom arithmetic where k/n and
    // k * (1/n) round differently
    for (int n : {3, 11}) {
        Instance inst = make_voting_instance(0.2, 0.9, 2.0, n);
        MechanismConfig cfg = voting_config(inst, 5.0, 0.3);
        EvalContext ctx(inst, cfg);
        RngStream rng(707, static_cast<std::uint64_t>(n));
        for (int t = 0; t < 3; ++t) {
            double q = rng.next_unit();
            Strategy mix;
            mix.mixture = {{"sR", q}, {"sU", 1.0 - q}};
            mix.rule = ReportRule::truthful_vote;
            Profile prof = Profile::symmetric(n, mix);
            double exact = expected_utility(ctx, prof, 0);
            auto mc = mc_expected_utility(ctx, prof, 0, 400'000, 2000 + static_cast<std::uint64_t>(t));
            CHECK(std::fabs(mc.mean - exact) <= 4.0 * mc.std_error);
        }
    }
}

TEST_CASE("pivot statistics") {
    // state-independent votes: conditioning on pivotality is uninformative
    Instance flat = make_voting_instance(0.7, 0.7, 2.0, 3);
    EvalContext ctx(flat, voting_config(flat, 10.0, 1.0));
    Profile informed = Profile::symmetric(3, Strategy::pure("sR", ReportRule::truthful_vote));
    auto [q, gap] = pivot_stats(ctx, informed, 0);
    CHECK(q >= 1.0 / 3.0);  // dictatorship alone guarantees delta/n
    CHECK_THAT(gap, Catch::Matchers::WithinAbs(0.0, 1e-12));

    // correlated instance, informed peers, uninformed agent 0: pivotality is
    // informative about the state and hence about the agent's own value.
    // Oracle: direct enumeration of the n=3 vote-count split event.
    Instance corr = make_voting_instance(0.2, 0.9, 2.0, 3);
    EvalContext ctx2(corr, voting_config(corr, 10.0, 0.5));
    Profile mixed_info = Profile::symmetric(3, Strategy::pure("sR", ReportRule::truthful_vote));
    mixed_info.agents[0] = Strategy::pure("sU", ReportRule::exante_vote);
    auto [q2, gap2] = pivot_stats(ctx2, mixed_info, 0);
    auto split_prob = [](double p) { return 2.0 * p * (1.0 - p); };  // one of two peers votes 1
    double qs0 = split_prob(0.2), qs1 = split_prob(0.9);
    double delta = 0.5;
    int n = 3;
    double q0 = delta / n + (1 - delta / n) * qs0;
    double q1 = delta / n + (1 - delta / n) * qs1;
    double q_oracle = 0.5 * q0 + 0.5 * q1;
    CHECK_THAT(q2, Catch::Matchers::WithinAbs(q_oracle, 1e-12));
    // E[v | pivotal] reweights the states by pivotality
    double ev0 = corr.value_mean_given_state(0), ev1 = corr.value_mean_given_state(1);
    double gap_oracle = std::fabs((0.5 * q0 * ev0 + 0.5 * q1 * ev1) / (0.5 * q0 + 0.5 * q1) - corr.value_mean());
    CHECK_THAT(gap2, Catch::Matchers::WithinAbs(gap_oracle, 1e-12));
    CHECK(gap2 > 0.0);
}

TEST_CASE("truthfulness gap") {
    Instance inst = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    EvalContext ctx(inst, betting_config(inst, 200.0));
    auto [phi1, phi2] = truthfulness_report(ctx, Profile::symmetric(9, Strategy::pure("sR")));
    CHECK(phi1 == 0.0);
    CHECK(phi2 == 0.0);
    // reporting the prior mean despite an informative signal: the gap is the
    // largest distance between the prior mean and a posterior mean
    Strategy stubborn = Strategy::pure("sR", ReportRule::explicit_map);
    double prior = inst.value_mean();
    double worst = 0.0;
    for (const auto& [real, prob] : reachable_realizations(inst, inst.signal("sR"))) {
        (void)prob;
        stubborn.explicit_reports["sR"][real] = prior;
        worst = std::max(worst, std::fabs(posterior(inst, inst.signal("sR"), real).value_mean() - prior));
    }
    auto [phi1b, phi2b] = truthfulness_report(ctx, Profile::symmetric(9, stubborn));
    CHECK_THAT(phi1b, Catch::Matchers::WithinAbs(worst, 1e-15));
    CHECK(phi2b == 0.0);

    // a pivotality-distorted vote shows up as a positive voting gap
    Instance corr = make_voting_instance(0.2, 0.9, 2.0, 3);
    EvalContext ctx2(corr, voting_config(corr, 10.0, 0.5));
    Strategy contrarian = Strategy::pure("sR", ReportRule::explicit_map);
    for (const auto& [real, prob] : reachable_realizations(corr, corr.signal("sR"))) {
        (void)prob;
        double mean = posterior(corr, corr.signal("sR"), real).value_mean();
        contrarian.explicit_reports["sR"][real] = mean >= 0.0 ? 0.0 : 1.0;  // anti-truthful
    }
    auto [phi1c, phi2c] = truthfulness_report(ctx2, Profile::symmetric(3, contrarian));
    CHECK(phi1c > 0.0);
    CHECK(phi2c == 0.0);
}

TEST_CASE("two-signal mixture solver finds the indifference point") {
    Instance plain = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::constant);
    EvalContext ctx(plain, betting_config(plain, 128.0));
    auto sol = solve_two_signal_mixture(ctx, "sR", "sU");
    REQUIRE(sol.has_value());
    CHECK(sol->q > 0.0);
    CHECK(sol->q < 1.0);
    CHECK(sol->residual <= 1e-9);
    auto rep = verify_bne(ctx, sol->profile, 1e-7);
    CHECK(rep.passed);
    // no interior point when stakes are too small for the informed side
    EvalContext tiny(plain, betting_config(plain, 0.5));
    CHECK_FALSE(solve_two_signal_mixture(tiny, "sR", "sU").has_value());
}
