#include <catch2/catch_amalgamated.hpp>

#include "elicit/analysis.hpp"
#include "elicit/generators.hpp"

using namespace elicit;

TEST_CASE("expected loss per kind") {
    Belief bern = Belief::from_weighted({{0.0, 0.5}, {1.0, 0.5}});
    LossFunction sq = LossFunction::square(0.0, 1.0);
    CHECK_THAT(expected_loss(sq, 0.5, bern), Catch::Matchers::WithinAbs(0.25, 1e-15));

    LossFunction qty = LossFunction::quantity(0.75);
    double p_hit = bern.mass_at_least(0.75);
    CHECK_THAT(expected_loss(qty, p_hit, bern), Catch::Matchers::WithinAbs(p_hit * (1.0 - p_hit), 1e-15));

    LossFunction rev = LossFunction::revenue(0.0, 2.0);
    Belief dirac = Belief::dirac(1.3);
    CHECK_THAT(expected_loss(rev, 1.3, dirac), Catch::Matchers::WithinAbs(-1.3, 1e-15));
    CHECK_THAT(argmin_expected_loss(rev, dirac), Catch::Matchers::WithinAbs(1.3, 1e-15));

    CHECK_THROWS_AS(expected_loss(sq, 9.0, bern), EstimateOutOfSpace);
}

TEST_CASE("benchmarks on the bundled instances") {
    // state-independent demand: both benchmarks equal the Bernoulli variance
    Instance p1 = make_prop1_instance(2.0, 9);
    auto b = benchmarks(p1, LossFunction::square(0.0, 1.0));
    CHECK_THAT(b.ex_ante, Catch::Matchers::WithinAbs(0.25, 1e-15));
    CHECK_THAT(b.ex_post, Catch::Matchers::WithinAbs(0.25, 1e-15));

    // brute-force oracle over the four support points of the correlated case
    Instance b1 = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    auto bb = benchmarks(b1, LossFunction::square(-1.0, 2.0));
    double mean_all = 0.0;
    std::vector<std::pair<double, double>> pts = {{-1.0, 0.25}, {1.0, 0.25}, {0.0, 0.25}, {2.0, 0.25}};
    for (auto& [v, p] : pts) mean_all += p * v;
    double var_all = 0.0;
    for (auto& [v, p] : pts) var_all += p * (v - mean_all) * (v - mean_all);
    double var_w0 = 1.0, var_w1 = 1.0;  // values {-1,1} and {0,2}, each 50/50
    CHECK_THAT(bb.ex_ante, Catch::Matchers::WithinAbs(var_all, 1e-12));
    CHECK_THAT(bb.ex_ante, Catch::Matchers::WithinAbs(1.25, 1e-12));
    CHECK_THAT(bb.ex_post, Catch::Matchers::WithinAbs(0.5 * (var_w0 + var_w1), 1e-12));

    // single state: the benchmarks coincide
    auto [ti, tp] = make_mimicry_pair(0.0, 1.0, 2.5);
    auto bt = benchmarks(ti, LossFunction::quantity(0.75));
    CHECK(bt.ex_ante == bt.ex_post);
}

TEST_CASE("ex-post never exceeds ex-ante") {
    std::vector<Instance> instances = {make_prop1_instance(2.0, 9), make_sec42_instance(1.0, 2.0, 9),
                                       make_sec42_instance(0.0, 2.0, 9, FreeSignalKind::constant),
                                       make_voting_instance(0.2, 0.9), make_voting_instance(0.7, 0.7)};
    for (const auto& inst : instances) {
        std::vector<LossFunction> losses = {LossFunction::square(inst.v_lo, inst.v_hi),
                                            LossFunction::quantity(0.5 * (inst.v_lo + inst.v_hi)),
                                            LossFunction::utilitarian()};
        if (inst.v_lo >= 0.0) losses.push_back(LossFunction::revenue(inst.v_lo, inst.v_hi));
        for (const auto& loss : losses) {
            auto b = benchmarks(inst, loss);
            CHECK(b.ex_post <= b.ex_ante + 1e-12);
        }
    }
}

TEST_CASE("square-loss argmins agree with grid search") {
    RngStream rng(808, 5);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::pair<double, double>> mass;
        int k = rng.uniform_int(2, 5);
        for (int i = 0; i < k; ++i) mass.emplace_back(rng.next_unit(), rng.next_unit() + 0.01);
        Belief demand = Belief::from_weighted(mass, true);
        LossFunction sq = LossFunction::square(0.0, 1.0);
        double closed = argmin_expected_loss(sq, demand);
        CHECK_THAT(closed, Catch::Matchers::WithinAbs(demand.mean(), 1e-12));
        double best = kInf, arg = 0.0;
        for (int g = 0; g <= 2000; ++g) {
            double e = g / 2000.0;
            double v = expected_loss(sq, e, demand);
            if (v < best) {
                best = v;
                arg = e;
            }
        }
        CHECK_THAT(closed, Catch::Matchers::WithinAbs(arg, 1e-3));
        CHECK(expected_loss(sq, closed, demand) <= best + 1e-9);
    }
}

TEST_CASE("square-like classification") {
    LossFunction sq = LossFunction::square(0.0, 1.0);
    CHECK_FALSE(is_square_like(sq, 0.0, 1.0).not_square_like);

    LossFunction qty = LossFunction::quantity(0.75);
    auto r = is_square_like(qty, 0.0, 1.0);
    REQUIRE(r.not_square_like);
    REQUIRE(r.witness.has_value());
    // witness argmin sets recomputed and confirmed disjoint
    auto [a, bb] = *r.witness;
    Belief two = Belief::from_weighted({{a, 0.5}, {bb, 0.5}});
    Belief mid = Belief::dirac(0.5 * (a + bb));
    auto set_two = argmin_set(qty, two);
    auto set_mid = argmin_set(qty, mid);
    for (double x : set_two)
        for (double y : set_mid) CHECK(std::fabs(x - y) > 1e-9);

    LossFunction rev = LossFunction::revenue(1.0, 2.0);
    CHECK(is_square_like(rev, 1.0, 2.0).not_square_like);
}

TEST_CASE("auxiliary instance raises non-predictive costs to infinity") {
    Instance b1 = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    Instance aux = auxiliary_instance(b1);
    CHECK(aux.costs[0][0] == kInf);                      // sU less predictive than the combination
    CHECK(aux.costs[1] == b1.costs[1]);                  // sR unchanged
    Instance b0 = make_sec42_instance(0.0, 2.0, 9, FreeSignalKind::constant);
    Instance aux0 = auxiliary_instance(b0);
    CHECK(aux0.costs == b0.costs);                       // constant target: all signals equal
    Instance aux2 = auxiliary_instance(aux);
    CHECK(aux2.costs == aux.costs);                      // idempotent

    // an instance whose only finite-cost signal is revealing is unchanged
    Instance only_r = b1;
    only_r.costs[0] = std::vector<double>(b1.types.size(), kInf);
    Instance aux_r = auxiliary_instance(only_r);
    CHECK(aux_r.costs == only_r.costs);
}

TEST_CASE("two-instance construction") {
    auto [I, Ip] = make_mimicry_pair(0.0, 1.0, 2.5);
    CHECK(validate_instance(I).ok());
    CHECK(validate_instance(Ip).ok());
    CHECK(I.value_distribution().prob_at(0.0) == 0.5);
    CHECK(I.value_distribution().prob_at(1.0) == 0.5);
    CHECK(Ip.value_distribution().prob_at(0.5) == 1.0);
    CHECK_THROWS_AS(make_mimicry_pair(0.0, 1.0, 2.0), InvalidCost);
}

TEST_CASE("mimic profile replays the message distribution exactly") {
    auto [I, Ip] = make_mimicry_pair(0.0, 1.0, 2.5, 3);
    MechanismConfig cfg;
    cfg.kind = MechanismKind::bdm;
    cfg.v_lo = 0.0;
    cfg.v_hi = 1.0;
    EvalContext ctx(I, cfg);
    Profile eq = Profile::symmetric(3, Strategy::pure("sU"));
    REQUIRE(verify_bne(ctx, eq, 1e-9).passed);
    auto mim = mimic_profile(I, Ip, eq);
    CHECK(mim.message_tv == 0.0);
    EvalContext ctxp(Ip, cfg);
    auto repP = verify_bne(ctxp, mim.profile_prime, 1e-9);
    CHECK(repP.passed);
    // identical estimate distributions, so one instance must miss its
    // ex-ante benchmark under any not-square-like loss
    LossFunction qty = LossFunction::quantity(0.75);
    auto bI = benchmarks(I, qty);
    auto bP = benchmarks(Ip, qty);
    EquilibriumReport repI = verify_bne(ctx, eq, 1e-9);
    double lI = expected_loss_of_estimator(I, qty, repI.estimator_dist);
    double lP = expected_loss_of_estimator(Ip, qty, repP.estimator_dist);
    CHECK(std::max(lI - bI.ex_ante, lP - bP.ex_ante) > 0.0);

    // a profile that acquires the revealing signal is rejected loudly
    Profile informed = Profile::symmetric(3, Strategy::pure("sR"));
    CHECK_THROWS_AS(mimic_profile(I, Ip, informed), RevealingSignalUsed);
}

TEST_CASE("laplace sandwich") {
    auto c = laplace_sandwich(0.0, 1.0, 10.0);
    CHECK(c.pass);
    CHECK(c.lower <= c.value);
    CHECK(c.value <= c.upper);
    auto grid = laplace_sandwich_grid(20, 20, 5);
    CHECK(grid.checked == 2000);
    CHECK(grid.failures == 0);
    CHECK(grid.worst_slack >= -1e-15);
    CHECK_THROWS_AS(laplace_sandwich(0.0, 5.0, 1.0), std::invalid_argument);
}

TEST_CASE("bound checks hold on verified equilibria") {
    Instance b1 = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    MechanismConfig cfg;
    cfg.kind = MechanismKind::bdm_betting;
    cfg.lambda = 200.0;
    cfg.v_lo = -1.0;
    cfg.v_hi = 2.0;
    cfg.score = ScoreParams::crps(-1.0, 2.0, 3.0);
    EvalContext ctx(b1, cfg);
    Profile informed = Profile::symmetric(9, Strategy::pure("sR"));
    REQUIRE(verify_bne(ctx, informed, 1e-9).passed);
    auto rep = bound_checks(ctx, informed, 0.0);
    CHECK(rep.all_pass());
    // the predictiveness gap holds per finite-cost signal even off equilibrium
    Profile uninformed = Profile::symmetric(9, Strategy::pure("sU"));
    auto rep2 = bound_checks(ctx, uninformed, 0.0);
    for (const auto& c : rep2.checks)
        if (c.name.rfind("predictiveness_gap", 0) == 0) CHECK(c.pass);

    // proof cost constant: combining either base signal with the revealing
    // one costs at most the revealing signal's price here
    CHECK_THAT(proof_cost_bound(ctx), Catch::Matchers::WithinAbs(2.0, 1e-15));
}

TEST_CASE("voting bound checks include the pivotal-conditioning claim") {
    Instance c1 = make_voting_instance(0.2, 0.9, 2.0, 9);
    MechanismConfig cfg;
    cfg.kind = MechanismKind::majority_betting;
    cfg.v_lo = -1.0;
    cfg.v_hi = 1.0;
    cfg.score = ScoreParams::crps(0.0, 1.0, 2.0);
    cfg.score.use_quadratic = true;
    cfg = schedule(9, ScheduleProfile{}, cfg);
    EvalContext ctx(c1, cfg);
    Profile informed = Profile::symmetric(9, Strategy::pure("sR", ReportRule::truthful_vote));
    auto rep = bound_checks(ctx, informed, 0.0);
    bool saw_t3 = false;
    for (const auto& c : rep.checks) {
        if (c.name.rfind("pivotal_conditioning", 0) == 0) {
            saw_t3 = true;
            CHECK(c.pass);
        }
    }
    CHECK(saw_t3);
    CHECK(rep.all_pass());
}

TEST_CASE("covariance sweep decays like an inverse square root") {
    Instance plain = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::constant);
    MechanismConfig cfg;
    cfg.kind = MechanismKind::bdm_betting;
    cfg.v_lo = -1.0;
    cfg.v_hi = 2.0;
    cfg.score = ScoreParams::crps(-1.0, 2.0, 3.0);
    auto res = cx4_lambda_sweep(plain, cfg, {64.0, 256.0, 1024.0, 4096.0}, "sR", "sU", 1e-6);
    REQUIRE(res.points.size() == 4);
    for (const auto& pt : res.points) {
        CHECK(pt.verified);
        CHECK(pt.cov_abs > 0.0);
        CHECK(pt.cx4_pass);
    }
    CHECK(res.slope <= -0.4);
}
