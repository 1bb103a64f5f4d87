#include <catch2/catch_amalgamated.hpp>

#include "elicit/generators.hpp"
#include "elicit/scoring.hpp"

using namespace elicit;

namespace {

// Independent oracle: Riemann-midpoint integration of the CRPS penalty with
// a hand-rolled CDF, kept away from the closed-form segment code.
double crps_grid_oracle(const std::vector<double>& atoms, const std::vector<double>& probs, double x, double lo,
                        double hi, int grid = 1'000'000) {
    double total = 0.0;
    double h = (hi - lo) / grid;
    for (int g = 0; g < grid; ++g) {
        double z = lo + (g + 0.5) * h;
        double f = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (atoms[i] <= z) f += probs[i];
        double ind = x <= z ? 1.0 : 0.0;
        total += (f - ind) * (f - ind) * h;
    }
    return -total;
}

}  // namespace

TEST_CASE("crps closed form on pinned cases") {
    ScoreParams unit = ScoreParams::crps(0.0, 1.0);
    CHECK(crps_score(Belief::dirac(0.25), 0.25, unit) == 0.0);
    // uniform on {0,1}, realization 1: integrate (0.5 - 0)^2 over [0,1)
    Belief half = Belief::from_weighted({{0.0, 0.5}, {1.0, 0.5}});
    CHECK_THAT(crps_score(half, 1.0, unit), Catch::Matchers::WithinAbs(-0.25, 1e-15));
    CHECK_THAT(crps_grid_oracle({0.0, 1.0}, {0.5, 0.5}, 1.0, 0.0, 1.0),
               Catch::Matchers::WithinAbs(-0.25, 1e-6));
    CHECK_THAT(crps_score(Belief::dirac(0.0), 1.0, unit), Catch::Matchers::WithinAbs(-1.0, 1e-15));
    CHECK_THROWS_AS(crps_score(half, 2.0, unit), RealizationOutOfDomain);
}

TEST_CASE("crps matches grid integration on random pairs") {
    // Atoms and realizations snapped to multiples of 5/4096 over [-2,3] and a
    // grid whose cells align with them: the midpoint rule is then exact for
    // the piecewise-constant integrand, so agreement is tight.
    RngStream rng(2024, 1);
    const double lo = -2.0, hi = 3.0;
    const double step = (hi - lo) / 4096.0;
    const int grid = 4096 * 16;
    ScoreParams p = ScoreParams::crps(lo, hi);
    for (int t = 0; t < 100; ++t) {
        int k = rng.uniform_int(1, 6);
        std::vector<std::pair<double, double>> mass;
        for (int i = 0; i < k; ++i)
            mass.emplace_back(lo + step * rng.uniform_int(0, 4096), rng.next_unit() + 0.01);
        Belief b = Belief::from_weighted(mass, true);
        double x = lo + step * rng.uniform_int(0, 4096);
        double oracle = crps_grid_oracle(b.atoms(), b.probs(), x, lo, hi, grid);
        CHECK_THAT(crps_score(b, x, p), Catch::Matchers::WithinAbs(oracle, 1e-8));
    }
}

TEST_CASE("quadratic score formula") {
    CHECK(quadratic_score(1.0, true) == 1.0);
    CHECK(quadratic_score(0.5, true) == 0.5);
    CHECK(quadratic_score(0.5, false) == 0.5);
    CHECK_THAT(quadratic_score(0.3, true), Catch::Matchers::WithinAbs(0.02, 1e-15));
}

TEST_CASE("expected scores and truthfulness of the maximizer") {
    ScoreParams unit = ScoreParams::crps(0.0, 1.0);
    Belief truth = Belief::from_weighted({{0.0, 0.5}, {1.0, 0.5}});
    CHECK(expected_crps_truthful(Belief::dirac(0.3), unit) == 0.0);
    CHECK_THAT(expected_crps_truthful(truth, unit), Catch::Matchers::WithinAbs(-0.25, 1e-15));
    CHECK_THAT(expected_crps_score(Belief::dirac(1.0), truth, unit), Catch::Matchers::WithinAbs(-0.5, 1e-15));
    // quadratic: expected score maximized at q_hat = q over a grid
    double q = 0.37;
    double best = expected_quadratic_score(q, q);
    for (int g = 0; g <= 100; ++g) CHECK(expected_quadratic_score(g / 100.0, q) <= best + 1e-12);
}

TEST_CASE("truthful report beats a dense report grid") {
    // propriety against an exhaustive grid of >= 50 candidate reports
    RngStream rng(7, 2);
    ScoreParams p = ScoreParams::crps(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::pair<double, double>> mass;
        int k = rng.uniform_int(2, 5);
        for (int i = 0; i < k; ++i) mass.emplace_back(rng.next_unit(), rng.next_unit() + 0.05);
        Belief truth = Belief::from_weighted(mass, true);
        double truthful = expected_crps_truthful(truth, p);
        for (int a = 0; a <= 50; ++a) {
            for (int b = a; b <= 50; ++b) {
                Belief report = a == b ? Belief::dirac(a / 50.0)
                                       : Belief::from_weighted({{a / 50.0, 0.5}, {b / 50.0, 0.5}});
                CHECK(expected_crps_score(report, truth, p) <= truthful + 1e-12);
            }
        }
    }
}

TEST_CASE("propriety harness accepts proper rules and flags the broken one") {
    ScoreParams crps = ScoreParams::crps(0.0, 1.0);
    auto r = check_propriety(crps, 2000, 11);
    CHECK(r.violations == 0);
    CHECK(r.worst_gap >= -1e-10);

    ScoreParams quad = crps;
    quad.use_crps = false;
    quad.use_quadratic = true;
    CHECK(check_propriety(quad, 2000, 12).violations == 0);

    ScoreParams composite = ScoreParams::crps(-1.0, 1.0);
    composite.use_quadratic = true;
    composite.use_sign_crps = true;
    CHECK(check_propriety(composite, 2000, 13).violations == 0);

    ScoreParams flipped = crps;
    flipped.sign_flip = true;
    CHECK(check_propriety(flipped, 500, 14).violations > 0);
}

TEST_CASE("predictiveness orders signals by information about the state mean") {
    Instance beta1 = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    auto target1 = state_mean_statistic(beta1);
    CHECK(predictiveness(beta1, beta1.signal("sR"), target1) >
          predictiveness(beta1, beta1.signal("sU"), target1));

    Instance beta0 = make_sec42_instance(0.0, 2.0, 9, FreeSignalKind::constant);
    auto target0 = state_mean_statistic(beta0);
    CHECK(predictiveness(beta0, beta0.signal("sR"), target0) ==
          predictiveness(beta0, beta0.signal("sU"), target0));
    CHECK(predictiveness(beta0, beta0.signal("sU"), target0) == 0.0);
}

TEST_CASE("predictiveness is monotone under signal combination") {
    for (const Instance& inst : {make_prop1_instance(2.0, 9), make_sec42_instance(1.0, 2.0, 9)}) {
        auto target = state_mean_statistic(inst);
        for (const auto& sig : inst.signals) {
            Signal combined = combine_signals(inst, {sig.id, inst.signals.back().id});
            CHECK(predictiveness(inst, combined, target) >= predictiveness(inst, sig, target) - 1e-12);
        }
    }
}
