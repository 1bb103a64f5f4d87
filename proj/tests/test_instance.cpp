#include <catch2/catch_amalgamated.hpp>

#include "elicit/config.hpp"
#include "elicit/generators.hpp"
#include "elicit/instance.hpp"

using namespace elicit;

TEST_CASE("posterior on the free-signal example") {
    Instance inst = make_prop1_instance(2.0, 200);
    Posterior post = posterior(inst, inst.signal("sF"), {1.0});
    CHECK_THAT(post.value_mean(), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    Posterior post0 = posterior(inst, inst.signal("sF"), {0.0});
    CHECK(post0.value_mean() == 0.0);
    CHECK(post0.state_prob(1) == 1.0);
}

TEST_CASE("posterior of a constant signal equals the prior") {
    Instance inst = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::constant);
    Posterior post = posterior(inst, inst.signal("sU"), {0.0});
    CHECK_THAT(post.value_mean(), Catch::Matchers::WithinAbs(inst.value_mean(), 1e-15));
    for (std::size_t k = 0; k < inst.support.size(); ++k)
        CHECK_THAT(post.probs[k], Catch::Matchers::WithinAbs(inst.support[k].prob, 1e-15));
}

TEST_CASE("revealing realization pins the support point") {
    // enumerate the four support points of the correlated instance: only
    // (state 1, value 2) yields realization v = 2
    Instance inst = make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign);
    Posterior post = posterior(inst, inst.signal("sR"), {2.0});
    CHECK(post.value_mean() == 2.0);
    CHECK(post.value_variance() == 0.0);
    CHECK(post.state_prob(1) == 1.0);
    CHECK_THROWS_AS(posterior(inst, inst.signal("sR"), {7.0}), ZeroProbabilityRealization);
}

TEST_CASE("posterior exactness: law of total probability") {
    for (const Instance& inst :
         {make_prop1_instance(2.0, 9), make_sec42_instance(1.0, 2.0, 9), make_voting_instance(0.2, 0.9)}) {
        for (const auto& sig : inst.signals) {
            double total = 0.0;
            for (const auto& [real, prob] : reachable_realizations(inst, sig)) {
                Posterior post = posterior(inst, sig, real);
                CHECK_THAT(post.marginal_prob, Catch::Matchers::WithinAbs(prob, 1e-15));
                double mass = 0.0;
                for (double p : post.probs) mass += p;
                CHECK_THAT(mass, Catch::Matchers::WithinAbs(1.0, 1e-12));
                total += prob;
            }
            CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
        }
    }
}

TEST_CASE("revealing classification") {
    Instance inst = make_prop1_instance(2.0, 9);
    CHECK(is_revealing(inst, inst.signal("sR")));
    CHECK_FALSE(is_revealing(inst, inst.signal("sF")));
    Signal combined = combine_signals(inst, {"sF", "sR"});
    CHECK(is_revealing(inst, combined));
}

TEST_CASE("combining a revealing signal with anything stays revealing") {
    for (const Instance& inst : {make_prop1_instance(2.0, 9), make_sec42_instance(1.0, 2.0, 9)}) {
        for (const auto& sig : inst.signals) {
            Signal combined = combine_signals(inst, {sig.id, "sR"});
            CHECK(is_revealing(inst, combined));
        }
    }
}

TEST_CASE("signal combination semantics") {
    Instance inst = make_prop1_instance(2.0, 9);
    // singleton combination is the signal itself
    Signal single = combine_signals(inst, {"sF"});
    CHECK(single.id == "sF");
    // concatenated realization (1(v >= state), v)
    Signal both = combine_signals(inst, {"sF", "sR"});
    for (std::size_t k = 0; k < inst.support.size(); ++k) {
        const auto& sp = inst.support[k];
        double v = inst.values[static_cast<std::size_t>(sp.type)];
        Realization want = {v >= sp.state ? 1.0 : 0.0, v};
        CHECK(both.table[k] == want);
    }
    // duplicated parts collapse: comb(sR,sR) carries the same information
    Signal twice = combine_signals(inst, {"sR", "sR"});
    for (const auto& [real, prob] : reachable_realizations(inst, twice)) {
        (void)prob;
        Posterior a = posterior(inst, twice, real);
        Posterior b = posterior(inst, inst.signal("sR"), {real[0]});
        CHECK(a.probs == b.probs);
    }
    CHECK_THROWS_AS(combine_signals(inst, {"nope"}), UnknownSignal);
}

TEST_CASE("refinement cannot increase expected posterior variance") {
    for (const Instance& inst : {make_prop1_instance(2.0, 9), make_sec42_instance(1.0, 2.0, 9)}) {
        for (const auto& sig : inst.signals) {
            Signal refined = combine_signals(inst, {sig.id, "sR"});
            auto expected_var = [&](const Signal& s) {
                double total = 0.0;
                for (const auto& [real, prob] : reachable_realizations(inst, s))
                    total += prob * posterior(inst, s, real).value_variance();
                return total;
            };
            CHECK(expected_var(refined) <= expected_var(sig) + 1e-12);
        }
    }
}

TEST_CASE("dynamic signals") {
    Instance inst = make_prop1_instance(2.0, 9);
    // empty trigger: identical to the first signal
    Signal none = make_dynamic_signal(inst, "sF", "sR", {});
    CHECK(none.table == inst.signal("sF").table);
    // full trigger: identical to the combination
    Signal all = make_dynamic_signal(inst, "sF", "sR", {{0.0}, {1.0}});
    CHECK(all.table == combine_signals(inst, {"sF", "sR"}).table);
    CHECK_THROWS_AS(make_dynamic_signal(inst, "sF", "sR", {{5.0}}), TriggerOutsideRange);
    // continuation cost is charged only when the trigger fires
    Signal partial = make_dynamic_signal(inst, "sF", "sR", {{0.0}});
    auto cost = dynamic_cost_row(inst, partial);
    // realization 0 happens only at (state 1, value 0): type v0 fires with
    // probability 1/2, type v1 never does
    CHECK_THAT(cost[0], Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK(cost[1] == 0.0);
}

TEST_CASE("validation flags broken assumptions") {
    Instance good = make_prop1_instance(2.0, 9);
    CHECK(validate_instance(good).ok());

    // no revealing signal with finite cost
    Instance no_reveal = good;
    no_reveal.costs[1] = {kInf, kInf};
    CHECK(validate_instance(no_reveal).has("A6"));

    // combination closure disabled and no explicit combined signal
    CHECK(validate_instance(good, /*closure_enabled=*/false).has("A5"));

    // distribution off by more than the tolerance
    Instance bad_dist = good;
    bad_dist.state_dist = {0.5, 0.5001};
    CHECK(validate_instance(bad_dist).has("dist"));

    Instance bad_value = good;
    bad_value.values[1] = 7.0;
    CHECK(validate_instance(bad_value).has("bounds"));
}

TEST_CASE("instance config round-trips through the file format") {
    for (const Instance& inst : {make_prop1_instance(2.0, 9), make_sec42_instance(1.0, 2.0, 9, FreeSignalKind::sign, true)}) {
        json doc = instance_to_json(inst);
        Instance back = instance_from_json(doc);
        CHECK(back.states == inst.states);
        CHECK(back.state_dist == inst.state_dist);
        CHECK(back.values == inst.values);
        CHECK(back.costs == inst.costs);
        REQUIRE(back.signals.size() == inst.signals.size());
        for (std::size_t i = 0; i < inst.signals.size(); ++i) CHECK(back.signals[i].table == inst.signals[i].table);
        // serialize -> parse -> serialize is byte-identical
        CHECK(instance_to_json(back).dump(2) == doc.dump(2));
    }
}
