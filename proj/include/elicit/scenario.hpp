#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "elicit/analysis.hpp"
#include "elicit/config.hpp"

namespace elicit {

inline const char* kLibraryVersion = "0.1.0";

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::string out_dir = ".";
    bool exact_only = false;           // refuse Monte-Carlo fallbacks
    std::optional<long> mc_draws;      // override Monte-Carlo draw counts
    bool write_files = true;
};

struct RunOutcome {
    json record;
    int analysis_failures = 0;  // failed expectations / violated bounds
    std::string record_path;
};

namespace detail {

inline json belief_to_json(const Belief& b) {
    json atoms = json::array(), probs = json::array();
    for (std::size_t i = 0; i < b.size(); ++i) {
        atoms.push_back(real_string(b.atom(i)));
        probs.push_back(real_string(b.prob(i)));
    }
    return json{{"atoms", atoms}, {"probs", probs}};
}

inline json bounds_to_json(const BoundReport& rep) {
    json out = json::array();
    for (const auto& c : rep.checks)
        out.push_back(json{{"name", c.name},
                           {"lhs", real_string(c.lhs)},
                           {"rhs", real_string(c.rhs)},
                           {"slack", real_string(c.slack)},
                           {"pass", c.pass}});
    return out;
}

inline Profile profile_from_json(const json& pj, const Instance& inst) {
    Profile prof;
    if (pj.contains("agents")) {
        for (const auto& aj : pj["agents"]) prof.agents.push_back(strategy_from_json(aj, inst));
        if (static_cast<int>(prof.agents.size()) != inst.n_agents)
            throw ValidationError("profile: agent count != n_agents");
        return prof;
    }
    return Profile::symmetric(inst.n_agents, strategy_from_json(pj, inst));
}

}  // namespace detail

// ----- scenario execution -----

class ScenarioRunner {
public:
    ScenarioRunner(json scenario, RunOptions opts) : doc_(std::move(scenario)), opts_(std::move(opts)) {
        if (require(doc_, "schema", "scenario") != "elicit-scenario-v1")
            throw ParseError("scenario: unsupported schema");
        name_ = require(doc_, "name", "scenario").get<std::string>();
        seed_ = opts_.seed_override ? *opts_.seed_override
                                    : static_cast<std::uint64_t>(parse_int(doc_.value("seed", json(1)), "seed"));
        instance_ = instance_from_spec(require(doc_, "instance", "scenario"));
        auto vrep = validate_instance(instance_);
        if (!vrep.ok()) {
            std::string msg = "instance invalid:";
            for (const auto& i : vrep.issues) msg += " [" + i.code + "] " + i.message;
            throw ValidationError(msg);
        }
        mech_ = mechanism_from_json(require(doc_, "mechanism", "scenario"), instance_);
        if (doc_.contains("loss")) loss_ = loss_from_json(doc_["loss"], instance_);
        closure_.combined = true;
        if (doc_.contains("closure")) {
            closure_.dynamic_signals = doc_["closure"].value("dynamic", false);
            if (doc_["closure"].contains("max_generated"))
                closure_.max_generated = parse_int(doc_["closure"]["max_generated"], "closure.max_generated");
        }
    }

    RunOutcome run() {
        auto t0 = std::chrono::steady_clock::now();
        json analyses_out = json::array();
        int failures = 0;
        const json& analyses = doc_.value("analyses", json::array());
        int op_index = 0;
        for (const auto& aj : analyses) {
            json out = run_analysis(aj, op_index++);
            if (out.contains("pass") && !out["pass"].get<bool>()) ++failures;
            analyses_out.push_back(std::move(out));
        }
        auto t1 = std::chrono::steady_clock::now();
        json record;
        record["schema"] = "elicit-result-v1";
        record["name"] = name_;
        record["seed"] = seed_;
        record["version"] = kLibraryVersion;
        record["scenario"] = doc_;
        record["analyses"] = analyses_out;
        record["runtime_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        RunOutcome outcome;
        outcome.record = record;
        outcome.analysis_failures = failures;
        if (opts_.write_files) {
            std::filesystem::create_directories(opts_.out_dir);
            outcome.record_path = (std::filesystem::path(opts_.out_dir) / (name_ + ".result.json")).string();
            write_file(outcome.record_path, record.dump(2) + "\n");
        }
        return outcome;
    }

private:
    json run_analysis(const json& aj, int op_index) {
        const std::string op = require(aj, "op", "analysis").get<std::string>();
        if (op == "benchmarks") return run_benchmarks(aj);
        if (op == "verify_profile") return run_verify(aj, op_index);
        if (op == "search_equilibria") return run_search(aj);
        if (op == "sweep") return run_sweep(aj);
        if (op == "square_like") return run_square_like(aj);
        if (op == "mimic_pair") return run_mimic(aj);
        if (op == "laplace_grid") return run_laplace(aj);
        if (op == "vcg_smoke") return run_vcg_smoke(aj, op_index);
        if (op == "propriety") return run_propriety(aj);
        throw ParseError("analysis: unknown op '" + op + "'");
    }

    LossFunction scenario_loss() const {
        if (loss_) return *loss_;
        return LossFunction::square(instance_.v_lo, instance_.v_hi);
    }

    json run_benchmarks(const json&) {
        LossFunction loss = scenario_loss();
        auto b = benchmarks(instance_, loss);
        json out;
        out["op"] = "benchmarks";
        out["loss"] = loss_kind_name(loss.kind);
        out["ex_ante"] = real_string(b.ex_ante);
        out["ex_post"] = real_string(b.ex_post);
        out["argmin_ex_ante"] = real_string(b.argmin_ex_ante);
        json psa = json::array();
        for (double e : b.per_state_argmin) psa.push_back(real_string(e));
        out["per_state_argmin"] = psa;
        out["pass"] = b.ex_post <= b.ex_ante + 1e-12;  // information never hurts the minimizer
        return out;
    }

    json run_verify(const json& aj, int op_index) {
        MechanismConfig cfg = mech_;
        if (aj.contains("lambda")) cfg.lambda = parse_real(aj["lambda"], "verify.lambda");
        EvalContext ctx(instance_, cfg, closure_);
        Profile prof = detail::profile_from_json(require(aj, "profile", "verify_profile"), instance_);
        double eps = aj.contains("epsilon") ? parse_real(aj["epsilon"], "verify.epsilon") : 1e-9;
        json out;
        out["op"] = "verify_profile";
        if (aj.contains("label")) out["label"] = aj["label"];
        out["lambda"] = real_string(cfg.lambda);

        if (cfg.kind == MechanismKind::vcg_betting) {
            if (opts_.exact_only) throw ValidationError("vcg_betting has no exact evaluation path");
            return run_verify_mc(aj, ctx, prof, eps, std::move(out), op_index);
        }

        EquilibriumReport rep = verify_bne(ctx, prof, eps);
        out["exact"] = true;
        out["passed"] = rep.passed;
        out["epsilon"] = real_string(rep.epsilon);
        out["tolerance"] = real_string(rep.tolerance);
        out["phi1"] = real_string(rep.phi1);
        out["phi2"] = real_string(rep.phi2);
        if (instance_.n_agents <= 16) {
            json gaps = json::array();
            for (double g : rep.per_agent_gap) gaps.push_back(real_string(g));
            out["per_agent_gap"] = gaps;
        }
        out["best_deviation"] = rep.best_deviation_signal.empty() ? "" : rep.best_deviation_signal[0];
        json stats = json::array();
        for (std::size_t i = 0; i < rep.error_stats.size() && i < 1; ++i)
            stats.push_back(json{{"mean", real_string(rep.error_stats[i].eps_mean)},
                                 {"var", real_string(rep.error_stats[i].eps_var)},
                                 {"cov_peer", real_string(rep.error_stats[i].cov_eps_peer)}});
        out["error_stats"] = stats;
        json est = json::array();
        for (std::size_t w = 0; w < instance_.states.size(); ++w) {
            json ej = detail::belief_to_json(rep.estimator_dist[w]);
            ej["state"] = instance_.states[w];
            ej["limit"] = real_string(rep.estimator_limit[w]);
            est.push_back(ej);
        }
        out["estimator"] = est;
        if (rep.welfare_match_prob) {
            out["welfare_match_prob"] = real_string(*rep.welfare_match_prob);
            out["welfare_floor"] = real_string(1.0 - cfg.delta);
        }
        if (cfg.is_voting()) {
            auto [q, gap] = pivot_stats(ctx, prof, 0);
            out["pivot"] = json{{"q", real_string(q)}, {"cond_value_gap", real_string(gap)}};
        }
        LossFunction loss = scenario_loss();
        auto bench = benchmarks(instance_, loss);
        json lj;
        lj["kind"] = loss_kind_name(loss.kind);
        double exact_loss = expected_loss_of_estimator(instance_, loss, rep.estimator_dist);
        lj["expected_exact"] = real_string(exact_loss);
        // The estimator limit is a conditional mean; for the binary-estimate
        // utilitarian loss only the exact outcome distribution makes sense.
        lj["expected_at_limit"] = real_string(loss.kind == LossKind::utilitarian
                                                  ? exact_loss
                                                  : expected_loss_at_limit(instance_, loss, rep.estimator_limit));
        lj["ex_ante"] = real_string(bench.ex_ante);
        lj["ex_post"] = real_string(bench.ex_post);
        out["loss"] = lj;
        if (aj.value("bounds", false)) {
            BoundReport br = bound_checks(ctx, prof, rep.phi1);
            out["bounds"] = detail::bounds_to_json(br);
            out["bounds_pass"] = br.all_pass();
        }
        long mc_reps = aj.value("mc_reps", 0);
        if (opts_.mc_draws) mc_reps = *opts_.mc_draws;
        if (mc_reps > 0 && !opts_.exact_only) {
            json mcj = json::array();
            for (std::size_t w = 0; w < instance_.states.size(); ++w) {
                auto est_mc = mc_estimator_mean(ctx, prof, static_cast<int>(w), mc_reps,
                                                seed_ + 1000 + static_cast<std::uint64_t>(op_index) * 17 + w);
                mcj.push_back(json{{"state", instance_.states[w]},
                                   {"mean", real_string(est_mc.mean)},
                                   {"se", real_string(est_mc.std_error)},
                                   {"limit_gap", real_string(est_mc.mean - rep.estimator_limit[w])}});
            }
            out["mc_estimator"] = mcj;
        }
        bool pass = true;
        if (aj.contains("expect")) {
            bool want_pass = aj["expect"] == "pass";
            out["expect"] = aj["expect"];
            pass = (rep.passed == want_pass);
        }
        if (out.contains("bounds_pass")) pass = pass && out["bounds_pass"].get<bool>();
        out["pass"] = pass;
        return out;
    }

    json run_verify_mc(const json& aj, EvalContext& ctx, const Profile& prof, double eps, json out, int op_index) {
        long draws = opts_.mc_draws.value_or(aj.value("mc_draws", 200000));
        auto own = mc_expected_utility(ctx, prof, 0, draws, seed_ + 31 * static_cast<std::uint64_t>(op_index));
        double best_gain = -kInf;
        double best_se = own.std_error;
        std::string best_sig;
        for (const auto& cand : ctx.universe().all()) {
            if (!(ctx.expected_cost(cand.sig.id) < kInf)) continue;
            Profile dev = prof;
            dev.agents[0] = Strategy::pure(cand.sig.id, ctx.mech().is_voting() ? ReportRule::truthful_vote
                                                                               : ReportRule::posterior_mean);
            auto u = mc_expected_utility(ctx, dev, 0, draws,
                                         seed_ + 31 * static_cast<std::uint64_t>(op_index) + 7);
            double gain = u.mean - own.mean;
            if (gain > best_gain) {
                best_gain = gain;
                best_se = std::sqrt(u.std_error * u.std_error + own.std_error * own.std_error);
                best_sig = cand.sig.id;
            }
        }
        double tol = std::max(eps, 3.0 * best_se);
        out["exact"] = false;
        out["warning"] = "monte-carlo evaluation (continuous bias term)";
        out["passed"] = best_gain <= tol;
        out["epsilon"] = real_string(best_gain);
        out["tolerance"] = real_string(tol);
        out["std_error"] = real_string(best_se);
        out["best_deviation"] = best_sig;
        bool pass = true;
        if (aj.contains("expect")) {
            bool want_pass = aj["expect"] == "pass";
            out["expect"] = aj["expect"];
            pass = (out["passed"].get<bool>() == want_pass);
        }
        out["pass"] = pass;
        return out;
    }

    json run_search(const json& aj) {
        EvalContext ctx(instance_, mech_, closure_);
        double eps = aj.contains("epsilon") ? parse_real(aj["epsilon"], "search.epsilon") : 1e-9;
        int max_iters = aj.value("max_iters", 16);
        auto res = search_symmetric_equilibria(ctx, eps, max_iters);
        json out;
        out["op"] = "search_equilibria";
        json cands = json::array();
        int found = 0;
        for (const auto& c : res.candidates) {
            found += c.report.passed ? 1 : 0;
            cands.push_back(json{{"signal", c.signal_id},
                                 {"converged", c.converged},
                                 {"passed", c.report.passed},
                                 {"gain", real_string(c.report.epsilon)},
                                 {"best_deviation",
                                  c.report.best_deviation_signal.empty() ? "" : c.report.best_deviation_signal[0]}});
        }
        out["candidates"] = cands;
        out["equilibria_found"] = found;
        json cycles = json::array();
        for (const auto& cyc : res.cycles) cycles.push_back(cyc);
        out["cycles"] = cycles;
        if (aj.contains("expect")) {
            out["expect"] = aj["expect"];
            if (aj["expect"] == "none") out["pass"] = (found == 0 && !res.cycles.empty());
            else if (aj["expect"] == "some") out["pass"] = found > 0;
        }
        return out;
    }

    json run_sweep(const json& aj) {
        std::vector<double> lambdas;
        for (const auto& l : require(aj, "lambdas", "sweep")) lambdas.push_back(parse_real(l, "sweep.lambdas"));
        std::string sig_a = aj.value("signal_a", "sR");
        std::string sig_b = aj.value("signal_b", "sU");
        double max_slope = aj.contains("max_slope") ? parse_real(aj["max_slope"], "sweep.max_slope") : -0.4;
        auto res = cx4_lambda_sweep(instance_, mech_, lambdas, sig_a, sig_b,
                                    aj.contains("epsilon") ? parse_real(aj["epsilon"], "sweep.epsilon") : 1e-6);
        json out;
        out["op"] = "sweep";
        json pts = json::array();
        bool all_ok = true;
        for (const auto& pt : res.points) {
            all_ok = all_ok && pt.verified && pt.cx4_pass && pt.cov_abs > 0.0;
            pts.push_back(json{{"lambda", real_string(pt.lambda)},
                               {"q", real_string(pt.mix_q)},
                               {"cov_abs", real_string(pt.cov_abs)},
                               {"cx4_rhs", real_string(pt.cx4_rhs)},
                               {"verified", pt.verified},
                               {"gain", real_string(pt.gain)}});
        }
        out["points"] = pts;
        out["slope"] = real_string(res.slope);
        out["max_slope"] = real_string(max_slope);
        out["pass"] = all_ok && res.slope <= max_slope;
        return out;
    }

    json run_square_like(const json& aj) {
        LossFunction loss = scenario_loss();
        int grid = aj.value("grid", 21);
        auto res = is_square_like(loss, instance_.v_lo, instance_.v_hi, grid);
        json out;
        out["op"] = "square_like";
        out["loss"] = loss_kind_name(loss.kind);
        out["not_square_like"] = res.not_square_like;
        if (res.witness) out["witness"] = {real_string(res.witness->first), real_string(res.witness->second)};
        if (aj.contains("expect_witness"))
            out["pass"] = res.not_square_like == aj["expect_witness"].get<bool>();
        return out;
    }

    json run_mimic(const json& aj) {
        const json& spec = doc_["instance"];
        if (!spec.contains("generator") || spec["generator"] != "thm1")
            throw ValidationError("mimic_pair requires the thm1 instance generator");
        json params = spec.value("params", json::object());
        double a = params.contains("a") ? parse_real(params["a"], "a") : 0.0;
        double b = params.contains("b") ? parse_real(params["b"], "b") : 1.0;
        double cost = params.contains("cost") ? parse_real(params["cost"], "cost") : 2.5;
        int n = params.contains("n") ? parse_int(params["n"], "n") : 3;
        auto [inst_I, inst_P] = make_mimicry_pair(a, b, cost, n);
        Profile prof_I =
            aj.contains("profile") ? detail::profile_from_json(aj["profile"], inst_I)
                                   : Profile::symmetric(n, Strategy::pure("sU", ReportRule::posterior_mean));
        EvalContext ctx_I(inst_I, mech_, closure_);
        auto rep_I = verify_bne(ctx_I, prof_I, 1e-9);
        auto mim = mimic_profile(inst_I, inst_P, prof_I);
        EvalContext ctx_P(inst_P, mech_, closure_);
        auto rep_P = verify_bne(ctx_P, mim.profile_prime, 1e-9);
        // total variation between the two estimate distributions
        double est_tv = 0.0;
        for (std::size_t w = 0; w < inst_I.states.size(); ++w) {
            std::map<double, double> da, db;
            const Belief& ba = rep_I.estimator_dist[w];
            const Belief& bb = rep_P.estimator_dist[w];
            for (std::size_t i = 0; i < ba.size(); ++i) da[ba.atom(i)] += ba.prob(i);
            for (std::size_t i = 0; i < bb.size(); ++i) db[bb.atom(i)] += bb.prob(i);
            std::set<double> keys;
            for (auto& [k, v] : da) keys.insert(k);
            for (auto& [k, v] : db) keys.insert(k);
            double tv = 0.0;
            for (double k : keys)
                tv += std::fabs((da.count(k) ? da[k] : 0.0) - (db.count(k) ? db[k] : 0.0));
            est_tv = std::max(est_tv, 0.5 * tv);
        }
        LossFunction loss = scenario_loss();
        auto bench_I = benchmarks(inst_I, loss);
        auto bench_P = benchmarks(inst_P, loss);
        double loss_I = expected_loss_of_estimator(inst_I, loss, rep_I.estimator_dist);
        double loss_P = expected_loss_of_estimator(inst_P, loss, rep_P.estimator_dist);
        double excess = std::max(loss_I - bench_I.ex_ante, loss_P - bench_P.ex_ante);
        json out;
        out["op"] = "mimic_pair";
        out["equilibrium_on_I"] = rep_I.passed;
        out["equilibrium_on_I_prime"] = rep_P.passed;
        out["message_tv"] = real_string(mim.message_tv);
        out["estimate_tv"] = real_string(est_tv);
        out["loss_I"] = real_string(loss_I);
        out["ex_ante_I"] = real_string(bench_I.ex_ante);
        out["loss_I_prime"] = real_string(loss_P);
        out["ex_ante_I_prime"] = real_string(bench_P.ex_ante);
        out["excess_over_ex_ante"] = real_string(excess);
        out["pass"] = rep_I.passed && rep_P.passed && mim.message_tv == 0.0 && est_tv == 0.0 && excess > 0.0;
        return out;
    }

    json run_laplace(const json& aj) {
        auto res = laplace_sandwich_grid(aj.value("a_points", 20), aj.value("b_points", 20),
                                         aj.value("beta_points", 5));
        json out;
        out["op"] = "laplace_grid";
        out["checked"] = res.checked;
        out["failures"] = res.failures;
        out["worst_slack"] = real_string(res.worst_slack);
        out["pass"] = res.failures == 0;
        return out;
    }

    json run_vcg_smoke(const json& aj, int op_index) {
        int profiles = aj.value("profiles", 1000);
        MechanismConfig cfg = mech_;
        RngStream rng(seed_, 0xba5e + static_cast<std::uint64_t>(op_index));
        int pivot_sign_violations = 0;
        bool replay_ok = true, allocation_uniform = true, dictator_ok = true;
        int n = instance_.n_agents;
        for (int t = 0; t < profiles; ++t) {
            std::vector<Message> msgs(static_cast<std::size_t>(n));
            for (auto& m : msgs) {
                m.value_report = rng.uniform(cfg.v_lo, cfg.v_hi);
                m.belief = Belief::dirac(rng.uniform(cfg.v_lo / n, cfg.v_hi / n));
            }
            MechanismDraws draws = MechanismDraws::draw(cfg, n, rng);
            Outcome out = vcg_betting_outcome(cfg, msgs, draws);
            Outcome replay = vcg_betting_outcome(cfg, msgs, draws);
            if (out.allocations != replay.allocations || out.transfers != replay.transfers) replay_ok = false;
            for (int i = 0; i < n; ++i)
                if (out.allocations[static_cast<std::size_t>(i)] != out.allocations[0]) allocation_uniform = false;
            if (draws.dictator >= 0) {
                auto d = static_cast<std::size_t>(draws.dictator);
                int want = msgs[d].value_report >= draws.prices[d] ? 1 : 0;
                if (out.allocations[0] != want) dictator_ok = false;
            } else {
                MechanismConfig quiet = cfg;
                quiet.lambda = 0.0;
                Outcome bare = vcg_betting_outcome(quiet, msgs, draws);
                for (double tr : bare.transfers)
                    if (tr > 1e-12) ++pivot_sign_violations;
            }
        }
        json out;
        out["op"] = "vcg_smoke";
        out["profiles"] = profiles;
        out["pivot_sign_violations"] = pivot_sign_violations;
        out["replay_identical"] = replay_ok;
        out["allocations_match_estimate"] = allocation_uniform;
        out["dictator_semantics"] = dictator_ok;
        out["pass"] = pivot_sign_violations == 0 && replay_ok && allocation_uniform && dictator_ok;
        return out;
    }

    json run_propriety(const json& aj) {
        int trials = aj.value("trials", 10000);
        json rules = json::array();
        bool pass = true;
        auto run_rule = [&](const std::string& name, ScoreParams p, bool expect_violations) {
            auto rep = check_propriety(p, trials, seed_ + std::hash<std::string>{}(name));
            bool ok = expect_violations ? rep.violations > 0 : rep.violations == 0 && rep.worst_gap >= -1e-10;
            pass = pass && ok;
            rules.push_back(json{{"rule", name},
                                 {"trials", rep.trials},
                                 {"violations", rep.violations},
                                 {"worst_gap", real_string(rep.worst_gap)},
                                 {"pass", ok}});
        };
        ScoreParams crps = ScoreParams::crps(instance_.v_lo, instance_.v_hi);
        run_rule("crps", crps, false);
        ScoreParams quad = crps;
        quad.use_crps = false;
        quad.use_quadratic = true;
        run_rule("quadratic", quad, false);
        ScoreParams comp = crps;
        comp.use_quadratic = true;
        comp.use_sign_crps = true;
        run_rule("composite", comp, false);
        ScoreParams flipped = crps;
        flipped.sign_flip = true;
        run_rule("crps_sign_flipped", flipped, true);
        json out;
        out["op"] = "propriety";
        out["rules"] = rules;
        out["pass"] = pass;
        return out;
    }

    json doc_;
    RunOptions opts_;
    std::string name_;
    std::uint64_t seed_ = 1;
    Instance instance_;
    MechanismConfig mech_;
    std::optional<LossFunction> loss_;
    ClosureOptions closure_;
};

inline RunOutcome run_scenario_json(const json& scenario, const RunOptions& opts) {
    return ScenarioRunner(scenario, opts).run();
}

// ----- overrides: --set dotted.path=value -----

inline void apply_override(json& doc, const std::string& key, const std::string& value) {
    json* cur = &doc;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ParseError("--set: empty key");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (cur->is_array()) cur = &(*cur)[std::stoul(parts[i])];
        else cur = &(*cur)[parts[i]];
        if (cur->is_null()) throw ParseError("--set: no such path '" + key + "'");
    }
    json parsed;
    if (value == "true") parsed = true;
    else if (value == "false") parsed = false;
    else parsed = value;  // numerics stay decimal strings
    if (cur->is_array()) (*cur)[std::stoul(parts.back())] = parsed;
    else (*cur)[parts.back()] = parsed;
}

// ----- bundled scenario library -----

inline std::vector<std::string> list_scenarios() {
    return {"prop1-bdm",        "prop1-bdm-betting", "sec42-beta0",   "sec42-beta1", "remark-r1",
            "thm1-pair",        "mr-betting-case1",  "mr-betting-case2", "vcg-betting-smoke", "bounds-sweep"};
}

inline json bundled_scenario(const std::string& name) {
    json s;
    s["schema"] = "elicit-scenario-v1";
    s["name"] = name;
    s["seed"] = 20260810;
    if (name == "prop1-bdm") {
        s["instance"] = {{"generator", "prop1"}, {"params", {{"cost", "2"}, {"n", 200}}}};
        s["mechanism"] = {{"kind", "bdm"}};
        s["loss"] = {{"kind", "square"}};
        s["analyses"] = json::array(
            {json{{"op", "benchmarks"}},
             json{{"op", "verify_profile"},
                  {"label", "free-signal"},
                  {"profile", {{"signal", "sF"}, {"reports", "posterior_mean"}}},
                  {"expect", "pass"},
                  {"mc_reps", 400}}});
    } else if (name == "prop1-bdm-betting") {
        s["instance"] = {{"generator", "prop1"}, {"params", {{"cost", "2"}, {"n", 9}}}};
        s["mechanism"] = {{"kind", "bdm_betting"}, {"lambda", "400"}};
        s["loss"] = {{"kind", "square"}};
        s["closure"] = {{"dynamic", true}};
        s["analyses"] = json::array({json{{"op", "search_equilibria"}, {"expect", "none"}}});
    } else if (name == "sec42-beta0") {
        s["instance"] = {{"generator", "sec42"},
                         {"params", {{"beta", "0"}, {"cost", "2"}, {"n", 9}, {"free_signal", "constant"}}}};
        s["mechanism"] = {{"kind", "bdm_betting"}, {"lambda", "2"}};
        s["loss"] = {{"kind", "square"}};
        json uninformed = {{"signal", "sU"}, {"reports", "posterior_mean"}};
        s["analyses"] = json::array(
            {json{{"op", "benchmarks"}},
             json{{"op", "verify_profile"}, {"label", "uninformed-lam1x"}, {"profile", uninformed},
                  {"expect", "pass"}, {"bounds", true}},
             json{{"op", "verify_profile"}, {"label", "uninformed-lam10x"}, {"profile", uninformed},
                  {"lambda", "20"}, {"expect", "pass"}},
             json{{"op", "verify_profile"}, {"label", "uninformed-lam100x"}, {"profile", uninformed},
                  {"lambda", "200"}, {"expect", "pass"}}});
    } else if (name == "sec42-beta1") {
        s["instance"] = {{"generator", "sec42"},
                         {"params", {{"beta", "1"}, {"cost", "2"}, {"n", 9}, {"free_signal", "sign"}}}};
        s["mechanism"] = {{"kind", "bdm_betting"}, {"lambda", "200"}};
        s["loss"] = {{"kind", "square"}};
        s["analyses"] = json::array(
            {json{{"op", "benchmarks"}},
             json{{"op", "verify_profile"}, {"label", "informed"},
                  {"profile", {{"signal", "sR"}, {"reports", "posterior_mean"}}}, {"expect", "pass"},
                  {"bounds", true}},
             json{{"op", "verify_profile"}, {"label", "uninformed"},
                  {"profile", {{"signal", "sU"}, {"reports", "posterior_mean"}}}, {"expect", "fail"}},
             json{{"op", "search_equilibria"}}});
    } else if (name == "remark-r1") {
        s["instance"] = {{"generator", "sec42"},
                         {"params",
                          {{"beta", "1"}, {"cost", "2"}, {"n", 9}, {"free_signal", "sign"}, {"with_dynamic", true}}}};
        s["mechanism"] = {{"kind", "bdm_betting"}, {"lambda", "200"}};
        s["loss"] = {{"kind", "square"}};
        s["closure"] = {{"dynamic", true}};
        s["analyses"] = json::array(
            {json{{"op", "verify_profile"}, {"label", "uninformed"},
                  {"profile", {{"signal", "sU"}, {"reports", "posterior_mean"}}}, {"expect", "fail"}},
             json{{"op", "verify_profile"}, {"label", "informed-dynamic"},
                  {"profile", {{"signal", "sD"}, {"reports", "posterior_mean"}}}, {"expect", "pass"},
                  {"bounds", true}},
             json{{"op", "search_equilibria"}}});
    } else if (name == "thm1-pair") {
        s["instance"] = {{"generator", "thm1"}, {"params", {{"a", "0"}, {"b", "1"}, {"cost", "2.5"}, {"n", 3}}}};
        s["mechanism"] = {{"kind", "bdm"}};
        s["loss"] = {{"kind", "quantity_at_price"}, {"price", "0.75"}};
        s["analyses"] = json::array(
            {json{{"op", "square_like"}, {"expect_witness", true}},
             json{{"op", "mimic_pair"},
                  {"profile", {{"signal", "sU"}, {"reports", "posterior_mean"}}}},
             json{{"op", "benchmarks"}}});
    } else if (name == "mr-betting-case1") {
        s["instance"] = {{"generator", "voting"}, {"params", {{"p0", "0.2"}, {"p1", "0.9"}, {"cost", "2"}, {"n", 9}}}};
        s["mechanism"] = {{"kind", "majority_betting"}, {"schedule", json::object()}};
        s["loss"] = {{"kind", "utilitarian"}};
        s["analyses"] = json::array(
            {json{{"op", "benchmarks"}},
             json{{"op", "verify_profile"}, {"label", "informed"},
                  {"profile", {{"signal", "sR"}, {"reports", "truthful_vote"}}}, {"expect", "pass"},
                  {"bounds", true}}});
    } else if (name == "mr-betting-case2") {
        s["instance"] = {{"generator", "voting"}, {"params", {{"p0", "0.7"}, {"p1", "0.7"}, {"cost", "2"}, {"n", 9}}}};
        s["mechanism"] = {{"kind", "majority_betting"}, {"schedule", json::object()}};
        s["loss"] = {{"kind", "utilitarian"}};
        s["analyses"] = json::array(
            {json{{"op", "benchmarks"}},
             json{{"op", "verify_profile"}, {"label", "uninformed"},
                  {"profile", {{"signal", "sU"}, {"reports", "exante_vote"}}}, {"expect", "pass"}}});
    } else if (name == "vcg-betting-smoke") {
        s["instance"] = {{"generator", "sec42"}, {"params", {{"beta", "1"}, {"cost", "2"}, {"n", 5}}}};
        s["mechanism"] = {{"kind", "vcg_betting"}, {"lambda", "3"}, {"delta", "0.2"}, {"beta", "2"}};
        s["analyses"] = json::array({json{{"op", "vcg_smoke"}, {"profiles", 1000}}});
    } else if (name == "bounds-sweep") {
        s["instance"] = {{"generator", "sec42"},
                         {"params", {{"beta", "1"}, {"cost", "2"}, {"n", 9}, {"free_signal", "constant"}}}};
        s["mechanism"] = {{"kind", "bdm_betting"}, {"lambda", "32"}};
        s["loss"] = {{"kind", "square"}};
        s["analyses"] = json::array(
            {json{{"op", "sweep"},
                  {"lambdas", {"32", "64", "128", "256", "512", "1024", "2048", "4096"}},
                  {"signal_a", "sR"},
                  {"signal_b", "sU"},
                  {"max_slope", "-0.4"}},
             json{{"op", "laplace_grid"}, {"a_points", 20}, {"b_points", 20}, {"beta_points", 5}},
             json{{"op", "propriety"}, {"trials", 10000}}});
    } else {
        throw ParseError("unknown bundled scenario '" + name + "'");
    }
    return s;
}

inline std::string canonical_text(const json& doc) { return doc.dump(2) + "\n"; }

// ----- CSV tables -----

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    return out + "\"";
}

}  // namespace detail

// Writes comma-separated tables from a result record; returns the paths of
// the files actually written (empty tables produce no file).
inline std::vector<std::string> emit_tables(const json& record, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::string scen = record.value("name", "scenario");
    std::vector<std::string> written;
    auto emit = [&](const std::string& file, const std::string& header, const std::vector<std::string>& rows) {
        if (rows.empty()) return;
        std::string path = (std::filesystem::path(out_dir) / file).string();
        std::string body = header + "\n";
        for (const auto& r : rows) body += r + "\n";
        write_file(path, body);
        written.push_back(path);
    };
    std::vector<std::string> est_rows, loss_rows, gap_rows, bound_rows, sweep_rows;
    std::string mech_kind;
    if (record.contains("scenario") && record["scenario"].contains("mechanism"))
        mech_kind = record["scenario"]["mechanism"].value("kind", "");
    for (const auto& an : record.value("analyses", json::array())) {
        std::string op = an.value("op", "");
        std::string label = an.value("label", op);
        if (op == "verify_profile") {
            for (const auto& ej : an.value("estimator", json::array())) {
                std::string state = ej.value("state", "");
                const auto& atoms = ej["atoms"];
                const auto& probs = ej["probs"];
                for (std::size_t i = 0; i < atoms.size(); ++i)
                    est_rows.push_back(scen + "," + detail::csv_escape(label) + "," + state + "," +
                                       atoms[i].get<std::string>() + "," + probs[i].get<std::string>());
            }
            if (an.contains("loss")) {
                const auto& lj = an["loss"];
                loss_rows.push_back(scen + "," + detail::csv_escape(label) + "," + mech_kind + "," +
                                    lj["expected_at_limit"].get<std::string>() + "," +
                                    lj["ex_ante"].get<std::string>() + "," + lj["ex_post"].get<std::string>());
            }
            if (an.contains("per_agent_gap")) {
                const auto& gaps = an["per_agent_gap"];
                for (std::size_t i = 0; i < gaps.size(); ++i)
                    gap_rows.push_back(scen + "," + detail::csv_escape(label) + "," + std::to_string(i) + "," +
                                       gaps[i].get<std::string>());
            }
            for (const auto& bj : an.value("bounds", json::array()))
                bound_rows.push_back(scen + "," + detail::csv_escape(label) + "," + bj["name"].get<std::string>() +
                                     "," + bj["lhs"].get<std::string>() + "," + bj["rhs"].get<std::string>() + "," +
                                     bj["slack"].get<std::string>() + "," + (bj["pass"].get<bool>() ? "1" : "0"));
        } else if (op == "sweep") {
            for (const auto& pj : an.value("points", json::array()))
                sweep_rows.push_back(scen + "," + pj["lambda"].get<std::string>() + "," +
                                     pj["q"].get<std::string>() + "," + pj["cov_abs"].get<std::string>() + "," +
                                     pj["cx4_rhs"].get<std::string>() + "," +
                                     (pj["verified"].get<bool>() ? "1" : "0"));
        }
    }
    emit("estimator_by_state.csv", "scenario,label,state,atom,prob", est_rows);
    emit("loss_vs_benchmark.csv", "scenario,label,mechanism,expected_loss,ex_ante,ex_post", loss_rows);
    emit("deviation_gaps.csv", "scenario,label,agent,gain", gap_rows);
    emit("bound_slacks.csv", "scenario,label,bound,lhs,rhs,slack,pass", bound_rows);
    emit("cx4_vs_lambda.csv", "scenario,lambda,q,cov_abs,cx4_rhs,verified", sweep_rows);
    return written;
}

}  // namespace elicit
