#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "elicit/analysis.hpp"
#include "elicit/generators.hpp"
#include "elicit/instance.hpp"
#include "elicit/loss.hpp"
#include "elicit/mechanisms.hpp"
#include "elicit/strategy.hpp"

namespace elicit {

using json = nlohmann::json;

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& w) : std::runtime_error(w) {}
};
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& w) : std::runtime_error(w) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& w) : std::runtime_error(w) {}
};

// Real values in config files are decimal strings parsed to the nearest
// float; plain JSON numbers are accepted as well.
inline double parse_real(const json& v, const std::string& field) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string& s = v.get_ref<const std::string&>();
        if (s == "inf" || s == "+inf") return kInf;
        char* end = nullptr;
        double x = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0')
            throw ParseError("field '" + field + "': cannot parse '" + s + "' as a real");
        return x;
    }
    throw ParseError("field '" + field + "': expected a decimal string");
}

inline int parse_int(const json& v, const std::string& field) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        double x = parse_real(v, field);
        int i = static_cast<int>(x);
        if (static_cast<double>(i) != x) throw ParseError("field '" + field + "': expected an integer");
        return i;
    }
    throw ParseError("field '" + field + "': expected an integer");
}

inline std::string real_string(double x) {
    if (x == kInf) return "inf";
    return format_real(x);
}

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path + "'");
}

// ----- realizations -----

inline std::string realization_key(const Realization& r) { return format_realization(r); }

inline Realization parse_realization_key(const std::string& key, const std::string& field) {
    std::string s = key;
    if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
    Realization out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char* end = nullptr;
        double x = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str()) throw ParseError("field '" + field + "': bad realization '" + key + "'");
        out.push_back(x);
    }
    return out;
}

// ----- instance -----

inline Instance instance_from_json(const json& doc) {
    const std::string where = "instance";
    if (require(doc, "schema", where) != "elicit-instance-v1")
        throw ParseError("instance: unsupported schema");
    Instance inst;
    for (const auto& s : require(doc, "states", where)) inst.states.push_back(s.get<std::string>());
    for (const auto& p : require(doc, "state_probs", where))
        inst.state_dist.push_back(parse_real(p, "state_probs"));
    for (const auto& t : require(doc, "types", where)) inst.types.push_back(t.get<std::string>());
    for (const auto& row : require(doc, "type_probs", where)) {
        std::vector<double> r;
        for (const auto& p : row) r.push_back(parse_real(p, "type_probs"));
        inst.type_dist_given_state.push_back(r);
    }
    for (const auto& v : require(doc, "values", where)) inst.values.push_back(parse_real(v, "values"));
    const auto& vb = require(doc, "value_bounds", where);
    inst.v_lo = parse_real(vb.at(0), "value_bounds");
    inst.v_hi = parse_real(vb.at(1), "value_bounds");
    inst.n_agents = parse_int(require(doc, "n_agents", where), "n_agents");
    if (inst.states.size() != inst.state_dist.size()) throw ParseError("instance: states/state_probs mismatch");
    if (inst.type_dist_given_state.size() != inst.states.size())
        throw ParseError("instance: type_probs must have one row per state");
    for (const auto& row : inst.type_dist_given_state)
        if (row.size() != inst.types.size()) throw ParseError("instance: type_probs row width mismatch");
    if (inst.values.size() != inst.types.size()) throw ParseError("instance: values/types mismatch");

    // support enumeration must exist before signal tables can be indexed
    std::vector<std::pair<int, int>> support_pairs;
    for (std::size_t w = 0; w < inst.states.size(); ++w)
        for (std::size_t t = 0; t < inst.types.size(); ++t)
            if (inst.state_dist[w] * inst.type_dist_given_state[w][t] > 0.0)
                support_pairs.emplace_back(static_cast<int>(w), static_cast<int>(t));

    for (const auto& sj : require(doc, "signals", where)) {
        Signal sig;
        sig.id = require(sj, "id", "signal").get<std::string>();
        std::string kind = sj.value("kind", "base");
        sig.kind = kind == "base"       ? SignalKind::base
                   : kind == "combined" ? SignalKind::combined
                   : kind == "dynamic"  ? SignalKind::dynamic
                                        : throw ParseError("signal '" + sig.id + "': unknown kind '" + kind + "'");
        if (sj.contains("parts"))
            for (const auto& p : sj["parts"]) sig.parts.push_back(p.get<std::string>());
        if (sj.contains("trigger"))
            for (const auto& t : sj["trigger"]) {
                Realization r;
                for (const auto& x : t) r.push_back(parse_real(x, "trigger"));
                sig.trigger.push_back(r);
            }
        const json& rows = require(sj, "rows", "signal '" + sig.id + "'");
        for (const auto& [w, t] : support_pairs) {
            std::string key = inst.states[static_cast<std::size_t>(w)] + "," + inst.types[static_cast<std::size_t>(t)];
            auto it = rows.find(key);
            if (it == rows.end())
                throw ParseError("signal '" + sig.id + "': missing realization row '" + key + "'");
            Realization r;
            for (const auto& x : *it) r.push_back(parse_real(x, "signal row " + key));
            sig.table.push_back(r);
        }
        inst.signals.push_back(sig);
    }
    const json& costs = require(doc, "costs", where);
    for (const auto& sig : inst.signals) {
        auto it = costs.find(sig.id);
        if (it == costs.end()) throw ParseError("costs: missing entry for signal '" + sig.id + "'");
        std::vector<double> row(inst.types.size(), 0.0);
        if (it->is_object()) {
            for (std::size_t t = 0; t < inst.types.size(); ++t) {
                auto jt = it->find(inst.types[t]);
                if (jt == it->end()) throw ParseError("costs." + sig.id + ": missing type '" + inst.types[t] + "'");
                row[t] = parse_real(*jt, "costs." + sig.id);
            }
        } else {
            double c = parse_real(*it, "costs." + sig.id);
            row.assign(inst.types.size(), c);
        }
        inst.costs.push_back(row);
    }
    inst.finalize();
    return inst;
}

inline json instance_to_json(const Instance& inst) {
    json doc;
    doc["schema"] = "elicit-instance-v1";
    doc["states"] = inst.states;
    json sp = json::array();
    for (double p : inst.state_dist) sp.push_back(real_string(p));
    doc["state_probs"] = sp;
    doc["types"] = inst.types;
    json tp = json::array();
    for (const auto& row : inst.type_dist_given_state) {
        json r = json::array();
        for (double p : row) r.push_back(real_string(p));
        tp.push_back(r);
    }
    doc["type_probs"] = tp;
    json vals = json::array();
    for (double v : inst.values) vals.push_back(real_string(v));
    doc["values"] = vals;
    doc["value_bounds"] = {real_string(inst.v_lo), real_string(inst.v_hi)};
    doc["n_agents"] = inst.n_agents;
    json sigs = json::array();
    for (const auto& sig : inst.signals) {
        json sj;
        sj["id"] = sig.id;
        sj["kind"] = sig.kind == SignalKind::base ? "base" : sig.kind == SignalKind::combined ? "combined" : "dynamic";
        if (!sig.parts.empty()) sj["parts"] = sig.parts;
        if (!sig.trigger.empty()) {
            json tr = json::array();
            for (const auto& r : sig.trigger) {
                json rr = json::array();
                for (double x : r) rr.push_back(real_string(x));
                tr.push_back(rr);
            }
            sj["trigger"] = tr;
        }
        json rows;
        for (std::size_t k = 0; k < inst.support.size(); ++k) {
            std::string key = inst.states[static_cast<std::size_t>(inst.support[k].state)] + "," +
                              inst.types[static_cast<std::size_t>(inst.support[k].type)];
            json rr = json::array();
            for (double x : sig.table[k]) rr.push_back(real_string(x));
            rows[key] = rr;
        }
        sj["rows"] = rows;
        sigs.push_back(sj);
    }
    doc["signals"] = sigs;
    json costs;
    for (std::size_t i = 0; i < inst.signals.size(); ++i) {
        json row;
        for (std::size_t t = 0; t < inst.types.size(); ++t) row[inst.types[t]] = real_string(inst.costs[i][t]);
        costs[inst.signals[i].id] = row;
    }
    doc["costs"] = costs;
    return doc;
}

// ----- instance source: generator / inline / file -----

inline Instance instance_from_spec(const json& spec) {
    if (spec.contains("inline")) return instance_from_json(spec["inline"]);
    if (spec.contains("file")) return instance_from_json(parse_json_text(read_file(spec["file"]), spec["file"]));
    const std::string gen = require(spec, "generator", "instance").get<std::string>();
    json params = spec.value("params", json::object());
    auto real = [&](const std::string& k, double dflt) {
        return params.contains(k) ? parse_real(params[k], "params." + k) : dflt;
    };
    auto integer = [&](const std::string& k, int dflt) {
        return params.contains(k) ? parse_int(params[k], "params." + k) : dflt;
    };
    if (gen == "prop1") return make_prop1_instance(real("cost", 2.0), integer("n", 200));
    if (gen == "sec42") {
        std::string free_kind = params.value("free_signal", "sign");
        return make_sec42_instance(real("beta", 1.0), real("cost", 2.0), integer("n", 9),
                                   free_kind == "constant" ? FreeSignalKind::constant : FreeSignalKind::sign,
                                   params.value("with_dynamic", false));
    }
    if (gen == "voting")
        return make_voting_instance(real("p0", 0.2), real("p1", 0.9), real("cost", 2.0), integer("n", 9));
    if (gen == "thm1")
        return make_mimicry_pair(real("a", 0.0), real("b", 1.0), real("cost", 2.5), integer("n", 3)).first;
    throw ParseError("unknown instance generator '" + gen + "'");
}

// ----- mechanism -----

inline MechanismConfig mechanism_from_json(const json& mj, const Instance& inst) {
    MechanismConfig cfg;
    std::string kind = require(mj, "kind", "mechanism").get<std::string>();
    if (kind == "bdm") cfg.kind = MechanismKind::bdm;
    else if (kind == "bdm_betting") cfg.kind = MechanismKind::bdm_betting;
    else if (kind == "majority") cfg.kind = MechanismKind::majority;
    else if (kind == "majority_betting") cfg.kind = MechanismKind::majority_betting;
    else if (kind == "vcg_betting") cfg.kind = MechanismKind::vcg_betting;
    else throw ParseError("mechanism: unknown kind '" + kind + "'");
    cfg.v_lo = inst.v_lo;
    cfg.v_hi = inst.v_hi;
    if (mj.contains("schedule")) {
        const json& sj = mj["schedule"];
        ScheduleProfile prof;
        if (sj.contains("lambda0")) prof.lambda0 = parse_real(sj["lambda0"], "schedule.lambda0");
        if (sj.contains("lambda_exponent")) prof.lambda_exponent = parse_real(sj["lambda_exponent"], "schedule");
        if (sj.contains("delta_exponent")) prof.delta_exponent = parse_real(sj["delta_exponent"], "schedule");
        if (sj.contains("beta_exponent")) prof.beta_exponent = parse_real(sj["beta_exponent"], "schedule");
        cfg = schedule(inst.n_agents, prof, cfg);
    }
    if (mj.contains("lambda")) cfg.lambda = parse_real(mj["lambda"], "mechanism.lambda");
    if (mj.contains("delta")) cfg.delta = parse_real(mj["delta"], "mechanism.delta");
    if (mj.contains("beta")) cfg.beta = parse_real(mj["beta"], "mechanism.beta");
    if (mj.contains("vote_share_normalizer"))
        cfg.vote_normalizer = mj["vote_share_normalizer"] == "n-1" ? VoteShareNormalizer::over_n_minus_1
                                                                   : VoteShareNormalizer::over_n;
    // default scoring rule per mechanism family
    bool voting = cfg.kind == MechanismKind::majority || cfg.kind == MechanismKind::majority_betting;
    double lo = voting ? 0.0 : inst.v_lo;
    double hi = voting ? 1.0 : inst.v_hi;
    cfg.score = ScoreParams::crps(lo, hi, hi - lo);
    if (cfg.kind == MechanismKind::majority_betting) {
        cfg.score.use_quadratic = true;
        cfg.score.shift = (hi - lo) + 1.0;
    }
    if (cfg.kind == MechanismKind::vcg_betting) {
        cfg.score.use_quadratic = true;
        cfg.score.use_sign_crps = true;
        cfg.score.shift = (hi - lo) + 2.0;
    }
    if (mj.contains("score")) {
        const json& sc = mj["score"];
        if (sc.contains("crps_domain")) {
            cfg.score.z_lo = parse_real(sc["crps_domain"].at(0), "score.crps_domain");
            cfg.score.z_hi = parse_real(sc["crps_domain"].at(1), "score.crps_domain");
        }
        if (sc.contains("shift")) cfg.score.shift = parse_real(sc["shift"], "score.shift");
        if (sc.contains("quadratic")) cfg.score.use_quadratic = sc["quadratic"].get<bool>();
        if (sc.contains("sign_crps")) cfg.score.use_sign_crps = sc["sign_crps"].get<bool>();
    }
    cfg.validate();
    return cfg;
}

// ----- loss -----

inline LossFunction loss_from_json(const json& lj, const Instance& inst) {
    std::string kind = require(lj, "kind", "loss").get<std::string>();
    LossFunction loss;
    if (kind == "square") loss = LossFunction::square(inst.v_lo, inst.v_hi);
    else if (kind == "quantity_at_price") loss = LossFunction::quantity(parse_real(require(lj, "price", "loss"), "loss.price"));
    else if (kind == "revenue_max_price") loss = LossFunction::revenue(inst.v_lo, inst.v_hi);
    else if (kind == "utilitarian") loss = LossFunction::utilitarian();
    else throw ParseError("loss: unknown kind '" + kind + "'");
    if (lj.contains("space")) {
        loss.space_lo = parse_real(lj["space"].at(0), "loss.space");
        loss.space_hi = parse_real(lj["space"].at(1), "loss.space");
    }
    if (lj.contains("grid_points")) loss.grid_points = parse_int(lj["grid_points"], "loss.grid_points");
    return loss;
}

// ----- strategy / profile -----

inline Strategy strategy_from_json(const json& pj, const Instance& inst) {
    Strategy s;
    if (pj.contains("signal")) {
        s.mixture = {{pj["signal"].get<std::string>(), 1.0}};
    } else if (pj.contains("mixture")) {
        for (const auto& m : pj["mixture"])
            s.mixture.emplace_back(m.at(0).get<std::string>(), parse_real(m.at(1), "profile.mixture"));
    } else {
        throw ParseError("profile: needs 'signal' or 'mixture'");
    }
    const json& rj = require(pj, "reports", "profile");
    if (rj.is_string()) {
        std::string r = rj.get<std::string>();
        if (r == "posterior_mean") s.rule = ReportRule::posterior_mean;
        else if (r == "truthful_vote") s.rule = ReportRule::truthful_vote;
        else if (r == "exante_vote") s.rule = ReportRule::exante_vote;
        else throw ParseError("profile: unknown report rule '" + r + "'");
    } else {
        s.rule = ReportRule::explicit_map;
        for (const auto& [sig_id, rows] : rj.items()) {
            auto& rmap = s.explicit_reports[sig_id];
            for (const auto& [key, val] : rows.items())
                rmap[parse_realization_key(key, "profile.reports")] = parse_real(val, "profile.reports");
        }
        (void)inst;
    }
    double total = 0.0;
    for (const auto& [id, p] : s.mixture) {
        if (inst.signal_index(id) < 0)
            throw ValidationError("profile references unknown signal '" + id + "'");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw ValidationError("profile mixture does not sum to 1");
    return s;
}

inline json strategy_to_json(const Strategy& s) {
    json pj;
    if (s.mixture.size() == 1 && s.mixture[0].second == 1.0) {
        pj["signal"] = s.mixture[0].first;
    } else {
        json mix = json::array();
        for (const auto& [id, p] : s.mixture) mix.push_back({id, real_string(p)});
        pj["mixture"] = mix;
    }
    switch (s.rule) {
        case ReportRule::posterior_mean: pj["reports"] = "posterior_mean"; break;
        case ReportRule::truthful_vote: pj["reports"] = "truthful_vote"; break;
        case ReportRule::exante_vote: pj["reports"] = "exante_vote"; break;
        case ReportRule::explicit_map: {
            json rj;
            for (const auto& [sig_id, rows] : s.explicit_reports) {
                json rr;
                for (const auto& [real, rep] : rows) rr[realization_key(real)] = real_string(rep);
                rj[sig_id] = rr;
            }
            pj["reports"] = rj;
            break;
        }
    }
    return pj;
}

}  // namespace elicit
