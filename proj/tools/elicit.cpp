// Command-line front end: run scenarios, list the bundled library, validate
// config files, and export CSV tables from result records.
//
// Exit codes: 0 success, 1 validation failure, 2 analysis assertion failure
// (failed expectation or violated bound), 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "elicit/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitAnalysis = 2;
constexpr int kExitIo = 3;

elicit::json load_scenario(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    if (fs::exists(name_or_path))
        return elicit::parse_json_text(elicit::read_file(name_or_path), name_or_path);
    for (const auto& name : elicit::list_scenarios())
        if (name == name_or_path) return elicit::bundled_scenario(name);
    throw elicit::IoError("no such file or bundled scenario: '" + name_or_path + "'");
}

int cmd_run(const std::string& target, const std::vector<std::string>& sets, long long seed, bool has_seed,
            const std::string& out_dir, bool exact, long long mc_draws) {
    elicit::json scenario = load_scenario(target);
    for (const auto& kv : sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw elicit::ParseError("--set expects key=value, got '" + kv + "'");
        elicit::apply_override(scenario, kv.substr(0, eq), kv.substr(eq + 1));
    }
    elicit::RunOptions opts;
    opts.out_dir = out_dir;
    if (has_seed) opts.seed_override = static_cast<std::uint64_t>(seed);
    opts.exact_only = exact;
    if (mc_draws > 0) opts.mc_draws = mc_draws;
    auto outcome = elicit::run_scenario_json(scenario, opts);
    std::printf("wrote %s\n", outcome.record_path.c_str());
    for (const auto& an : outcome.record["analyses"]) {
        std::string op = an.value("op", "?");
        std::string label = an.contains("label") ? an["label"].get<std::string>() : op;
        std::string status = !an.contains("pass") ? "done" : an["pass"].get<bool>() ? "ok" : "FAIL";
        std::printf("  %-24s %s\n", label.c_str(), status.c_str());
    }
    return outcome.analysis_failures == 0 ? kExitOk : kExitAnalysis;
}

int cmd_validate(const std::string& path) {
    elicit::json doc = elicit::parse_json_text(elicit::read_file(path), path);
    std::string schema = doc.value("schema", "");
    if (schema == "elicit-instance-v1") {
        elicit::Instance inst = elicit::instance_from_json(doc);
        auto rep = elicit::validate_instance(inst);
        for (const auto& issue : rep.issues)
            std::fprintf(stderr, "%s: [%s] %s\n", path.c_str(), issue.code.c_str(), issue.message.c_str());
        std::printf("%s: instance %s\n", path.c_str(), rep.ok() ? "valid" : "INVALID");
        return rep.ok() ? kExitOk : kExitValidation;
    }
    if (schema == "elicit-scenario-v1") {
        elicit::RunOptions opts;
        opts.write_files = false;
        elicit::ScenarioRunner runner(doc, opts);  // constructor validates everything
        (void)runner;
        std::printf("%s: scenario valid\n", path.c_str());
        return kExitOk;
    }
    std::fprintf(stderr, "%s: unknown schema '%s'\n", path.c_str(), schema.c_str());
    return kExitValidation;
}

int cmd_tables(const std::string& record_path, const std::string& out_dir) {
    elicit::json record = elicit::parse_json_text(elicit::read_file(record_path), record_path);
    auto files = elicit::emit_tables(record, out_dir);
    for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation laboratory for betting-augmented elicitation mechanisms"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a scenario file or bundled scenario");
    std::string run_target, run_out = "results";
    std::vector<std::string> run_sets;
    long long run_seed = 0, run_mc = 0;
    bool run_exact = false;
    run->add_option("scenario", run_target, "scenario file path or bundled name")->required();
    run->add_option("--set", run_sets, "override a field, dotted path: key=value");
    auto* seed_opt = run->add_option("--seed", run_seed, "override the scenario seed");
    run->add_option("--out", run_out, "output directory (default: results)");
    auto* exact_flag = run->add_flag("--exact", run_exact, "refuse Monte-Carlo fallbacks");
    run->add_option("--mc", run_mc, "Monte-Carlo draw count override")->excludes(exact_flag);

    auto* list = app.add_subcommand("list", "list bundled scenarios");

    auto* validate = app.add_subcommand("validate", "validate an instance or scenario file");
    std::string validate_path;
    validate->add_option("file", validate_path, "config file")->required();

    auto* tables = app.add_subcommand("tables", "emit CSV tables from a result record");
    std::string tables_record, tables_out = "tables";
    tables->add_option("record", tables_record, "result record file")->required();
    tables->add_option("--out", tables_out, "output directory (default: tables)");

    auto* dump = app.add_subcommand("dump-scenario", "print a bundled scenario file to stdout");
    std::string dump_name;
    dump->add_option("name", dump_name, "bundled scenario name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(run_target, run_sets, run_seed, seed_opt->count() > 0, run_out, run_exact, run_mc);
        if (list->parsed()) {
            for (const auto& name : elicit::list_scenarios()) std::printf("%s\n", name.c_str());
            return kExitOk;
        }
        if (validate->parsed()) return cmd_validate(validate_path);
        if (tables->parsed()) return cmd_tables(tables_record, tables_out);
        if (dump->parsed()) {
            std::fputs(elicit::canonical_text(elicit::bundled_scenario(dump_name)).c_str(), stdout);
            return kExitOk;
        }
    } catch (const elicit::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const elicit::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitValidation;
    } catch (const elicit::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
