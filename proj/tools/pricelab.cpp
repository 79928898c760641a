// pricelab command line: run | synth | bench | match
// exit codes: 0 ok, 1 usage, 2 data, 3 numerical

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pricelab/pricelab.hpp"

using namespace pricelab;

namespace {

Month month_arg(const std::string& text, const char* flag) {
    auto m = Month::parse(text);
    if (!m) throw UsageError(std::string(flag) + " expects YYYY-MM, got '" + text + "'");
    return *m;
}

PanelRecipe load_recipe(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open recipe " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("recipe " + path + " is not valid JSON: " + e.what());
    }
    return PanelRecipe::from_json(j);
}

ItemPanel pooled_panel(const std::vector<TransactionRecord>& records, double threshold) {
    std::vector<Observation> obs;
    std::map<ObservationKey, Observation> unique;
    for (const auto& r : records) {
        auto o = observation_of(r);
        unique.try_emplace(key_of(o), o);
    }
    for (auto& [k, o] : unique) obs.push_back(o);
    MatchOptions options;
    options.threshold = threshold;
    auto table = match_products(obs, options);
    return build_panel(records, table).panel.pool();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scanner-data price index engine"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "ingest, match, filter, index, extend and aggregate");
    RunConfig cfg;
    std::string base_text, end_text, method_text = "geks", splice_text = "none", partition_text = "none",
                                     agg_text = "laspeyres", emit_text = "csv", match_table_path;
    std::vector<std::string> filter_texts;
    run->add_option("-i,--input", cfg.inputs, "transaction CSV (repeatable)")->required();
    run->add_option("--match-table", match_table_path, "use this match table instead of matching");
    run->add_option("--base", base_text, "base month YYYY-MM (default: first month)");
    run->add_option("--end", end_text, "last month YYYY-MM (default: last month)");
    run->add_option("--index", method_text, "jevons|dutot|carli|harmonic|cswd|laspeyres|paasche|fisher|tornqvist|sato-vartia|geks|ccdi|gk|tpd");
    run->add_flag("--chained", cfg.chained, "chain adjacent-month bilateral links");
    run->add_option("--window", cfg.window, "multilateral window length in months");
    run->add_option("--splice", splice_text, "none|movement|window|half|mean|fbew|fbmw");
    run->add_option("--filter", filter_texts, "lowsale:L | extremeprice:LO,HI | extremeprice-quantile:QLO,QHI (repeatable, in order)");
    run->add_option("--aggregate", partition_text, "none|subgroup|outlet|both");
    run->add_option("--agg-formula", agg_text, "laspeyres|fisher");
    run->add_option("-o,--out", cfg.output, "output directory");
    run->add_option("--emit", emit_text, "csv|json");
    run->add_flag("--bench", cfg.benchmark, "also write bench.json for the pooled panel");
    run->add_flag("--allow-missing-cells", cfg.allow_missing_cells, "drop failed cells and renormalize weights");
    run->add_option("--match-threshold", cfg.match_threshold, "Jaro-Winkler acceptance threshold");
    run->add_flag("--limited-blocking", cfg.limited_blocking, "block on flags and percent only");
    run->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic transaction panel");
    std::string recipe_path, synth_out = "-";
    synth->add_option("--recipe", recipe_path, "recipe JSON")->required();
    synth->add_option("-o,--out", synth_out, "output CSV (default stdout)");

    // bench
    auto* bench = app.add_subcommand("bench", "time chain Jevons, chain Fisher and GEKS");
    std::string bench_recipe, bench_out = "-";
    std::vector<std::string> bench_inputs;
    int reps = 5;
    auto* bench_recipe_opt = bench->add_option("--recipe", bench_recipe, "synthesize the panel from a recipe");
    auto* bench_input_opt = bench->add_option("-i,--input", bench_inputs, "transaction CSV (repeatable)");
    bench_recipe_opt->excludes(bench_input_opt);
    bench->add_option("--reps", reps, "repetitions per method");
    bench->add_option("-o,--out", bench_out, "report JSON (default stdout)");

    // match
    auto* match = app.add_subcommand("match", "emit or import a match table");
    std::vector<std::string> match_inputs_paths;
    std::string match_import, match_out = "-";
    MatchOptions match_opts;
    auto* match_in_opt = match->add_option("-i,--input", match_inputs_paths, "transaction CSV (repeatable)");
    auto* match_import_opt = match->add_option("--import", match_import, "validate and re-emit an existing table");
    match_in_opt->excludes(match_import_opt);
    match->add_option("--threshold", match_opts.threshold, "Jaro-Winkler acceptance threshold");
    match->add_flag("--limited-blocking", match_opts.limited_blocking, "block on flags and percent only");
    match->add_option("-o,--out", match_out, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    try {
        if (*run) {
            if (!base_text.empty()) cfg.base = month_arg(base_text, "--base");
            if (!end_text.empty()) cfg.end = month_arg(end_text, "--end");
            if (!match_table_path.empty()) cfg.match_table = match_table_path;
            cfg.method = parse_formula(method_text);
            cfg.splice = parse_splice(splice_text);
            for (const auto& f : filter_texts) cfg.filters.push_back(FilterSpec::parse(f));
            cfg.partition = parse_partition(partition_text);
            cfg.agg_formula = parse_agg_formula(agg_text);
            if (emit_text == "csv") cfg.emit = EmitFormat::csv;
            else if (emit_text == "json") cfg.emit = EmitFormat::json;
            else throw UsageError("--emit must be csv or json");
            cfg.validate();

            auto result = run_pipeline(cfg);
            write_run_outputs(result, cfg);
            if (cfg.benchmark) {
                auto records = detail::load_inputs(cfg.inputs).records;
                auto report = benchmark(pooled_panel(records, cfg.match_threshold), 3, cfg.filters);
                write_text((std::filesystem::path(cfg.output) / "bench.json").string(), report.dump(2) + "\n");
            }
            std::cerr << "wrote " << result.rows.size() << " series rows to " << cfg.output << "\n";
        } else if (*synth) {
            auto panel = generate(load_recipe(recipe_path));
            std::ostringstream out;
            write_transactions(out, panel.records);
            write_text(synth_out, out.str());
        } else if (*bench) {
            std::vector<TransactionRecord> records;
            if (!bench_recipe.empty()) records = generate(load_recipe(bench_recipe)).records;
            else if (!bench_inputs.empty()) records = detail::load_inputs(bench_inputs).records;
            else throw UsageError("bench needs --recipe or --input");
            auto report = benchmark(pooled_panel(records, 0.90), reps);
            write_text(bench_out, report.dump(2) + "\n");
        } else if (*match) {
            MatchTable table;
            if (!match_import.empty()) {
                std::ifstream in(match_import, std::ios::binary);
                if (!in) throw DataError("cannot open " + match_import);
                table = MatchTable::read_csv(in);
            } else if (!match_inputs_paths.empty()) {
                table = match_inputs(match_inputs_paths, match_opts);
            } else {
                throw UsageError("match needs --input or --import");
            }
            std::ostringstream out;
            table.write_csv(out);
            write_text(match_out, out.str());
        }
    } catch (const Error& e) {
        std::cerr << "pricelab: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "pricelab: internal error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    }
    return 0;
}
