// Command-line front end: fit, simulate, bench, reproduce.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 failed --check.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <shrinkt/bench.hpp>
#include <shrinkt/csv.hpp>
#include <shrinkt/json_io.hpp>
#include <shrinkt/pipelines.hpp>
#include <shrinkt/simulation.hpp>

namespace {

using namespace shrinkt;
namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCheck = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Accepts the canonical names plus the shorthand "two-step" (alpha picked by --alpha).
PipelineId resolve_pipeline(const std::string& name, double alpha) {
    if (name == "two-step" || name == "two_step") {
        if (alpha != 0 && alpha != 1) {
            throw UsageError("--alpha must be 0 or 1");
        }
        return alpha == 0 ? PipelineId::two_step_alpha0 : PipelineId::two_step_alpha1;
    }
    if (name == "adhoc") {
        return PipelineId::adhoc_pval2se;
    }
    if (name == "qvalue") {
        return PipelineId::qvalue_baseline;
    }
    if (auto id = parse_pipeline(name)) {
        return *id;
    }
    throw UsageError("unknown pipeline '" + name + "'");
}

SummaryStats read_summary_csv(const std::string& path) {
    const auto table = csv::read_file(path);
    const size_t cb = table.column("beta_hat");
    const size_t cs = table.column("se_hat");
    const size_t cd = table.column("df");
    SummaryStats data;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const double b = table.number(i, cb);
        const double s = table.number(i, cs);
        const double d = table.number(i, cd);
        auto where = [&](const char* col) { return "line " + std::to_string(i + 2) + ", column '" + col + "'"; };
        if (!std::isfinite(b)) {
            throw DataError(where("beta_hat") + ": non-finite value");
        }
        if (!std::isfinite(s) || s < 0) {
            throw DataError(where("se_hat") + ": must be finite and non-negative");
        }
        if (!(d > 0)) {
            throw DataError(where("df") + ": must be positive (Inf allowed)");
        }
        data.beta_hat.push_back(b);
        data.se.push_back(s);
        data.df.push_back(d);
    }
    if (data.size() == 0) {
        throw DataError("'" + path + "': no data rows");
    }
    return data;
}

nlohmann::json number_or_null(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

struct FitArgs {
    std::string input;
    std::string out;
    std::string pipeline = "two_step_alpha0";
    double alpha = 0;
    double penalty = 10;
    std::string config;
    std::string prior_out;
};

int cmd_fit(const FitArgs& args, const CLI::App& sub) {
    // Precedence: flags > config file > defaults.
    std::string pipeline_name = "two_step_alpha0";
    double alpha = 0;
    double penalty = 10;
    if (!args.config.empty()) {
        const auto j = read_json_file(args.config);
        pipeline_name = j.value("pipeline", pipeline_name);
        alpha = j.value("alpha", alpha);
        penalty = j.value("penalty", penalty);
    }
    if (sub.count("--pipeline")) {
        pipeline_name = args.pipeline;
    }
    if (sub.count("--alpha")) {
        alpha = args.alpha;
        if (!sub.count("--pipeline") && args.config.empty()) {
            pipeline_name = "two-step";
        }
    }
    if (sub.count("--penalty")) {
        penalty = args.penalty;
    }
    if (!(penalty >= 1)) {
        throw UsageError("--penalty must be >= 1");
    }
    const auto id = resolve_pipeline(pipeline_name, alpha);

    const auto data = read_summary_csv(args.input);
    PipelineOptions options;
    options.fit.penalty = penalty;
    const auto result = run_pipeline(id, data, options);
    for (const auto& w : result.warnings) {
        std::cerr << "warning: " << w << '\n';
    }

    using csv::format_double;
    csv::Table out;
    out.header = {"id", "beta_hat", "se_hat", "df", "se_moderated", "df_moderated", "post_mean", "post_sd",
                  "lfdr", "lfsr", "qvalue", "lower_cred_95", "upper_cred_95"};
    for (size_t j = 0; j < data.size(); ++j) {
        const auto& s = result.summaries[j];
        const double se_mod = result.moderated ? result.moderated->s_tilde[j] : data.se[j];
        const double df_mod = result.moderated ? result.moderated->nu_tilde[j] : data.df[j];
        out.rows.push_back({std::to_string(j + 1), format_double(data.beta_hat[j]), format_double(data.se[j]),
                            format_double(data.df[j]), format_double(se_mod), format_double(df_mod),
                            format_double(s.post_mean), format_double(s.post_sd), format_double(s.lfdr),
                            format_double(s.lfsr), format_double(s.qvalue), format_double(s.lower_cred_95),
                            format_double(s.upper_cred_95)});
    }
    csv::write_file(args.out, out);

    nlohmann::json report;
    report["pipeline"] = std::string(to_string(id));
    report["pi0"] = result.pi0_hat;
    report["s0_sq"] = result.moderated ? number_or_null(result.moderated->s0_sq) : nlohmann::json(nullptr);
    report["nu0"] = result.moderated ? (std::isinf(result.moderated->nu0) ? nlohmann::json("Inf") : nlohmann::json(result.moderated->nu0))
                                     : nlohmann::json(nullptr);
    report["log_likelihood"] = result.fit ? number_or_null(result.fit->fit.log_likelihood) : nlohmann::json(nullptr);
    report["alpha"] = result.fit ? nlohmann::json(result.fit->fit.alpha) : nlohmann::json(nullptr);
    report["excluded"] = result.n_excluded();
    std::cout << report.dump(2) << '\n';

    if (!args.prior_out.empty()) {
        if (!result.fit) {
            throw UsageError("--prior-out requires an empirical Bayes pipeline");
        }
        std::ofstream f(args.prior_out);
        f << prior_to_json(result.fit->fit.prior).dump(2) << '\n';
    }
    return 0;
}

struct SimulateArgs {
    std::string scenario = "spiky";
    size_t n = 2;
    size_t genes = 2000;
    std::optional<uint64_t> seed;
    std::optional<double> pi0;
    std::string mode = "gaussian";
    double nu0 = 4;
    size_t pool_size = 20;
    std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
    if (!args.seed) {
        throw UsageError("--seed is required");
    }
    auto spec = ScenarioSpec::make(args.scenario, args.n, args.genes);
    spec.pi0 = args.pi0;
    Rng rng(*args.seed);
    SimulatedData sim;
    if (args.mode == "gaussian") {
        sim = gaussian_mode_generate(spec, gaussian_analog(args.n, args.nu0), rng);
    } else if (args.mode == "counts") {
        sim = count_mode_generate(spec, args.pool_size, rng);
    } else {
        throw UsageError("--mode must be 'gaussian' or 'counts'");
    }
    using csv::format_double;
    csv::Table out;
    out.header = {"id", "beta_hat", "se_hat", "df", "beta_true", "is_null"};
    for (size_t j = 0; j < sim.data.size(); ++j) {
        out.rows.push_back({std::to_string(j + 1), format_double(sim.data.beta_hat[j]), format_double(sim.data.se[j]),
                            format_double(sim.data.df[j]), format_double(sim.truth.beta_true[j]),
                            sim.truth.null_mask[j] ? "1" : "0"});
    }
    csv::write_file(args.out, out);
    nlohmann::json report{{"scenario", args.scenario}, {"n", args.n}, {"genes", args.genes}, {"pi0_true", sim.truth.pi0_true}};
    std::cout << report.dump(2) << '\n';
    return 0;
}

struct BenchArgs {
    std::string scenarios = "all";
    std::vector<size_t> n;
    size_t replicates = 10;
    size_t genes = 2000;
    std::optional<uint64_t> seed;
    std::string out;
    bool check = false;
    std::string mode = "gaussian";
    size_t threads = 0;
    std::optional<double> pi0;
    std::string config;
    std::string scale = "desk";
};

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

int cmd_bench(const BenchArgs& args, const CLI::App& sub) {
    BenchConfig config;
    if (args.scale == "paper") {
        config.n_genes = 10000;
        config.replicates = 50;
    } else if (args.scale != "desk") {
        throw UsageError("--scale must be 'desk' or 'paper'");
    }
    if (!args.config.empty()) {
        apply_bench_json(read_json_file(args.config), config);
    }
    if (sub.count("--scenarios") && args.scenarios != "all") {
        config.scenarios = split_names(args.scenarios);
        for (const auto& s : config.scenarios) {
            try {
                find_scenario(s);
            } catch (const DomainError& e) {
                throw UsageError(e.what());
            }
        }
    }
    if (sub.count("--n")) {
        config.n_per_group = args.n;
    }
    if (sub.count("--replicates")) {
        config.replicates = args.replicates;
    }
    if (sub.count("--genes")) {
        config.n_genes = args.genes;
    }
    if (args.seed) {
        config.seed = *args.seed;
    } else if (args.config.empty() || !read_json_file(args.config).contains("seed")) {
        throw UsageError("--seed is required");
    }
    if (sub.count("--mode")) {
        if (args.mode == "gaussian") {
            config.mode = SimulationMode::gaussian;
        } else if (args.mode == "counts") {
            config.mode = SimulationMode::counts;
        } else {
            throw UsageError("--mode must be 'gaussian' or 'counts'");
        }
    }
    if (sub.count("--threads")) {
        config.threads = args.threads;
    }
    if (args.pi0) {
        config.pi0 = args.pi0;
    }

    const auto rows = run_bench(config);
    write_bench_outputs(args.out, rows);
    const auto checks = bench_checks(rows);
    bool all_pass = true;
    for (const auto& c : checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        all_pass = all_pass && c.passed;
    }
    size_t failed_rows = 0;
    for (const auto& r : rows) {
        failed_rows += r.error.empty() ? 0 : 1;
    }
    if (failed_rows) {
        std::cerr << "warning: " << failed_rows << " rows failed; see the error column of results.csv\n";
    }
    return args.check && !all_pass ? kExitCheck : 0;
}

int cmd_reproduce(const std::string& bench_dir, const std::string& out_dir) {
    const auto path = fs::path(bench_dir) / "results.csv";
    if (!fs::exists(path)) {
        throw DataError("no bench results at '" + path.string() + "'; run `shrinkt bench --out " + bench_dir + " --seed S` first");
    }
    const auto rows = rows_from_table(csv::read_file(path.string()));
    fs::create_directories(out_dir);
    for (const auto& [name, table] : reproduce_tables(rows)) {
        csv::write_file((fs::path(out_dir) / name).string(), table);
    }
    return 0;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Empirical Bayes shrinkage of effects with estimated standard errors"};
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a pipeline to a beta_hat,se_hat,df CSV");
    fit_cmd->add_option("--input", fit.input, "Input CSV")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--out", fit.out, "Output summary CSV")->required();
    fit_cmd->add_option("--pipeline", fit.pipeline,
                        "naive | two-step | two_step_alpha0 | two_step_alpha1 | adhoc_pval2se | qvalue_baseline");
    fit_cmd->add_option("--alpha", fit.alpha, "Scaling exponent for two-step (0 or 1)");
    fit_cmd->add_option("--penalty", fit.penalty, "Null-weight penalty (>= 1)");
    fit_cmd->add_option("--config", fit.config, "JSON with pipeline / alpha / penalty")->check(CLI::ExistingFile);
    fit_cmd->add_option("--prior-out", fit.prior_out, "Write the fitted prior as JSON");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate one simulated dataset");
    sim_cmd->add_option("--scenario", sim.scenario, "spiky | near-normal | flat-top | big-normal | bimodal");
    sim_cmd->add_option("--n", sim.n, "Samples per group");
    sim_cmd->add_option("--genes", sim.genes, "Number of units");
    sim_cmd->add_option("--seed", sim.seed, "Seed (required)");
    sim_cmd->add_option("--pi0", sim.pi0, "Null proportion (default U[0,1])")->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--mode", sim.mode, "gaussian | counts");
    sim_cmd->add_option("--nu0", sim.nu0, "Gaussian-mode variance prior df");
    sim_cmd->add_option("--pool", sim.pool_size, "Count-mode sample pool size");
    sim_cmd->add_option("--out", sim.out, "Output CSV")->required();

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Replicated simulation study");
    bench_cmd->add_option("--scenarios", bench.scenarios, "all or a comma-separated list");
    bench_cmd->add_option("--n", bench.n, "Samples per group, e.g. 2,4,10")->delimiter(',');
    bench_cmd->add_option("--replicates", bench.replicates, "Replicates per cell");
    bench_cmd->add_option("--genes", bench.genes, "Units per dataset");
    bench_cmd->add_option("--seed", bench.seed, "Master seed (required)");
    bench_cmd->add_option("--out", bench.out, "Output directory")->required();
    bench_cmd->add_flag("--check", bench.check, "Exit 3 unless every threshold check passes");
    bench_cmd->add_option("--mode", bench.mode, "gaussian | counts");
    bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = all cores)");
    bench_cmd->add_option("--pi0", bench.pi0, "Fixed null proportion")->check(CLI::Range(0.0, 1.0));
    bench_cmd->add_option("--config", bench.config, "JSON bench config")->check(CLI::ExistingFile);
    bench_cmd->add_option("--scale", bench.scale, "desk (2000 x 10) | paper (10000 x 50)");

    std::string repro_bench, repro_out;
    auto* repro_cmd = app.add_subcommand("reproduce", "Tidy plot-ready CSVs from bench output");
    repro_cmd->add_option("--bench", repro_bench, "Bench output directory")->required();
    repro_cmd->add_option("--out", repro_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (fit_cmd->parsed()) {
            return cmd_fit(fit, *fit_cmd);
        }
        if (sim_cmd->parsed()) {
            return cmd_simulate(sim);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(bench, *bench_cmd);
        }
        if (repro_cmd->parsed()) {
            return cmd_reproduce(repro_bench, repro_out);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
