#ifndef SHRINKT_BENCH_HPP
#define SHRINKT_BENCH_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "csv.hpp"
#include "pipelines.hpp"
#include "random.hpp"
#include "simulation.hpp"

/**
 * @file bench.hpp
 *
 * @brief Replicated simulation study over scenarios x sample sizes x
 * pipelines, with per-cell aggregation and threshold checks.
 *
 * Each replicate draws from its own generator seeded by
 * derive_seed(master, {scenario index, n, replicate}), so results do not
 * depend on the number of worker threads or their scheduling.
 */

namespace shrinkt {

enum class SimulationMode { gaussian, counts };

struct BenchConfig {
    std::vector<std::string> scenarios{"spiky", "near-normal", "flat-top", "big-normal", "bimodal"};
    std::vector<size_t> n_per_group{2, 4, 10};
    size_t replicates = 10;
    size_t n_genes = 2000;
    uint64_t seed = 1;
    SimulationMode mode = SimulationMode::gaussian;

    /**
     * Gaussian mode prior degrees of freedom for the true variances.
     */
    double nu0 = 4;

    /**
     * Count mode sample pool size; raised to 2n when smaller.
     */
    size_t pool_size = 20;

    /**
     * Fixed null proportion; U[0, 1] per replicate when empty.
     */
    std::optional<double> pi0;

    std::vector<PipelineId> pipelines{kAllPipelines.begin(), kAllPipelines.end()};
    PipelineOptions options;

    /**
     * 0 uses std::thread::hardware_concurrency().
     */
    size_t threads = 0;
};

struct BenchRow {
    std::string scenario;
    size_t n = 0;
    size_t replicate = 0;
    PipelineId pipeline = PipelineId::naive;
    double pi0_true = 1;
    EvalReport report;
    bool em_monotone = true;
    int em_iterations = 0;
    std::string error;
};

inline SimulatedData generate_replicate(const BenchConfig& config, size_t scenario_index, size_t n, size_t replicate) {
    Rng rng(derive_seed(config.seed, {scenario_index, n, replicate}));
    auto spec = ScenarioSpec::make(config.scenarios[scenario_index], n, config.n_genes);
    spec.pi0 = config.pi0;
    if (config.mode == SimulationMode::gaussian) {
        return gaussian_mode_generate(spec, gaussian_analog(n, config.nu0), rng);
    }
    return count_mode_generate(spec, config.pool_size, rng);
}

/**
 * Rows come out ordered by (scenario, n, replicate, pipeline) in the order
 * given by the config. A failing replicate or pipeline is recorded in the
 * row's `error` field and the run continues.
 */
inline std::vector<BenchRow> run_bench(const BenchConfig& config) {
    for (const auto& name : config.scenarios) {
        find_scenario(name);
    }
    struct Task {
        size_t scenario;
        size_t n;
        size_t replicate;
    };
    std::vector<Task> tasks;
    for (size_t s = 0; s < config.scenarios.size(); ++s) {
        for (auto n : config.n_per_group) {
            for (size_t r = 0; r < config.replicates; ++r) {
                tasks.push_back({s, n, r});
            }
        }
    }

    const size_t n_pipe = config.pipelines.size();
    std::vector<BenchRow> rows(tasks.size() * n_pipe);
    auto work = [&](size_t t) {
        const auto& task = tasks[t];
        BenchRow base;
        base.scenario = config.scenarios[task.scenario];
        base.n = task.n;
        base.replicate = task.replicate;
        std::optional<SimulatedData> sim;
        std::string gen_error;
        try {
            sim = generate_replicate(config, task.scenario, task.n, task.replicate);
            base.pi0_true = sim->truth.pi0_true;
        } catch (const std::exception& e) {
            gen_error = e.what();
            base.pi0_true = std::nan("");
        }
        for (size_t k = 0; k < n_pipe; ++k) {
            BenchRow row = base;
            row.pipeline = config.pipelines[k];
            if (!sim) {
                row.error = gen_error;
            } else {
                try {
                    const auto result = run_pipeline(row.pipeline, sim->data, config.options);
                    row.report = evaluate(sim->truth, sim->data.beta_hat, result);
                    if (result.fit) {
                        row.em_monotone = result.fit->fit.monotone();
                        row.em_iterations = result.fit->fit.n_iters;
                    }
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
            }
            if (!row.error.empty()) {
                const double nan = std::nan("");
                row.report = EvalReport{nan, 0, nan, nan, nan, nan, nan, nan, nan};
            }
            rows[t * n_pipe + k] = std::move(row);
        }
    };

    size_t n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, std::max<size_t>(1, tasks.size()));
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t t = next++; t < tasks.size(); t = next++) {
            work(t);
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t i = 0; i < n_threads; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return rows;
}

inline const std::vector<std::string>& results_header() {
    static const std::vector<std::string> h{"scenario", "n", "replicate", "pipeline", "pi0_true", "pi0_hat",
                                            "n_discoveries", "fdp", "power", "rmse", "rrmse", "coverage_all",
                                            "coverage_neg", "coverage_pos", "em_monotone", "em_iterations", "error"};
    return h;
}

inline std::string csv_safe(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

inline csv::Table results_table(const std::vector<BenchRow>& rows) {
    using csv::format_double;
    csv::Table t;
    t.header = results_header();
    for (const auto& r : rows) {
        const auto& e = r.report;
        t.rows.push_back({r.scenario, std::to_string(r.n), std::to_string(r.replicate), std::string(to_string(r.pipeline)),
                          format_double(r.pi0_true), format_double(e.pi0_hat), std::to_string(e.n_discoveries),
                          format_double(e.fdp), format_double(e.power), format_double(e.rmse), format_double(e.rrmse),
                          format_double(e.coverage_all), format_double(e.coverage_neg), format_double(e.coverage_pos),
                          r.em_monotone ? "1" : "0", std::to_string(r.em_iterations), r.error.empty() ? "NA" : csv_safe(r.error)});
    }
    return t;
}

/**
 * Inverse of results_table(), for reproduce runs on stored bench output.
 */
inline std::vector<BenchRow> rows_from_table(const csv::Table& t) {
    std::vector<size_t> col;
    for (const auto& h : results_header()) {
        col.push_back(t.column(h));
    }
    std::vector<BenchRow> rows;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& cells = t.rows[i];
        BenchRow r;
        r.scenario = cells[col[0]];
        r.n = static_cast<size_t>(t.number(i, col[1]));
        r.replicate = static_cast<size_t>(t.number(i, col[2]));
        const auto id = parse_pipeline(cells[col[3]]);
        if (!id) {
            throw DataError("line " + std::to_string(i + 2) + ": unknown pipeline '" + cells[col[3]] + "'");
        }
        r.pipeline = *id;
        r.pi0_true = t.number(i, col[4]);
        auto& e = r.report;
        e.pi0_hat = t.number(i, col[5]);
        e.n_discoveries = static_cast<size_t>(t.number(i, col[6]));
        e.fdp = t.number(i, col[7]);
        e.power = t.number(i, col[8]);
        e.rmse = t.number(i, col[9]);
        e.rrmse = t.number(i, col[10]);
        e.coverage_all = t.number(i, col[11]);
        e.coverage_neg = t.number(i, col[12]);
        e.coverage_pos = t.number(i, col[13]);
        r.em_monotone = cells[col[14]] == "1";
        r.em_iterations = static_cast<int>(t.number(i, col[15]));
        r.error = cells[col[16]] == "NA" ? "" : cells[col[16]];
        rows.push_back(std::move(r));
    }
    return rows;
}

/**
 * Mean over the finite values; NaN when there are none.
 */
inline double finite_mean(const std::vector<double>& v) {
    double s = 0;
    size_t n = 0;
    for (auto x : v) {
        if (std::isfinite(x)) {
            s += x;
            ++n;
        }
    }
    return n ? s / static_cast<double>(n) : std::nan("");
}

struct CellKey {
    std::string scenario;
    size_t n = 0;
    PipelineId pipeline = PipelineId::naive;

    auto operator<=>(const CellKey&) const = default;
};

/**
 * Per-cell metric columns, collected in first-seen cell order.
 */
struct CellMetrics {
    std::vector<double> pi0_true, pi0_hat, pi0_error, fdp, power, rrmse, coverage_all, coverage_neg, coverage_pos;
    size_t failures = 0;
};

inline std::vector<std::pair<CellKey, CellMetrics>> group_cells(const std::vector<BenchRow>& rows) {
    std::vector<std::pair<CellKey, CellMetrics>> out;
    std::map<CellKey, size_t> index;
    for (const auto& r : rows) {
        CellKey key{r.scenario, r.n, r.pipeline};
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.size()).first;
            out.push_back({key, {}});
        }
        auto& m = out[it->second].second;
        if (!r.error.empty()) {
            ++m.failures;
            continue;
        }
        m.pi0_true.push_back(r.pi0_true);
        m.pi0_hat.push_back(r.report.pi0_hat);
        m.pi0_error.push_back(r.report.pi0_hat - r.pi0_true);
        m.fdp.push_back(r.report.fdp);
        m.power.push_back(r.report.power);
        m.rrmse.push_back(r.report.rrmse);
        m.coverage_all.push_back(r.report.coverage_all);
        m.coverage_neg.push_back(r.report.coverage_neg);
        m.coverage_pos.push_back(r.report.coverage_pos);
    }
    return out;
}

inline csv::Table aggregate_table(const std::vector<BenchRow>& rows) {
    using csv::format_double;
    csv::Table t;
    t.header = {"scenario", "n", "pipeline", "replicates", "failures", "pi0_true", "pi0_hat", "pi0_error",
                "fdp", "power", "rrmse", "coverage_all", "coverage_neg", "coverage_pos"};
    for (const auto& [key, m] : group_cells(rows)) {
        t.rows.push_back({key.scenario, std::to_string(key.n), std::string(to_string(key.pipeline)),
                          std::to_string(m.pi0_true.size()), std::to_string(m.failures), format_double(finite_mean(m.pi0_true)),
                          format_double(finite_mean(m.pi0_hat)), format_double(finite_mean(m.pi0_error)),
                          format_double(finite_mean(m.fdp)), format_double(finite_mean(m.power)),
                          format_double(finite_mean(m.rrmse)), format_double(finite_mean(m.coverage_all)),
                          format_double(finite_mean(m.coverage_neg)), format_double(finite_mean(m.coverage_pos))});
    }
    return t;
}

struct CheckResult {
    std::string name;
    bool passed = true;

    /**
     * Informational only; never affects `passed`.
     */
    bool flagged = false;
    std::string detail;
};

inline bool is_bimodal(const std::string& scenario) { return scenario == "bimodal"; }

/**
 * Threshold checks on the bench output. A check with no applicable cells
 * passes vacuously and says so in its detail.
 */
inline std::vector<CheckResult> bench_checks(const std::vector<BenchRow>& rows) {
    using csv::format_double;
    const auto cells = group_cells(rows);
    auto find = [&](const std::string& s, size_t n, PipelineId id) -> const CellMetrics* {
        for (const auto& [k, m] : cells) {
            if (k.scenario == s && k.n == n && k.pipeline == id) {
                return &m;
            }
        }
        return nullptr;
    };
    std::vector<std::string> scenarios;
    std::vector<size_t> ns;
    for (const auto& [k, m] : cells) {
        if (std::find(scenarios.begin(), scenarios.end(), k.scenario) == scenarios.end()) {
            scenarios.push_back(k.scenario);
        }
        if (std::find(ns.begin(), ns.end(), k.n) == ns.end()) {
            ns.push_back(k.n);
        }
    }
    std::vector<CheckResult> out;

    {
        CheckResult c{"naive_anticonservative_pi0"};
        const auto* naive = find("spiky", 2, PipelineId::naive);
        const auto* two = find("spiky", 2, PipelineId::two_step_alpha0);
        if (!naive || !two) {
            c.detail = "spiky n=2 cells absent; not evaluated";
        } else {
            const double under = -finite_mean(naive->pi0_error);
            const double bias = finite_mean(two->pi0_error);
            c.passed = under > 0.1 && bias >= -0.02;
            c.detail = "mean(pi0 - pi0_naive)=" + format_double(under) + " (>0.1), mean(pi0_two_step - pi0)=" +
                       format_double(bias) + " (>=-0.02)";
        }
        out.push_back(c);
    }

    {
        CheckResult c{"fdr_control"};
        std::string worst;
        double worst_fdp = -1, naive_max = -1;
        size_t evaluated = 0;
        for (const auto& s : scenarios) {
            if (is_bimodal(s)) {
                continue;
            }
            for (auto n : ns) {
                if (const auto* m = find(s, n, PipelineId::two_step_alpha0)) {
                    ++evaluated;
                    const double f = finite_mean(m->fdp);
                    if (!(f <= 0.08)) {
                        c.passed = false;
                    }
                    if (f > worst_fdp) {
                        worst_fdp = f;
                        worst = s + " n=" + std::to_string(n);
                    }
                }
            }
            if (const auto* m = find(s, 2, PipelineId::naive)) {
                naive_max = std::max(naive_max, finite_mean(m->fdp));
            }
        }
        if (evaluated == 0) {
            c.detail = "no two_step_alpha0 cells; not evaluated";
        } else {
            if (naive_max >= 0 && !(naive_max > 0.15)) {
                c.passed = false;
            }
            c.detail = "max two_step_alpha0 mean FDP=" + format_double(worst_fdp) + " at " + worst +
                       " (<=0.08); max naive n=2 mean FDP=" + format_double(naive_max) + " (>0.15)";
        }
        out.push_back(c);
    }

    {
        CheckResult c{"rrmse_below_one"};
        double worst = -1, worst_high = -1;
        std::string where, where_high;
        for (const auto& [k, m] : cells) {
            if (k.pipeline != PipelineId::two_step_alpha0) {
                continue;
            }
            const double r = finite_mean(m.rrmse);
            if (!(r < 1)) {
                c.passed = false;
            }
            if (r > worst) {
                worst = r;
                where = k.scenario + " n=" + std::to_string(k.n);
            }
            std::vector<double> high;
            for (size_t i = 0; i < m.rrmse.size(); ++i) {
                if (m.pi0_true[i] > 0.9) {
                    high.push_back(m.rrmse[i]);
                }
            }
            if (!high.empty()) {
                const double h = finite_mean(high);
                if (!(h < 0.5)) {
                    c.passed = false;
                }
                if (h > worst_high) {
                    worst_high = h;
                    where_high = k.scenario + " n=" + std::to_string(k.n);
                }
            }
        }
        c.detail = "max cell mean RRMSE=" + format_double(worst) + " at " + where + " (<1); max pi0>0.9 mean RRMSE=" +
                   (worst_high < 0 ? std::string("NA (no such replicates)") : format_double(worst_high) + " at " + where_high) +
                   " (<0.5)";
        out.push_back(c);
    }

    {
        CheckResult c{"coverage_n10"};
        double lo = 1, hi = 0;
        size_t evaluated = 0;
        for (const auto& s : scenarios) {
            if (is_bimodal(s)) {
                continue;
            }
            if (const auto* m = find(s, 10, PipelineId::two_step_alpha0)) {
                ++evaluated;
                const double cov = finite_mean(m->coverage_all);
                lo = std::min(lo, cov);
                hi = std::max(hi, cov);
                if (!(cov >= 0.92 && cov <= 0.98)) {
                    c.passed = false;
                }
            }
        }
        c.detail = evaluated ? "all-observation coverage range [" + format_double(lo) + ", " + format_double(hi) + "] (within [0.92, 0.98])"
                             : "no n=10 cells; not evaluated";
        out.push_back(c);
    }

    {
        CheckResult c{"coverage_neg_n2_flag"};
        std::string low;
        for (const auto& s : scenarios) {
            if (const auto* m = find(s, 2, PipelineId::two_step_alpha0)) {
                const double cov = finite_mean(m->coverage_neg);
                if (cov < 0.92) {
                    low += (low.empty() ? "" : "; ") + s + "=" + format_double(cov);
                }
            }
        }
        c.flagged = !low.empty();
        c.detail = c.flagged ? "FLAG significant-negative coverage below 0.92 at n=2: " + low
                             : "significant-negative coverage at n=2 not below 0.92";
        out.push_back(c);
    }

    {
        CheckResult c{"em_monotone"};
        size_t fits = 0, bad = 0, failures = 0;
        for (const auto& r : rows) {
            if (!r.error.empty()) {
                ++failures;
                continue;
            }
            if (r.em_iterations > 0) {
                ++fits;
                bad += r.em_monotone ? 0 : 1;
            }
        }
        c.passed = bad == 0;
        c.detail = std::to_string(fits - bad) + "/" + std::to_string(fits) + " fits monotone; " + std::to_string(failures) +
                   " failed rows";
        out.push_back(c);
    }
    return out;
}

inline csv::Table checks_table(const std::vector<CheckResult>& checks) {
    csv::Table t;
    t.header = {"check", "passed", "flagged", "detail"};
    for (const auto& c : checks) {
        t.rows.push_back({c.name, c.passed ? "1" : "0", c.flagged ? "1" : "0", csv_safe(c.detail)});
    }
    return t;
}

/**
 * Tidy per-replicate tables: pi0, fdp, power, rrmse and coverage (three
 * strata: all, significant_negative, significant_positive).
 */
inline std::map<std::string, csv::Table> reproduce_tables(const std::vector<BenchRow>& rows) {
    using csv::format_double;
    std::map<std::string, csv::Table> out;
    const std::vector<std::string> key{"scenario", "n", "replicate", "pipeline"};
    auto make = [&](const std::vector<std::string>& extra) {
        csv::Table t;
        t.header = key;
        t.header.insert(t.header.end(), extra.begin(), extra.end());
        return t;
    };
    auto& pi0 = out["pi0.csv"] = make({"pi0_true", "pi0_hat"});
    auto& fdp = out["fdp.csv"] = make({"fdp"});
    auto& power = out["power.csv"] = make({"power"});
    auto& rrmse = out["rrmse.csv"] = make({"rrmse"});
    auto& coverage = out["coverage.csv"] = make({"stratum", "coverage"});
    for (const auto& r : rows) {
        const std::vector<std::string> k{r.scenario, std::to_string(r.n), std::to_string(r.replicate), std::string(to_string(r.pipeline))};
        auto with = [&](std::vector<std::string> extra) {
            auto row = k;
            row.insert(row.end(), extra.begin(), extra.end());
            return row;
        };
        pi0.rows.push_back(with({format_double(r.pi0_true), format_double(r.report.pi0_hat)}));
        fdp.rows.push_back(with({format_double(r.report.fdp)}));
        power.rows.push_back(with({format_double(r.report.power)}));
        rrmse.rows.push_back(with({format_double(r.report.rrmse)}));
        coverage.rows.push_back(with({"all", format_double(r.report.coverage_all)}));
        coverage.rows.push_back(with({"significant_negative", format_double(r.report.coverage_neg)}));
        coverage.rows.push_back(with({"significant_positive", format_double(r.report.coverage_pos)}));
    }
    return out;
}

inline void write_bench_outputs(const std::filesystem::path& dir, const std::vector<BenchRow>& rows) {
    std::filesystem::create_directories(dir);
    csv::write_file((dir / "results.csv").string(), results_table(rows));
    csv::write_file((dir / "aggregate.csv").string(), aggregate_table(rows));
    csv::write_file((dir / "checks.csv").string(), checks_table(bench_checks(rows)));
}

}

#endif
