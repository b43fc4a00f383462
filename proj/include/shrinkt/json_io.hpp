#ifndef SHRINKT_JSON_IO_HPP
#define SHRINKT_JSON_IO_HPP

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bench.hpp"
#include "errors.hpp"
#include "simulation.hpp"
#include "unimodal_prior.hpp"

/**
 * @file json_io.hpp
 *
 * @brief JSON forms of fitted priors and bench configurations.
 *
 * Prior: {"weights": [...], "intervals": [[a, b], ...]}.
 *
 * Bench config: any subset of
 * {"scenarios", "n", "replicates", "genes", "seed", "mode", "nu0",
 *  "pool_size", "pi0", "threads", "penalty"}.
 */

namespace shrinkt {

inline nlohmann::json prior_to_json(const UnimodalPrior& g) {
    nlohmann::json out;
    out["weights"] = std::vector<double>(g.weights().begin(), g.weights().end());
    auto intervals = nlohmann::json::array();
    for (const auto& c : g.components()) {
        intervals.push_back({c.lower, c.upper});
    }
    out["intervals"] = intervals;
    return out;
}

inline UnimodalPrior prior_from_json(const nlohmann::json& j) {
    try {
        auto weights = j.at("weights").get<std::vector<double>>();
        std::vector<Interval> comps;
        for (const auto& iv : j.at("intervals")) {
            if (!iv.is_array() || iv.size() != 2) {
                throw DataError("prior JSON: each interval must be [lower, upper]");
            }
            comps.push_back(Interval{iv[0].get<double>(), iv[1].get<double>()});
        }
        return UnimodalPrior(std::move(weights), std::move(comps));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("prior JSON: ") + e.what());
    }
}

/**
 * Overlay the keys present in `j` onto `config`.
 */
inline void apply_bench_json(const nlohmann::json& j, BenchConfig& config) {
    try {
        if (j.contains("scenarios")) {
            config.scenarios = j["scenarios"].get<std::vector<std::string>>();
            for (const auto& s : config.scenarios) {
                find_scenario(s);
            }
        }
        if (j.contains("n")) {
            config.n_per_group = j["n"].get<std::vector<size_t>>();
        }
        if (j.contains("replicates")) {
            config.replicates = j["replicates"].get<size_t>();
        }
        if (j.contains("genes")) {
            config.n_genes = j["genes"].get<size_t>();
        }
        if (j.contains("seed")) {
            config.seed = j["seed"].get<uint64_t>();
        }
        if (j.contains("mode")) {
            const auto m = j["mode"].get<std::string>();
            if (m == "gaussian") {
                config.mode = SimulationMode::gaussian;
            } else if (m == "counts") {
                config.mode = SimulationMode::counts;
            } else {
                throw DataError("config: mode must be 'gaussian' or 'counts'");
            }
        }
        if (j.contains("nu0")) {
            config.nu0 = j["nu0"].get<double>();
        }
        if (j.contains("pool_size")) {
            config.pool_size = j["pool_size"].get<size_t>();
        }
        if (j.contains("pi0")) {
            config.pi0 = j["pi0"].get<double>();
        }
        if (j.contains("threads")) {
            config.threads = j["threads"].get<size_t>();
        }
        if (j.contains("penalty")) {
            config.options.fit.penalty = j["penalty"].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config JSON: ") + e.what());
    }
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
}

}

#endif
