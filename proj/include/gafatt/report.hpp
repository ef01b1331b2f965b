#ifndef GAFATT_REPORT_HPP
#define GAFATT_REPORT_HPP

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>
#include <unistd.h>

#include "gafatt/csv.hpp"
#include "gafatt/error.hpp"
#include "gafatt/harness.hpp"
#include "gafatt/rng.hpp"

namespace gafatt {

namespace detail {

inline std::string hostname() {
    char name[256] = {0};
    if (gethostname(name, sizeof(name) - 1) != 0) return "unknown";
    return name;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json history_to_json(const RunHistory& history) {
    return nlohmann::json{
        {"train_mse", history.train_mse}, {"val_mae", history.val_mae}, {"lr", history.lr}};
}

}  // namespace detail

// Everything outside the "nondeterministic" block is a pure function of
// (data, config, seed); reproducibility checks compare reports after dropping
// that one block.
inline nlohmann::json cv_report_to_json(const CvReport& report, const nlohmann::json& config_echo,
                                        int workers) {
    nlohmann::json j;
    j["schema"] = "gafatt-cv-report-v1";
    j["rng"] = Rng::algorithm;
    j["std_definition"] = "sample standard deviation (n-1 denominator) over folds";
    j["seed"] = report.seed;
    j["n_folds"] = report.n_folds;
    j["config"] = config_echo;

    nlohmann::json folds = nlohmann::json::array();
    nlohmann::json fold_maes = nlohmann::json::array();
    nlohmann::json baseline_maes = nlohmann::json::array();
    nlohmann::json fold_walls = nlohmann::json::array();
    for (const auto& fold : report.folds) {
        folds.push_back(nlohmann::json{{"fold", fold.fold},
                                       {"seed", fold.seed},
                                       {"mae", fold.mae},
                                       {"baseline_mae", fold.baseline_mae},
                                       {"history", detail::history_to_json(fold.history)}});
        fold_maes.push_back(fold.mae);
        baseline_maes.push_back(fold.baseline_mae);
        fold_walls.push_back(fold.history.wall_seconds);
    }
    j["folds"] = std::move(folds);
    j["fold_maes"] = std::move(fold_maes);
    j["mean_mae"] = report.mean_mae;
    j["std_mae"] = report.std_mae;
    j["baseline_fold_maes"] = std::move(baseline_maes);
    j["baseline_mean_mae"] = report.baseline_mean_mae;
    j["baseline_std_mae"] = report.baseline_std_mae;
    j["nondeterministic"] = nlohmann::json{{"created_utc", detail::utc_timestamp()},
                                           {"hostname", detail::hostname()},
                                           {"wall_seconds", report.wall_seconds},
                                           {"fold_wall_seconds", std::move(fold_walls)},
                                           {"workers", workers}};
    return j;
}

inline nlohmann::json train_report_to_json(const RunHistory& history, double val_mae,
                                           std::uint64_t seed, const nlohmann::json& config_echo) {
    nlohmann::json j;
    j["schema"] = "gafatt-train-report-v1";
    j["rng"] = Rng::algorithm;
    j["seed"] = seed;
    j["config"] = config_echo;
    j["history"] = detail::history_to_json(history);
    j["val_mae"] = val_mae;
    j["nondeterministic"] = nlohmann::json{{"created_utc", detail::utc_timestamp()},
                                           {"hostname", detail::hostname()},
                                           {"wall_seconds", history.wall_seconds}};
    return j;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorCategory::io, "write failed for " + path.string());
}

// Companion CSV for plotting per-epoch curves: fold,epoch,train_mse,val_mae,lr.
inline void write_curves_csv(const CvReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
    csv::write_row(out, {"fold", "epoch", "train_mse", "val_mae", "lr"});
    for (const auto& fold : report.folds) {
        for (std::size_t epoch = 0; epoch < fold.history.train_mse.size(); ++epoch) {
            csv::write_row(out, {std::to_string(fold.fold), std::to_string(epoch),
                                 csv::format_double(fold.history.train_mse[epoch]),
                                 csv::format_double(fold.history.val_mae[epoch]),
                                 csv::format_double(fold.history.lr[epoch])});
        }
    }
    if (!out) fail(ErrorCategory::io, "write failed for " + path.string());
}

}  // namespace gafatt

#endif  // GAFATT_REPORT_HPP
