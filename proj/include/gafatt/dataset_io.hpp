#ifndef GAFATT_DATASET_IO_HPP
#define GAFATT_DATASET_IO_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gafatt/csv.hpp"
#include "gafatt/dataset.hpp"
#include "gafatt/error.hpp"

namespace gafatt {

namespace detail {

inline std::vector<std::string> signal_header() {
    std::vector<std::string> header = {"sample_index"};
    for (int c = 1; c <= kEegChannels; ++c) {
        char name[8];
        std::snprintf(name, sizeof(name), "ch%02d", c);
        header.emplace_back(name);
    }
    return header;
}

inline const std::vector<std::string>& trials_header() {
    static const std::vector<std::string> header = {
        "trial_id", "phase", "start_sample", "end_sample", "snr_db", "heard", "written", "score"};
    return header;
}

inline std::string join_words(const WordList& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) out += '|';
        out += words[i];
    }
    return out;
}

inline WordList split_words(const std::string& text) {
    WordList words;
    if (text.empty()) return words;
    std::size_t begin = 0;
    while (true) {
        const std::size_t bar = text.find('|', begin);
        if (bar == std::string::npos) {
            words.push_back(text.substr(begin));
            break;
        }
        words.push_back(text.substr(begin, bar - begin));
        begin = bar + 1;
    }
    return words;
}

}  // namespace detail

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCategory::io, "cannot create directory " + dir.string());

    nlohmann::json manifest;
    manifest["source"] = dataset.manifest.source;
    manifest["n_subjects"] = dataset.manifest.n_subjects;
    manifest["sampling_rate_hz"] = dataset.manifest.sampling_rate_hz;
    if (dataset.manifest.has_seed) manifest["seed"] = dataset.manifest.seed;
    {
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        if (!out) fail(ErrorCategory::io, "cannot write " + (dir / "manifest.json").string());
        out << manifest.dump(2) << '\n';
    }

    for (const auto& signal : dataset.signals) {
        const auto path = dir / ("subject_" + std::to_string(signal.subject_id) + "_signal.csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
        csv::write_row(out, detail::signal_header());
        csv::Row row(1 + kEegChannels);
        for (std::size_t i = 0; i < signal.n_samples; ++i) {
            row[0] = std::to_string(i);
            for (int c = 0; c < kEegChannels; ++c)
                row[static_cast<std::size_t>(c) + 1] = csv::format_double(signal.channel(c)[i]);
            csv::write_row(out, row);
        }
    }

    std::map<int, std::vector<const TrialRecord*>> by_subject;
    for (const auto& trial : dataset.trials) by_subject[trial.subject_id].push_back(&trial);
    for (const auto& [subject_id, trials] : by_subject) {
        const auto path = dir / ("subject_" + std::to_string(subject_id) + "_trials.csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
        csv::write_row(out, detail::trials_header());
        for (const TrialRecord* trial : trials) {
            for (const auto& seg : trial->segments) {
                csv::Row row = {std::to_string(trial->trial_id),
                                to_string(seg.phase),
                                std::to_string(seg.start_sample),
                                std::to_string(seg.end_sample),
                                csv::format_double(trial->snr_db),
                                "",
                                "",
                                ""};
                if (seg.phase == Phase::Listening) {
                    row[5] = detail::join_words(trial->heard_words);
                    row[6] = detail::join_words(trial->written_words);
                    row[7] = csv::format_double(trial->attention_score);
                }
                csv::write_row(out, row);
            }
        }
    }
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream manifest_in(manifest_path, std::ios::binary);
    if (!manifest_in) fail(ErrorCategory::load, "cannot open " + manifest_path.string());
    nlohmann::json manifest;
    try {
        manifest_in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::load, manifest_path.string() + ": " + e.what());
    }

    Dataset dataset;
    try {
        dataset.manifest.source = manifest.at("source").get<std::string>();
        dataset.manifest.n_subjects = manifest.at("n_subjects").get<int>();
        dataset.manifest.sampling_rate_hz = manifest.at("sampling_rate_hz").get<double>();
        if (manifest.contains("seed")) {
            dataset.manifest.has_seed = true;
            dataset.manifest.seed = manifest.at("seed").get<std::uint64_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::load, manifest_path.string() + ": " + e.what());
    }
    if (dataset.manifest.sampling_rate_hz != kSamplingRateHz)
        fail(ErrorCategory::load, manifest_path.string() + ": sampling_rate_hz must be 128");

    // Subjects are discovered from the trial files present.
    std::vector<int> subject_ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("subject_", 0) != 0) continue;
        const std::string suffix = "_trials.csv";
        if (name.size() <= 8 + suffix.size() || name.substr(name.size() - suffix.size()) != suffix)
            continue;
        const std::string id_text = name.substr(8, name.size() - 8 - suffix.size());
        subject_ids.push_back(static_cast<int>(csv::parse_int(id_text, name)));
    }
    std::sort(subject_ids.begin(), subject_ids.end());
    if (subject_ids.size() != static_cast<std::size_t>(dataset.manifest.n_subjects))
        fail(ErrorCategory::load, dir.string() + ": manifest declares " +
                                      std::to_string(dataset.manifest.n_subjects) +
                                      " subjects but found " + std::to_string(subject_ids.size()) +
                                      " trial files");

    for (int subject_id : subject_ids) {
        const auto signal_path = dir / ("subject_" + std::to_string(subject_id) + "_signal.csv");
        const auto rows = csv::read_file(signal_path.string());
        if (rows.empty()) fail(ErrorCategory::load, signal_path.string() + ": empty file");
        if (rows[0] != detail::signal_header())
            fail(ErrorCategory::load,
                 signal_path.string() + ": row 1: expected header sample_index,ch01..ch" +
                     std::to_string(kEegChannels));
        SubjectSignal signal;
        signal.subject_id = subject_id;
        signal.n_samples = rows.size() - 1;
        signal.data.resize(kEegChannels * signal.n_samples);
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const std::string where = signal_path.string() + ": row " + std::to_string(r + 1);
            if (rows[r].size() != 1 + kEegChannels)
                fail(ErrorCategory::load, where + ": expected " + std::to_string(1 + kEegChannels) +
                                              " columns, got " + std::to_string(rows[r].size()));
            if (csv::parse_int(rows[r][0], where) != static_cast<std::int64_t>(r - 1))
                fail(ErrorCategory::load, where + ": sample_index must be contiguous from 0");
            for (int c = 0; c < kEegChannels; ++c) {
                const double v = csv::parse_double(rows[r][static_cast<std::size_t>(c) + 1], where);
                if (!std::isfinite(v)) fail(ErrorCategory::load, where + ": non-finite sample");
                signal.channel(c)[r - 1] = v;
            }
        }
        dataset.signals.push_back(std::move(signal));

        const auto trials_path = dir / ("subject_" + std::to_string(subject_id) + "_trials.csv");
        const auto trial_rows = csv::read_file(trials_path.string());
        if (trial_rows.empty() || trial_rows[0] != detail::trials_header())
            fail(ErrorCategory::load,
                 trials_path.string() + ": row 1: expected header trial_id,phase,start_sample,"
                                        "end_sample,snr_db,heard,written,score");

        std::vector<int> trial_order;
        std::map<int, TrialRecord> trials;
        for (std::size_t r = 1; r < trial_rows.size(); ++r) {
            const std::string where = trials_path.string() + ": row " + std::to_string(r + 1);
            const auto& row = trial_rows[r];
            if (row.size() != detail::trials_header().size())
                fail(ErrorCategory::load, where + ": expected " +
                                              std::to_string(detail::trials_header().size()) +
                                              " columns, got " + std::to_string(row.size()));
            const int trial_id = static_cast<int>(csv::parse_int(row[0], where));
            const Phase phase = phase_from_string(row[1], where);
            PhaseSegment seg{phase, csv::parse_int(row[2], where), csv::parse_int(row[3], where)};
            const double snr = csv::parse_double(row[4], where);

            auto [it, inserted] = trials.try_emplace(trial_id);
            TrialRecord& trial = it->second;
            if (inserted) {
                trial_order.push_back(trial_id);
                trial.subject_id = subject_id;
                trial.trial_id = trial_id;
                trial.snr_db = snr;
            } else if (trial.snr_db != snr) {
                fail(ErrorCategory::load, where + ": snr_db disagrees across segments of trial " +
                                              std::to_string(trial_id));
            }
            trial.segments.push_back(seg);
            if (phase == Phase::Listening) {
                if (row[5].empty())
                    fail(ErrorCategory::load, where + ": Listening row is missing the heard transcript");
                trial.heard_words = detail::split_words(row[5]);
                trial.written_words = detail::split_words(row[6]);
                trial.attention_score = csv::parse_double(row[7], where);
            }
        }
        for (int trial_id : trial_order) dataset.trials.push_back(std::move(trials.at(trial_id)));
    }

    validate_dataset(dataset, dir.string());
    return dataset;
}

}  // namespace gafatt

#endif  // GAFATT_DATASET_IO_HPP
