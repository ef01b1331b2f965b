#ifndef GAFATT_DATASET_HPP
#define GAFATT_DATASET_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "gafatt/error.hpp"
#include "gafatt/rng.hpp"

namespace gafatt {

enum class Phase { Listening, Writing, Resting };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::Listening: return "Listening";
        case Phase::Writing: return "Writing";
        case Phase::Resting: return "Resting";
    }
    return "?";
}

inline Phase phase_from_string(const std::string& text, const std::string& context) {
    if (text == "Listening") return Phase::Listening;
    if (text == "Writing") return Phase::Writing;
    if (text == "Resting") return Phase::Resting;
    fail(ErrorCategory::load, context + ": unknown phase '" + text + "'");
}

struct PhaseSegment {
    Phase phase = Phase::Listening;
    std::int64_t start_sample = 0;
    std::int64_t end_sample = 0;
};

using WordList = std::vector<std::string>;

struct TrialRecord {
    int subject_id = 0;
    int trial_id = 0;
    std::vector<PhaseSegment> segments;
    double snr_db = 0.0;
    WordList heard_words;
    WordList written_words;
    double attention_score = 0.0;

    const PhaseSegment& listening_segment() const {
        for (const auto& seg : segments)
            if (seg.phase == Phase::Listening) return seg;
        fail(ErrorCategory::schema, "trial " + std::to_string(trial_id) +
                                        " of subject " + std::to_string(subject_id) +
                                        " has no Listening segment");
    }
};

inline constexpr int kEegChannels = 14;
inline constexpr double kSamplingRateHz = 128.0;

// 14 rows of equal length; row-major storage.
struct EegSegment {
    std::size_t samples_per_channel = 0;
    std::vector<double> data;  // kEegChannels * samples_per_channel
    double sampling_rate_hz = kSamplingRateHz;

    const double* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * samples_per_channel; }
    double* channel(int c) { return data.data() + static_cast<std::size_t>(c) * samples_per_channel; }
};

// Full-session multi-channel signal for one subject, row-major.
struct SubjectSignal {
    int subject_id = 0;
    std::size_t n_samples = 0;
    std::vector<double> data;  // kEegChannels * n_samples

    const double* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * n_samples; }
    double* channel(int c) { return data.data() + static_cast<std::size_t>(c) * n_samples; }
};

struct DatasetManifest {
    std::string source;
    int n_subjects = 0;
    double sampling_rate_hz = kSamplingRateHz;
    bool has_seed = false;
    std::uint64_t seed = 0;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<TrialRecord> trials;     // ordered by (subject_id, file order)
    std::vector<SubjectSignal> signals;  // ordered by subject_id

    const SubjectSignal& signal_for(int subject_id) const {
        for (const auto& s : signals)
            if (s.subject_id == subject_id) return s;
        fail(ErrorCategory::schema, "no signal for subject " + std::to_string(subject_id));
    }
};

// Lowercase and strip surrounding punctuation; the comparison in
// attention_score is exact string equality of the normalized words.
inline std::string normalize_word(const std::string& word) {
    std::size_t begin = 0;
    std::size_t end = word.size();
    while (begin < end && std::ispunct(static_cast<unsigned char>(word[begin]))) ++begin;
    while (end > begin && std::ispunct(static_cast<unsigned char>(word[end - 1]))) --end;
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i)
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(word[i])));
    return out;
}

// Percent of heard words reproduced at the same position in the written
// transcript. Written words beyond the heard length are ignored.
inline double attention_score(const WordList& heard, const WordList& written) {
    if (heard.empty())
        fail(ErrorCategory::invalid_transcript, "attention_score: heard word list is empty");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < heard.size(); ++i) {
        if (i >= written.size()) break;
        if (normalize_word(heard[i]) == normalize_word(written[i])) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(heard.size());
}

inline EegSegment extract_listening_segment(const TrialRecord& trial, const SubjectSignal& signal) {
    const PhaseSegment& seg = trial.listening_segment();
    if (seg.start_sample < 0 || seg.end_sample <= seg.start_sample ||
        static_cast<std::size_t>(seg.end_sample) > signal.n_samples)
        fail(ErrorCategory::bounds,
             "listening segment [" + std::to_string(seg.start_sample) + ", " +
                 std::to_string(seg.end_sample) + ") outside signal of length " +
                 std::to_string(signal.n_samples));
    EegSegment out;
    out.samples_per_channel = static_cast<std::size_t>(seg.end_sample - seg.start_sample);
    out.data.resize(kEegChannels * out.samples_per_channel);
    for (int c = 0; c < kEegChannels; ++c) {
        const double* src = signal.channel(c) + seg.start_sample;
        std::copy(src, src + out.samples_per_channel, out.channel(c));
    }
    return out;
}

struct FoldAssignment {
    int n_folds = 0;
    std::vector<int> assignment;  // item index -> fold index

    std::vector<std::size_t> fold_items(int fold) const {
        std::vector<std::size_t> items;
        for (std::size_t i = 0; i < assignment.size(); ++i)
            if (assignment[i] == fold) items.push_back(i);
        return items;
    }
};

// Seeded uniform permutation chunked into n_folds near-equal parts; the
// first n_items % n_folds folds get the extra item.
inline FoldAssignment make_folds(std::size_t n_items, int n_folds, std::uint64_t seed) {
    if (n_folds < 1 || static_cast<std::size_t>(n_folds) > n_items)
        fail(ErrorCategory::partition,
             "make_folds: need 1 <= n_folds <= n_items, got n_folds=" + std::to_string(n_folds) +
                 ", n_items=" + std::to_string(n_items));
    std::vector<std::size_t> order(n_items);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x666f6c6473ULL));  // "folds"
    rng.shuffle(order);

    FoldAssignment folds;
    folds.n_folds = n_folds;
    folds.assignment.assign(n_items, -1);
    const std::size_t base = n_items / static_cast<std::size_t>(n_folds);
    const std::size_t remainder = n_items % static_cast<std::size_t>(n_folds);
    std::size_t cursor = 0;
    for (int f = 0; f < n_folds; ++f) {
        const std::size_t size = base + (static_cast<std::size_t>(f) < remainder ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) folds.assignment[order[cursor++]] = f;
    }
    return folds;
}

// Dataset-wide invariant checks shared by the loader and the generator.
inline void validate_dataset(const Dataset& dataset, const std::string& source_name) {
    for (const auto& trial : dataset.trials) {
        const std::string where = source_name + ": subject " + std::to_string(trial.subject_id) +
                                  " trial " + std::to_string(trial.trial_id);
        int listening = 0;
        std::int64_t cursor = -1;
        for (const auto& seg : trial.segments) {
            if (seg.start_sample < 0 || seg.end_sample <= seg.start_sample)
                fail(ErrorCategory::bounds, where + ": segment bounds [" +
                                                std::to_string(seg.start_sample) + ", " +
                                                std::to_string(seg.end_sample) + ") are invalid");
            if (seg.start_sample < cursor)
                fail(ErrorCategory::schema, where + ": segments overlap or are out of order");
            cursor = seg.end_sample;
            if (seg.phase == Phase::Listening) {
                ++listening;
                if (seg.end_sample - seg.start_sample < 2)
                    fail(ErrorCategory::schema, where + ": Listening segment shorter than 2 samples");
            }
        }
        if (listening != 1)
            fail(ErrorCategory::schema,
                 where + ": expected exactly one Listening segment, found " + std::to_string(listening));
        const auto& signal = dataset.signal_for(trial.subject_id);
        if (static_cast<std::size_t>(trial.segments.back().end_sample) > signal.n_samples)
            fail(ErrorCategory::bounds, where + ": segments exceed signal length " +
                                            std::to_string(signal.n_samples));
        if (!trial.heard_words.empty()) {
            const double recomputed = attention_score(trial.heard_words, trial.written_words);
            if (std::abs(recomputed - trial.attention_score) > 1e-6)
                fail(ErrorCategory::load,
                     where + ": stored score " + std::to_string(trial.attention_score) +
                         " disagrees with recomputed " + std::to_string(recomputed));
        }
    }
    for (std::size_t i = 0; i < dataset.trials.size(); ++i)
        for (std::size_t j = i + 1; j < dataset.trials.size(); ++j)
            if (dataset.trials[i].subject_id == dataset.trials[j].subject_id &&
                dataset.trials[i].trial_id == dataset.trials[j].trial_id)
                fail(ErrorCategory::schema,
                     source_name + ": duplicate trial id " + std::to_string(dataset.trials[i].trial_id) +
                         " for subject " + std::to_string(dataset.trials[i].subject_id));
}

}  // namespace gafatt

#endif  // GAFATT_DATASET_HPP
