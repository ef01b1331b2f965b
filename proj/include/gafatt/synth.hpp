#ifndef GAFATT_SYNTH_HPP
#define GAFATT_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "gafatt/dataset.hpp"
#include "gafatt/error.hpp"
#include "gafatt/rng.hpp"

namespace gafatt {

struct SynthConfig {
    int n_subjects = 2;
    int trials_per_subject = 144;
    double listening_min_s = 3.0;
    double listening_max_s = 5.0;
    double writing_min_s = 2.0;
    double writing_max_s = 4.0;
    double resting_min_s = 1.0;
    double resting_max_s = 2.0;
    std::vector<double> snr_levels_db = {-12.0, -6.0, 0.0, 6.0, 12.0, 18.0};
    // The oscillatory part of every listening clip uses this fixed tone set
    // (random phases, lightly jittered amplitudes). Two properties matter:
    // the tones are common across trials, and they are slow relative to the
    // post-PAA sample rate (~13-21 Hz for 64 bins over 3-5 s), so after
    // min-max rescaling the surviving texture axis of the encoded images is
    // the smooth-tone vs broadband-noise contrast - i.e. the SNR level that
    // drives the score. That is what lets a small model learn the coupling
    // at desk scale.
    std::vector<double> tone_freqs_hz = {0.6, 0.9, 1.3};
    std::vector<double> tone_amps = {1.0, 0.8, 0.6};
    int sentence_min_words = 3;
    int sentence_max_words = 13;
    // Ground-truth score model: the mean score rises linearly with the SNR
    // rank, from score_mean_lo at the noisiest level to score_mean_hi at the
    // cleanest, plus uniform jitter in [-score_jitter, +score_jitter]. The
    // target is then realized exactly as 100*m/len via stochastic rounding of
    // the match count m, so transcript-recomputed scores agree with stored
    // ones and per-level group means stay unbiased.
    double score_mean_lo = 40.0;
    double score_mean_hi = 90.0;
    double score_jitter = 8.0;
};

namespace detail {

inline const std::array<const char*, 96>& synth_vocabulary() {
    static const std::array<const char*, 96> words = {
        "the",    "cat",    "sat",    "river",  "stone",  "light",  "sound",  "green",
        "table",  "chair",  "window", "garden", "music",  "paper",  "cloud",  "train",
        "small",  "quick",  "yellow", "bottle", "candle", "dream",  "forest", "glass",
        "house",  "island", "jacket", "kettle", "ladder", "mirror", "needle", "orange",
        "pencil", "quiet",  "rabbit", "shadow", "ticket", "under",  "valley", "water",
        "bridge", "corner", "dinner", "engine", "father", "ground", "hammer", "ink",
        "jungle", "kitten", "lemon",  "market", "night",  "ocean",  "pocket", "queen",
        "road",   "silver", "tower",  "uncle",  "violet", "winter", "box",    "year",
        "zero",   "apple",  "bird",   "coast",  "door",   "early",  "field",  "grass",
        "hill",   "iron",   "jam",    "key",    "lamp",   "moon",   "nest",   "oak",
        "pond",   "quilt",  "rain",   "sand",   "tree",   "urn",    "vine",   "wall",
        "axe",    "bell",   "cup",    "duck",   "egg",    "fox",    "gate",   "hat",
    };
    return words;
}

inline double synth_base_score(const SynthConfig& config, std::size_t snr_rank, std::size_t n_levels) {
    if (n_levels <= 1) return 0.5 * (config.score_mean_lo + config.score_mean_hi);
    const double t = static_cast<double>(snr_rank) / static_cast<double>(n_levels - 1);
    return config.score_mean_lo + (config.score_mean_hi - config.score_mean_lo) * t;
}

struct TrialPlan {
    std::int64_t listening_samples = 0;
    std::int64_t writing_samples = 0;
    std::int64_t resting_samples = 0;
    double snr_db = 0.0;
    std::size_t snr_rank = 0;
};

}  // namespace detail

inline void validate_synth_config(const SynthConfig& config) {
    if (config.n_subjects < 1 || config.trials_per_subject < 1)
        fail(ErrorCategory::config, "synthetic dataset needs at least one subject and one trial");
    if (config.snr_levels_db.empty())
        fail(ErrorCategory::config, "synthetic dataset needs a non-empty SNR level set");
    if (!(config.listening_min_s > 0) || config.listening_max_s < config.listening_min_s)
        fail(ErrorCategory::config, "bad listening duration range");
    if (static_cast<std::int64_t>(config.listening_min_s * kSamplingRateHz) < 2)
        fail(ErrorCategory::config, "listening duration must cover at least 2 samples");
    if (!(config.writing_min_s > 0) || config.writing_max_s < config.writing_min_s ||
        !(config.resting_min_s > 0) || config.resting_max_s < config.resting_min_s)
        fail(ErrorCategory::config, "bad writing/resting duration range");
    if (config.sentence_min_words < 1 || config.sentence_max_words < config.sentence_min_words)
        fail(ErrorCategory::config, "bad sentence length range");
    if (config.tone_freqs_hz.empty() || config.tone_freqs_hz.size() != config.tone_amps.size())
        fail(ErrorCategory::config, "tone frequency and amplitude lists must match and be non-empty");
    for (double f : config.tone_freqs_hz)
        if (!(f > 0) || f >= kSamplingRateHz / 2)
            fail(ErrorCategory::config, "tone frequencies must lie in (0, 64) Hz");
    for (double a : config.tone_amps)
        if (!(a > 0)) fail(ErrorCategory::config, "tone amplitudes must be positive");
    if (config.score_jitter < 0 || config.score_mean_lo < 0 || config.score_mean_hi > 100 ||
        config.score_mean_hi < config.score_mean_lo)
        fail(ErrorCategory::config, "bad score range: need 0 <= lo <= hi <= 100 and jitter >= 0");
}

// Deterministic synthetic dataset shaped like the trial data model: the
// listening signal is a 3-tone oscillatory mixture (1-8 Hz) plus white noise
// scaled to the trial's SNR; writing/resting stretches are plain noise.
// Transcripts are built so that the stored attention score is exactly the
// positional-match score of (heard, written).
inline Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    validate_synth_config(config);

    std::vector<double> levels = config.snr_levels_db;
    std::sort(levels.begin(), levels.end());
    const auto& vocab = detail::synth_vocabulary();

    Dataset dataset;
    dataset.manifest.source = "synthetic";
    dataset.manifest.n_subjects = config.n_subjects;
    dataset.manifest.sampling_rate_hz = kSamplingRateHz;
    dataset.manifest.has_seed = true;
    dataset.manifest.seed = seed;

    const Rng root(derive_seed(seed, 0x73796e7468ULL));  // "synth"
    for (int s = 1; s <= config.n_subjects; ++s) {
        Rng subject_rng = root.derive(static_cast<std::uint64_t>(s));

        // Balanced SNR assignment: round-robin over sorted levels, then a
        // subject-seeded shuffle of the sequence.
        std::vector<std::size_t> snr_ranks(static_cast<std::size_t>(config.trials_per_subject));
        for (std::size_t t = 0; t < snr_ranks.size(); ++t) snr_ranks[t] = t % levels.size();
        subject_rng.shuffle(snr_ranks);

        // Pass 1: plan segment lengths so the session buffer can be sized.
        std::vector<detail::TrialPlan> plans(static_cast<std::size_t>(config.trials_per_subject));
        std::int64_t total_samples = 0;
        for (int t = 0; t < config.trials_per_subject; ++t) {
            Rng meta = subject_rng.derive(0x100000ULL + static_cast<std::uint64_t>(t));
            auto& plan = plans[static_cast<std::size_t>(t)];
            plan.listening_samples = static_cast<std::int64_t>(
                std::round(meta.uniform(config.listening_min_s, config.listening_max_s) * kSamplingRateHz));
            plan.writing_samples = static_cast<std::int64_t>(
                std::round(meta.uniform(config.writing_min_s, config.writing_max_s) * kSamplingRateHz));
            plan.resting_samples = static_cast<std::int64_t>(
                std::round(meta.uniform(config.resting_min_s, config.resting_max_s) * kSamplingRateHz));
            plan.listening_samples = std::max<std::int64_t>(plan.listening_samples, 2);
            plan.writing_samples = std::max<std::int64_t>(plan.writing_samples, 1);
            plan.resting_samples = std::max<std::int64_t>(plan.resting_samples, 1);
            plan.snr_rank = snr_ranks[static_cast<std::size_t>(t)];
            plan.snr_db = levels[plan.snr_rank];
            total_samples += plan.listening_samples + plan.writing_samples + plan.resting_samples;
        }

        SubjectSignal signal;
        signal.subject_id = s;
        signal.n_samples = static_cast<std::size_t>(total_samples);
        signal.data.assign(kEegChannels * signal.n_samples, 0.0);

        std::int64_t cursor = 0;
        for (int t = 0; t < config.trials_per_subject; ++t) {
            const auto& plan = plans[static_cast<std::size_t>(t)];
            Rng trial_rng = subject_rng.derive(0x200000ULL + static_cast<std::uint64_t>(t));

            TrialRecord trial;
            trial.subject_id = s;
            trial.trial_id = t + 1;
            trial.snr_db = plan.snr_db;
            const std::int64_t listen_end = cursor + plan.listening_samples;
            const std::int64_t write_end = listen_end + plan.writing_samples;
            const std::int64_t rest_end = write_end + plan.resting_samples;
            trial.segments = {
                {Phase::Listening, cursor, listen_end},
                {Phase::Writing, listen_end, write_end},
                {Phase::Resting, write_end, rest_end},
            };

            const int len = config.sentence_min_words +
                            static_cast<int>(trial_rng.below(static_cast<std::uint64_t>(
                                config.sentence_max_words - config.sentence_min_words + 1)));
            const double base = detail::synth_base_score(config, plan.snr_rank, levels.size());
            const double target = std::clamp(
                base + trial_rng.uniform(-config.score_jitter, config.score_jitter), 0.0, 100.0);
            const double exact_matches = target * len / 100.0;
            int matches = static_cast<int>(std::floor(exact_matches));
            if (trial_rng.uniform01() < exact_matches - std::floor(exact_matches)) ++matches;
            matches = std::clamp(matches, 0, len);

            trial.heard_words.reserve(static_cast<std::size_t>(len));
            for (int w = 0; w < len; ++w)
                trial.heard_words.push_back(vocab[trial_rng.below(vocab.size())]);
            trial.written_words = trial.heard_words;
            std::vector<std::size_t> positions(static_cast<std::size_t>(len));
            std::iota(positions.begin(), positions.end(), std::size_t{0});
            trial_rng.shuffle(positions);
            for (int w = 0; w < len - matches; ++w) {
                const std::size_t pos = positions[static_cast<std::size_t>(w)];
                std::string replacement;
                do {
                    replacement = vocab[trial_rng.below(vocab.size())];
                } while (replacement == trial.heard_words[pos]);
                trial.written_words[pos] = replacement;
            }
            trial.attention_score = attention_score(trial.heard_words, trial.written_words);

            // Listening-phase signal: the configured tone set (random phases,
            // lightly jittered amplitudes) plus white noise with power
            // signal_power / 10^(snr/10).
            Rng wave_rng = subject_rng.derive(0x300000ULL + static_cast<std::uint64_t>(t));
            const std::size_t n_tones = config.tone_freqs_hz.size();
            std::vector<double> amp(n_tones), phase(n_tones);
            for (int c = 0; c < kEegChannels; ++c) {
                double signal_power = 0.0;
                for (std::size_t h = 0; h < n_tones; ++h) {
                    amp[h] = config.tone_amps[h] * wave_rng.uniform(0.9, 1.1);
                    phase[h] = 2.0 * std::numbers::pi * static_cast<double>(h) /
                               static_cast<double>(n_tones);
                    signal_power += 0.5 * amp[h] * amp[h];
                }
                const double noise_sigma =
                    std::sqrt(signal_power / std::pow(10.0, plan.snr_db / 10.0));
                double* out = signal.channel(c);
                for (std::int64_t i = cursor; i < listen_end; ++i) {
                    const double time_s = static_cast<double>(i - cursor) / kSamplingRateHz;
                    double v = 0.0;
                    for (std::size_t h = 0; h < n_tones; ++h)
                        v += amp[h] * std::sin(2.0 * std::numbers::pi * config.tone_freqs_hz[h] * time_s +
                                               phase[h]);
                    out[i] = v + wave_rng.normal(0.0, noise_sigma);
                }
                // Writing/resting stretch is unused by the pipeline; plain noise.
                for (std::int64_t i = listen_end; i < rest_end; ++i)
                    out[i] = wave_rng.normal(0.0, 1.0);
            }

            dataset.trials.push_back(std::move(trial));
            cursor = rest_end;
        }
        dataset.signals.push_back(std::move(signal));
    }

    validate_dataset(dataset, "synthetic");
    return dataset;
}

}  // namespace gafatt

#endif  // GAFATT_SYNTH_HPP
