#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gafatt/dataset.hpp"
#include "gafatt/dataset_io.hpp"
#include "gafatt/error.hpp"
#include "gafatt/rng.hpp"
#include "gafatt/synth.hpp"
#include "oracles.hpp"

using namespace gafatt;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

SynthConfig tiny_synth(int subjects, int trials) {
    SynthConfig cfg;
    cfg.n_subjects = subjects;
    cfg.trials_per_subject = trials;
    cfg.listening_min_s = 0.05;
    cfg.listening_max_s = 0.1;
    cfg.writing_min_s = 0.05;
    cfg.writing_max_s = 0.08;
    cfg.resting_min_s = 0.05;
    cfg.resting_max_s = 0.08;
    return cfg;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
    if (a.trials.size() != b.trials.size() || a.signals.size() != b.signals.size()) return false;
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        const auto& x = a.trials[i];
        const auto& y = b.trials[i];
        if (x.subject_id != y.subject_id || x.trial_id != y.trial_id || x.snr_db != y.snr_db ||
            x.heard_words != y.heard_words || x.written_words != y.written_words ||
            x.attention_score != y.attention_score || x.segments.size() != y.segments.size())
            return false;
        for (std::size_t s = 0; s < x.segments.size(); ++s)
            if (x.segments[s].phase != y.segments[s].phase ||
                x.segments[s].start_sample != y.segments[s].start_sample ||
                x.segments[s].end_sample != y.segments[s].end_sample)
                return false;
    }
    for (std::size_t i = 0; i < a.signals.size(); ++i)
        if (a.signals[i].subject_id != b.signals[i].subject_id ||
            a.signals[i].data != b.signals[i].data)
            return false;
    return true;
}

}  // namespace

TEST_CASE("attention_score counts positional matches") {
    REQUIRE(attention_score({"a", "b", "c", "d", "e"}, {"a", "x", "c", "y", "e"}) == 60.0);
    REQUIRE(attention_score({"the", "cat", "sat"}, {"the", "cat", "sat"}) == 100.0);
    REQUIRE(attention_score({"the", "cat", "sat"}, {}) == 0.0);
}

TEST_CASE("attention_score ignores surplus written words") {
    REQUIRE(attention_score({"a", "b"}, {"a", "b", "c", "d"}) == 100.0);
}

TEST_CASE("attention_score normalizes case and surrounding punctuation") {
    REQUIRE(attention_score({"The,", "CAT", "sat."}, {"the", "cat!", "\"sat\""}) == 100.0);
    REQUIRE(attention_score({"inner'apostrophe"}, {"innerapostrophe"}) == 0.0);
}

TEST_CASE("attention_score rejects an empty heard list") {
    REQUIRE_THROWS_MATCHES(attention_score({}, {"a"}), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::invalid_transcript;
                           }));
}

TEST_CASE("attention_score agrees with brute-force counting on 1000 random pairs") {
    const auto& vocab = detail::synth_vocabulary();
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t heard_len = 1 + rng.below(13);
        const std::size_t written_len = rng.below(16);
        WordList heard, written;
        for (std::size_t i = 0; i < heard_len; ++i) heard.push_back(vocab[rng.below(8)]);
        for (std::size_t i = 0; i < written_len; ++i) written.push_back(vocab[rng.below(8)]);
        REQUIRE(attention_score(heard, written) == oracles::attention_score_brute(heard, written));
    }
}

TEST_CASE("attention_score identity and range properties") {
    const auto& vocab = detail::synth_vocabulary();
    Rng rng(103);
    for (int trial = 0; trial < 200; ++trial) {
        WordList heard;
        const std::size_t len = 1 + rng.below(12);
        for (std::size_t i = 0; i < len; ++i) heard.push_back(vocab[rng.below(vocab.size())]);
        REQUIRE(attention_score(heard, heard) == 100.0);
        WordList written;
        for (std::size_t i = 0; i < rng.below(14); ++i)
            written.push_back(vocab[rng.below(vocab.size())]);
        const double score = attention_score(heard, written);
        REQUIRE(score >= 0.0);
        REQUIRE(score <= 100.0);
    }
}

TEST_CASE("extract_listening_segment slices by metadata") {
    SubjectSignal signal;
    signal.subject_id = 1;
    signal.n_samples = 1000;
    signal.data.resize(kEegChannels * 1000);
    for (int c = 0; c < kEegChannels; ++c)
        for (std::size_t i = 0; i < 1000; ++i)
            signal.channel(c)[i] = c * 1000.0 + static_cast<double>(i);

    TrialRecord trial;
    trial.subject_id = 1;
    trial.trial_id = 1;
    trial.segments = {{Phase::Listening, 0, 640}, {Phase::Writing, 640, 900}};
    const EegSegment seg = extract_listening_segment(trial, signal);
    REQUIRE(seg.samples_per_channel == 640);
    REQUIRE(seg.channel(3)[0] == 3000.0);
    REQUIRE(seg.channel(3)[639] == 3639.0);

    // 3 seconds at 128 Hz
    trial.segments = {{Phase::Listening, 100, 100 + 384}};
    REQUIRE(extract_listening_segment(trial, signal).samples_per_channel == 384);
}

TEST_CASE("extract_listening_segment error paths") {
    SubjectSignal signal;
    signal.subject_id = 1;
    signal.n_samples = 200;
    signal.data.resize(kEegChannels * 200);

    TrialRecord no_listening;
    no_listening.segments = {{Phase::Writing, 0, 50}};
    REQUIRE_THROWS_MATCHES(extract_listening_segment(no_listening, signal), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::schema;
                           }));

    TrialRecord inverted;
    inverted.segments = {{Phase::Listening, 100, 50}};
    REQUIRE_THROWS_MATCHES(extract_listening_segment(inverted, signal), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::bounds;
                           }));

    TrialRecord beyond;
    beyond.segments = {{Phase::Listening, 150, 250}};
    REQUIRE_THROWS_AS(extract_listening_segment(beyond, signal), Error);
}

TEST_CASE("make_folds: exact sizes for the 3600/12 case") {
    const FoldAssignment folds = make_folds(3600, 12, 9);
    std::vector<int> sizes(12, 0);
    for (int f : folds.assignment) sizes[static_cast<std::size_t>(f)]++;
    for (int size : sizes) REQUIRE(size == 300);
}

TEST_CASE("make_folds: near-equal chunking and errors") {
    const FoldAssignment folds = make_folds(10, 3, 5);
    std::multiset<std::size_t> sizes;
    for (int f = 0; f < 3; ++f) sizes.insert(folds.fold_items(f).size());
    REQUIRE(sizes == std::multiset<std::size_t>{4, 3, 3});

    REQUIRE_THROWS_MATCHES(make_folds(10, 0, 1), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::partition;
                           }));
    REQUIRE_THROWS_AS(make_folds(5, 6, 1), Error);
}

TEST_CASE("make_folds: disjoint, exhaustive, balanced, deterministic") {
    Rng rng(107);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.below(500);
        const int f = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(n, 15)));
        const std::uint64_t seed = rng.next_u64();
        const FoldAssignment folds = make_folds(n, f, seed);
        REQUIRE(folds.assignment.size() == n);
        std::vector<std::size_t> sizes(static_cast<std::size_t>(f), 0);
        for (int a : folds.assignment) {
            REQUIRE(a >= 0);
            REQUIRE(a < f);
            sizes[static_cast<std::size_t>(a)]++;
        }
        const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
        REQUIRE(*hi - *lo <= 1);
        REQUIRE(make_folds(n, f, seed).assignment == folds.assignment);
    }
}

TEST_CASE("generate_synthetic is deterministic and sized by config") {
    const SynthConfig cfg = tiny_synth(2, 9);
    const Dataset a = generate_synthetic(cfg, 77);
    const Dataset b = generate_synthetic(cfg, 77);
    REQUIRE(datasets_equal(a, b));
    REQUIRE_FALSE(datasets_equal(a, generate_synthetic(cfg, 78)));
    REQUIRE(a.trials.size() == 18);

    const Dataset big = generate_synthetic(tiny_synth(25, 144), 1);
    REQUIRE(big.trials.size() == 3600);
}

TEST_CASE("generate_synthetic score model tracks SNR group means") {
    SynthConfig cfg = tiny_synth(1, 600);
    cfg.snr_levels_db = {-6.0, 6.0};
    cfg.score_mean_lo = 40.0;
    cfg.score_mean_hi = 90.0;
    const Dataset ds = generate_synthetic(cfg, 5);

    std::map<double, std::pair<double, int>> groups;
    for (const auto& trial : ds.trials) {
        groups[trial.snr_db].first += trial.attention_score;
        groups[trial.snr_db].second += 1;
    }
    REQUIRE(groups.size() == 2);
    REQUIRE(groups.at(-6.0).first / groups.at(-6.0).second ==
            Catch::Approx(40.0).margin(cfg.score_jitter));
    REQUIRE(groups.at(6.0).first / groups.at(6.0).second ==
            Catch::Approx(90.0).margin(cfg.score_jitter));
}

TEST_CASE("generate_synthetic rejects bad configs") {
    SynthConfig zero_trials = tiny_synth(1, 1);
    zero_trials.trials_per_subject = 0;
    REQUIRE_THROWS_MATCHES(generate_synthetic(zero_trials, 1), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::config;
                           }));
    SynthConfig no_snr = tiny_synth(1, 1);
    no_snr.snr_levels_db.clear();
    REQUIRE_THROWS_AS(generate_synthetic(no_snr, 1), Error);
}

TEST_CASE("save + load round-trips an equal dataset") {
    const Dataset original = generate_synthetic(tiny_synth(2, 7), 123);
    const auto dir = temp_dir("gafatt_test_roundtrip");
    save_dataset(original, dir);
    const Dataset loaded = load_dataset(dir);
    REQUIRE(datasets_equal(original, loaded));
    REQUIRE(loaded.manifest.source == "synthetic");
    REQUIRE(loaded.manifest.has_seed);
    REQUIRE(loaded.manifest.seed == 123);
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_dataset rejects a wrong channel count") {
    const auto dir = temp_dir("gafatt_test_badchan");
    save_dataset(generate_synthetic(tiny_synth(1, 2), 9), dir);
    {
        // Rewrite the signal file with 13 channels.
        std::ofstream out(dir / "subject_1_signal.csv", std::ios::binary);
        out << "sample_index";
        for (int c = 1; c <= 13; ++c) out << ",ch" << (c < 10 ? "0" : "") << c;
        out << "\n0";
        for (int c = 1; c <= 13; ++c) out << ",0";
        out << "\n";
    }
    REQUIRE_THROWS_MATCHES(load_dataset(dir), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.category() == ErrorCategory::load;
                           }));
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_dataset rejects a stored score that disagrees with transcripts") {
    const auto dir = temp_dir("gafatt_test_badscore");
    const Dataset ds = generate_synthetic(tiny_synth(1, 2), 9);
    save_dataset(ds, dir);
    {
        const auto path = dir / "subject_1_trials.csv";
        std::ifstream in(path, std::ios::binary);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        const std::string needle = csv::format_double(ds.trials[0].attention_score);
        const auto pos = text.find("," + needle + "\n");
        REQUIRE(pos != std::string::npos);
        text.replace(pos + 1, needle.size(), "59.000001");
        std::ofstream out(path, std::ios::binary);
        out << text;
    }
    REQUIRE_THROWS_AS(load_dataset(dir), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_dataset flags a manifest/subject-file mismatch") {
    const auto dir = temp_dir("gafatt_test_manifest");
    save_dataset(generate_synthetic(tiny_synth(2, 2), 9), dir);
    std::filesystem::remove(dir / "subject_2_trials.csv");
    REQUIRE_THROWS_AS(load_dataset(dir), Error);
    std::filesystem::remove_all(dir);
}
