#ifndef GAFATT_HARNESS_HPP
#define GAFATT_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "gafatt/dataset.hpp"
#include "gafatt/error.hpp"
#include "gafatt/gaf.hpp"
#include "gafatt/model.hpp"
#include "gafatt/nn/adam.hpp"
#include "gafatt/nn/loss.hpp"
#include "gafatt/rng.hpp"

namespace gafatt {

enum class Precision { f32, f64 };

inline const char* to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

inline Precision precision_from_string(const std::string& text) {
    if (text == "f32") return Precision::f32;
    if (text == "f64") return Precision::f64;
    fail(ErrorCategory::config, "unknown precision '" + text + "' (expected f32 or f64)");
}

struct TrainConfig {
    int epochs = 15;
    double base_lr = 0.0025;
    double lr_decay = 0.9;
    int batch_size = 1;  // fixed by the variable image sizes
    std::uint64_t seed = 1;
    Precision precision = Precision::f32;
    int paa_target = 128;

    void validate() const {
        if (batch_size != 1)
            fail(ErrorCategory::config,
                 "batch_size is fixed at 1: variable-size images cannot be batched");
        if (epochs < 1) fail(ErrorCategory::config, "epochs must be >= 1");
        if (!(base_lr > 0.0 && base_lr <= 1.0))
            fail(ErrorCategory::config, "base_lr must be in (0, 1]");
        if (!(lr_decay > 0.0 && lr_decay <= 1.0))
            fail(ErrorCategory::config, "lr_decay must be in (0, 1]");
    }
};

// Encoded trial plus an audit counter over target reads; the counter lets
// tests prove training touched validation targets only through evaluation.
struct EncodedTrial {
    GadfImage image;
    mutable std::atomic<std::uint64_t> target_reads{0};

    EncodedTrial() = default;
    explicit EncodedTrial(GadfImage img) : image(std::move(img)) {}
    EncodedTrial(const EncodedTrial& other)
        : image(other.image), target_reads(other.target_reads.load(std::memory_order_relaxed)) {}
    EncodedTrial& operator=(const EncodedTrial& other) {
        image = other.image;
        target_reads.store(other.target_reads.load(std::memory_order_relaxed),
                           std::memory_order_relaxed);
        return *this;
    }

    double target() const {
        target_reads.fetch_add(1, std::memory_order_relaxed);
        return image.target;
    }
    std::uint64_t reads() const { return target_reads.load(std::memory_order_relaxed); }
};

inline std::vector<EncodedTrial> encode_dataset(const Dataset& dataset, const EncodeOptions& options) {
    std::vector<EncodedTrial> encoded;
    encoded.reserve(dataset.trials.size());
    for (const auto& trial : dataset.trials) {
        const EegSegment segment = extract_listening_segment(trial, dataset.signal_for(trial.subject_id));
        encoded.emplace_back(encode_trial(
            segment, options, TrialProvenance{trial.subject_id, trial.trial_id, trial.attention_score}));
    }
    return encoded;
}

struct RunHistory {
    std::vector<double> train_mse;  // one entry per epoch
    std::vector<double> val_mae;    // one entry per epoch
    std::vector<double> lr;         // lr_schedule(epoch) trace
    double wall_seconds = 0.0;
};

// Eq.-4 style mean absolute error; predictions are clamped to [0, 100] and
// dropout is inactive (eval mode).
template <typename T>
double evaluate_mae(AttnCnnModel<T>& model, std::span<const EncodedTrial* const> trials) {
    if (trials.empty()) fail(ErrorCategory::evaluation, "evaluate_mae: empty trial set");
    double sum = 0.0;
    for (const EncodedTrial* trial : trials) {
        const nn::Tensor<T> input = image_to_tensor<T>(trial->image);
        const double pred = std::clamp(static_cast<double>(model.forward(input, nn::Mode::eval)), 0.0, 100.0);
        sum += std::abs(trial->target() - pred);
    }
    return sum / static_cast<double>(trials.size());
}

namespace detail {

inline std::uint64_t trial_key(const GadfImage& image) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(image.subject_id)) << 32) |
           static_cast<std::uint32_t>(image.trial_id);
}

}  // namespace detail

// Per epoch: seeded reshuffle, then one Adam step per sample (batch size 1),
// with the learning rate set by lr_schedule at the epoch boundary. Validation
// MAE is recorded once per epoch; training reads only train-set targets.
template <typename T>
RunHistory train(AttnCnnModel<T>& model, std::span<const EncodedTrial* const> train_set,
                 std::span<const EncodedTrial* const> val_set, const TrainConfig& config) {
    config.validate();
    if (train_set.empty()) fail(ErrorCategory::harness, "train: empty training set");
    {
        std::unordered_set<std::uint64_t> train_keys;
        for (const EncodedTrial* t : train_set) train_keys.insert(detail::trial_key(t->image));
        for (const EncodedTrial* v : val_set)
            if (train_keys.contains(detail::trial_key(v->image)))
                fail(ErrorCategory::harness,
                     "train: trial " + std::to_string(v->image.trial_id) + " of subject " +
                         std::to_string(v->image.subject_id) + " appears in both train and val sets");
    }

    const auto start = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(config.seed, 0x73687566ULL));  // "shuf"
    Rng dropout_rng(derive_seed(config.seed, 0x64726f70ULL));  // "drop"

    auto params = model.params();
    nn::AdamState<T> opt(std::span<nn::Tensor<T>* const>(params), config.base_lr);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    RunHistory history;
    history.train_mse.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = nn::lr_schedule(epoch, config.base_lr, config.lr_decay);
        opt.learning_rate = lr;
        shuffle_rng.shuffle(order);

        double mse_sum = 0.0;
        for (std::size_t idx : order) {
            const EncodedTrial& trial = *train_set[idx];
            const nn::Tensor<T> input = image_to_tensor<T>(trial.image);
            const T target = static_cast<T>(trial.target());
            model.zero_grads();
            const T pred = model.forward(input, nn::Mode::train, &dropout_rng);
            const T diff = pred - target;
            mse_sum += static_cast<double>(diff) * static_cast<double>(diff);
            model.backward(T{2} * diff);  // d/dpred of (pred - target)^2
            nn::adam_step(std::span<nn::Tensor<T>* const>(params), opt);
        }
        history.train_mse.push_back(mse_sum / static_cast<double>(train_set.size()));
        history.lr.push_back(lr);
        history.val_mae.push_back(val_set.empty() ? 0.0 : evaluate_mae(model, val_set));
    }
    history.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return history;
}

// Train-set median as the constant predictor (the MAE-minimizing constant);
// returns its MAE over the validation targets.
inline double baseline_constant(std::vector<double> train_targets,
                                std::span<const double> val_targets) {
    if (train_targets.empty() || val_targets.empty())
        fail(ErrorCategory::evaluation, "baseline_constant: empty target set");
    std::sort(train_targets.begin(), train_targets.end());
    const std::size_t n = train_targets.size();
    const double median = n % 2 == 1
                              ? train_targets[n / 2]
                              : 0.5 * (train_targets[n / 2 - 1] + train_targets[n / 2]);
    double sum = 0.0;
    for (double target : val_targets) sum += std::abs(target - median);
    return sum / static_cast<double>(val_targets.size());
}

struct FoldResult {
    int fold = 0;
    std::uint64_t seed = 0;
    double mae = 0.0;
    double baseline_mae = 0.0;
    RunHistory history;
};

struct CvReport {
    int n_folds = 0;
    std::uint64_t seed = 0;
    std::vector<FoldResult> folds;
    double mean_mae = 0.0;
    double std_mae = 0.0;  // sample standard deviation (n-1) over folds
    double baseline_mean_mae = 0.0;
    double baseline_std_mae = 0.0;
    double wall_seconds = 0.0;
};

inline double mean_of(std::span<const double> values) {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

inline double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double mean = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace detail {

// Static round-robin would also work, but a shared counter keeps workers busy
// when fold runtimes differ. Results are written by fold index, so the
// schedule cannot affect output.
template <typename Fn>
void parallel_for(std::size_t n_tasks, int workers, Fn&& task) {
    const int n_threads = std::min<int>(workers, static_cast<int>(n_tasks));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_tasks) break;
                try {
                    task(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

struct CvOptions {
    int n_folds = 12;
    std::uint64_t seed = 1;
    int workers = 1;
    TrainConfig train;
    AttnCnnConfig model;
    EncodeOptions encode;
};

// K-fold cross-validation: each fold trains a freshly initialized model
// (fold-derived seed) on the other folds and is evaluated once on its own
// fold. Folds are independent, so any worker count yields identical results.
template <typename T>
CvReport cross_validate(const std::vector<EncodedTrial>& encoded, const CvOptions& options) {
    if (options.n_folds < 2)
        fail(ErrorCategory::partition, "cross_validate: need at least 2 folds");
    if (encoded.size() < static_cast<std::size_t>(options.n_folds))
        fail(ErrorCategory::partition,
             "cross_validate: " + std::to_string(encoded.size()) + " trials cannot fill " +
                 std::to_string(options.n_folds) + " folds");
    options.train.validate();
    options.model.validate();

    const auto start = std::chrono::steady_clock::now();
    const FoldAssignment folds = make_folds(encoded.size(), options.n_folds, options.seed);

    CvReport report;
    report.n_folds = options.n_folds;
    report.seed = options.seed;
    report.folds.resize(static_cast<std::size_t>(options.n_folds));

    detail::parallel_for(static_cast<std::size_t>(options.n_folds), options.workers, [&](std::size_t f) {
        std::vector<const EncodedTrial*> train_set, val_set;
        std::vector<double> train_targets, val_targets;
        for (std::size_t i = 0; i < encoded.size(); ++i) {
            if (folds.assignment[i] == static_cast<int>(f)) {
                val_set.push_back(&encoded[i]);
                val_targets.push_back(encoded[i].image.target);
            } else {
                train_set.push_back(&encoded[i]);
                train_targets.push_back(encoded[i].image.target);
            }
        }

        const std::uint64_t fold_seed = derive_seed(options.seed, 0xf01d0000ULL + f);
        AttnCnnConfig model_config = options.model;
        model_config.seed = fold_seed;
        TrainConfig train_config = options.train;
        train_config.seed = fold_seed;

        AttnCnnModel<T> model = build_model<T>(model_config);
        FoldResult result;
        result.fold = static_cast<int>(f);
        result.seed = fold_seed;
        result.history = train(model, std::span<const EncodedTrial* const>(train_set),
                               std::span<const EncodedTrial* const>(val_set), train_config);
        result.mae = evaluate_mae(model, std::span<const EncodedTrial* const>(val_set));
        result.baseline_mae = baseline_constant(train_targets, val_targets);
        report.folds[f] = std::move(result);
    });

    std::vector<double> maes, baselines;
    for (const auto& fold : report.folds) {
        maes.push_back(fold.mae);
        baselines.push_back(fold.baseline_mae);
    }
    report.mean_mae = mean_of(maes);
    report.std_mae = sample_std(maes);
    report.baseline_mean_mae = mean_of(baselines);
    report.baseline_std_mae = sample_std(baselines);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace gafatt

#endif  // GAFATT_HARNESS_HPP
