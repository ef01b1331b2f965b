// gafatt: GADF-encode EEG trial datasets and train/evaluate the CNN
// attention-score regressor. See README.md for the workflow.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gafatt/checkpoint.hpp"
#include "gafatt/csv.hpp"
#include "gafatt/dataset.hpp"
#include "gafatt/dataset_io.hpp"
#include "gafatt/error.hpp"
#include "gafatt/gaf.hpp"
#include "gafatt/gafi.hpp"
#include "gafatt/harness.hpp"
#include "gafatt/model.hpp"
#include "gafatt/pgm.hpp"
#include "gafatt/report.hpp"
#include "gafatt/synth.hpp"

namespace {

using nlohmann::json;

struct CliConfig {
    std::uint64_t seed = 1;
    int workers = 1;

    // encoding
    int paa = 128;
    std::string encoder = "gadf";

    // training
    int epochs = 15;
    double lr = 0.0025;
    double lr_decay = 0.9;
    int batch_size = 1;
    std::string precision = "f32";
    double val_frac = 0.2;
    int folds = 12;

    // model
    std::vector<int> conv_filters = {32, 64, 128, 128};
    int adaptive_grid = 4;
    double dropout = 0.5;

    // synthetic data
    int subjects = 2;
    int trials = 144;
    double listening_min_s = 3.0;
    double listening_max_s = 5.0;
    double writing_min_s = 2.0;
    double writing_max_s = 4.0;
    double resting_min_s = 1.0;
    double resting_max_s = 2.0;
    std::vector<double> snr_levels = {-6.0, -3.0, 0.0, 3.0, 6.0, 9.0};
    int sentence_min_words = 3;
    int sentence_max_words = 13;
    double score_lo = 40.0;
    double score_hi = 90.0;
    double score_jitter = 8.0;
};

json config_echo(const CliConfig& c) {
    return json{{"seed", c.seed},
                {"workers", c.workers},
                {"paa", c.paa},
                {"encoder", c.encoder},
                {"epochs", c.epochs},
                {"lr", c.lr},
                {"lr_decay", c.lr_decay},
                {"batch_size", c.batch_size},
                {"precision", c.precision},
                {"val_frac", c.val_frac},
                {"folds", c.folds},
                {"conv_filters", c.conv_filters},
                {"adaptive_grid", c.adaptive_grid},
                {"dropout", c.dropout},
                {"subjects", c.subjects},
                {"trials", c.trials},
                {"listening_min_s", c.listening_min_s},
                {"listening_max_s", c.listening_max_s},
                {"writing_min_s", c.writing_min_s},
                {"writing_max_s", c.writing_max_s},
                {"resting_min_s", c.resting_min_s},
                {"resting_max_s", c.resting_max_s},
                {"snr_levels", c.snr_levels},
                {"sentence_min_words", c.sentence_min_words},
                {"sentence_max_words", c.sentence_max_words},
                {"score_lo", c.score_lo},
                {"score_hi", c.score_hi},
                {"score_jitter", c.score_jitter}};
}

// Config-file keys mirror the echo above; unknown keys are rejected so typos
// do not silently fall back to defaults.
void apply_config_file(CliConfig& c, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) gafatt::fail(gafatt::ErrorCategory::config, "cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        gafatt::fail(gafatt::ErrorCategory::config, path.string() + ": " + e.what());
    }
    if (!j.is_object())
        gafatt::fail(gafatt::ErrorCategory::config, path.string() + ": expected a JSON object");

    const json known = config_echo(c);
    try {
        for (const auto& [key, value] : j.items()) {
            if (!known.contains(key))
                gafatt::fail(gafatt::ErrorCategory::config,
                             path.string() + ": unknown config key '" + key + "'");
            if (key == "seed") value.get_to(c.seed);
            else if (key == "workers") value.get_to(c.workers);
            else if (key == "paa") value.get_to(c.paa);
            else if (key == "encoder") value.get_to(c.encoder);
            else if (key == "epochs") value.get_to(c.epochs);
            else if (key == "lr") value.get_to(c.lr);
            else if (key == "lr_decay") value.get_to(c.lr_decay);
            else if (key == "batch_size") value.get_to(c.batch_size);
            else if (key == "precision") value.get_to(c.precision);
            else if (key == "val_frac") value.get_to(c.val_frac);
            else if (key == "folds") value.get_to(c.folds);
            else if (key == "conv_filters") value.get_to(c.conv_filters);
            else if (key == "adaptive_grid") value.get_to(c.adaptive_grid);
            else if (key == "dropout") value.get_to(c.dropout);
            else if (key == "subjects") value.get_to(c.subjects);
            else if (key == "trials") value.get_to(c.trials);
            else if (key == "listening_min_s") value.get_to(c.listening_min_s);
            else if (key == "listening_max_s") value.get_to(c.listening_max_s);
            else if (key == "writing_min_s") value.get_to(c.writing_min_s);
            else if (key == "writing_max_s") value.get_to(c.writing_max_s);
            else if (key == "resting_min_s") value.get_to(c.resting_min_s);
            else if (key == "resting_max_s") value.get_to(c.resting_max_s);
            else if (key == "snr_levels") value.get_to(c.snr_levels);
            else if (key == "sentence_min_words") value.get_to(c.sentence_min_words);
            else if (key == "sentence_max_words") value.get_to(c.sentence_max_words);
            else if (key == "score_lo") value.get_to(c.score_lo);
            else if (key == "score_hi") value.get_to(c.score_hi);
            else if (key == "score_jitter") value.get_to(c.score_jitter);
        }
    } catch (const json::exception& e) {
        gafatt::fail(gafatt::ErrorCategory::config, path.string() + ": " + e.what());
    }
}

// Collects every violation instead of stopping at the first.
std::vector<std::string> validate_cli(const CliConfig& c) {
    std::vector<std::string> errors;
    if (c.batch_size != 1)
        errors.push_back("batch_size is fixed at 1 (variable-size images cannot be batched); got " +
                         std::to_string(c.batch_size));
    if (c.epochs < 1) errors.push_back("epochs must be >= 1");
    if (!(c.lr > 0.0 && c.lr <= 1.0)) errors.push_back("lr must be in (0, 1]");
    if (!(c.lr_decay > 0.0 && c.lr_decay <= 1.0)) errors.push_back("lr_decay must be in (0, 1]");
    if (c.folds < 2) errors.push_back("folds must be >= 2");
    if (c.paa != 0 && c.paa < 2) errors.push_back("paa must be 0 (off) or >= 2");
    if (c.encoder != "gadf" && c.encoder != "gasf") errors.push_back("encoder must be gadf or gasf");
    if (c.precision != "f32" && c.precision != "f64") errors.push_back("precision must be f32 or f64");
    if (!(c.val_frac > 0.0 && c.val_frac < 1.0)) errors.push_back("val_frac must be in (0, 1)");
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) errors.push_back("dropout must be in [0, 1)");
    if (c.conv_filters.size() != 4) {
        errors.push_back("conv_filters must list exactly 4 block sizes");
    } else {
        for (std::size_t b = 0; b < 4; ++b) {
            if (c.conv_filters[b] < 1) {
                errors.push_back("conv_filters must be positive");
                break;
            }
            if (b > 0 && c.conv_filters[b] < c.conv_filters[b - 1]) {
                errors.push_back("conv_filters must be non-decreasing with depth");
                break;
            }
        }
    }
    if (c.adaptive_grid < 1) errors.push_back("adaptive_grid must be >= 1");
    if (c.workers < 1) errors.push_back("workers must be >= 1");
    if (c.subjects < 1) errors.push_back("subjects must be >= 1");
    if (c.trials < 1) errors.push_back("trials must be >= 1");
    if (c.snr_levels.empty()) errors.push_back("snr_levels must be non-empty");
    if (!(c.listening_min_s > 0) || c.listening_max_s < c.listening_min_s)
        errors.push_back("listening duration range is invalid");
    if (!(c.writing_min_s > 0) || c.writing_max_s < c.writing_min_s)
        errors.push_back("writing duration range is invalid");
    if (!(c.resting_min_s > 0) || c.resting_max_s < c.resting_min_s)
        errors.push_back("resting duration range is invalid");
    if (c.sentence_min_words < 1 || c.sentence_max_words < c.sentence_min_words)
        errors.push_back("sentence word-count range is invalid");
    if (c.score_lo < 0 || c.score_hi > 100 || c.score_hi < c.score_lo || c.score_jitter < 0)
        errors.push_back("score range must satisfy 0 <= lo <= hi <= 100 with jitter >= 0");
    return errors;
}

void require_valid(const CliConfig& c) {
    const auto errors = validate_cli(c);
    if (errors.empty()) return;
    for (const auto& e : errors) std::cerr << "config-violation: " << e << '\n';
    gafatt::fail(gafatt::ErrorCategory::config,
                 std::to_string(errors.size()) + " invalid setting(s), see config-violation lines");
}

gafatt::SynthConfig build_synth_config(const CliConfig& c) {
    gafatt::SynthConfig cfg;
    cfg.n_subjects = c.subjects;
    cfg.trials_per_subject = c.trials;
    cfg.listening_min_s = c.listening_min_s;
    cfg.listening_max_s = c.listening_max_s;
    cfg.writing_min_s = c.writing_min_s;
    cfg.writing_max_s = c.writing_max_s;
    cfg.resting_min_s = c.resting_min_s;
    cfg.resting_max_s = c.resting_max_s;
    cfg.snr_levels_db = c.snr_levels;
    cfg.sentence_min_words = c.sentence_min_words;
    cfg.sentence_max_words = c.sentence_max_words;
    cfg.score_mean_lo = c.score_lo;
    cfg.score_mean_hi = c.score_hi;
    cfg.score_jitter = c.score_jitter;
    return cfg;
}

gafatt::EncodeOptions build_encode_options(const CliConfig& c) {
    gafatt::EncodeOptions options;
    options.encoder = gafatt::encoder_from_string(c.encoder);
    options.paa_target = c.paa;
    return options;
}

gafatt::TrainConfig build_train_config(const CliConfig& c) {
    gafatt::TrainConfig cfg;
    cfg.epochs = c.epochs;
    cfg.base_lr = c.lr;
    cfg.lr_decay = c.lr_decay;
    cfg.batch_size = c.batch_size;
    cfg.seed = c.seed;
    cfg.precision = gafatt::precision_from_string(c.precision);
    cfg.paa_target = c.paa;
    return cfg;
}

gafatt::AttnCnnConfig build_model_config(const CliConfig& c) {
    gafatt::AttnCnnConfig cfg;
    cfg.conv_filters = c.conv_filters;
    cfg.adaptive_grid = c.adaptive_grid;
    cfg.dropout_rate = c.dropout;
    cfg.seed = c.seed;
    return cfg;
}

std::string format_mae(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", mean, std);
    return buf;
}

const gafatt::TrialRecord& find_trial(const gafatt::Dataset& dataset, int subject, int trial) {
    for (const auto& t : dataset.trials)
        if (t.subject_id == subject && t.trial_id == trial) return t;
    gafatt::fail(gafatt::ErrorCategory::argument,
                 "no trial " + std::to_string(trial) + " for subject " + std::to_string(subject));
}

void run_synth(const CliConfig& c, const std::string& out_dir) {
    require_valid(c);
    const gafatt::Dataset dataset = gafatt::generate_synthetic(build_synth_config(c), c.seed);
    gafatt::save_dataset(dataset, out_dir);
    json sidecar = config_echo(c);
    sidecar["command"] = "synth";
    gafatt::write_json(sidecar, std::filesystem::path(out_dir) / "synth_config.json");
    std::cout << "wrote " << dataset.trials.size() << " trials for " << dataset.manifest.n_subjects
              << " subject(s) to " << out_dir << '\n';
}

void run_score(const std::string& in_path, const std::string& out_path) {
    const auto rows = gafatt::csv::read_file(in_path);
    if (rows.empty() || rows[0] != gafatt::csv::Row{"heard", "written"})
        gafatt::fail(gafatt::ErrorCategory::load,
                     in_path + ": expected CSV header heard,written");
    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file_out.open(out_path, std::ios::binary);
        if (!file_out) gafatt::fail(gafatt::ErrorCategory::io, "cannot write " + out_path);
        out = &file_out;
    }
    gafatt::csv::write_row(*out, {"heard", "written", "score"});
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 2)
            gafatt::fail(gafatt::ErrorCategory::load,
                         in_path + ": row " + std::to_string(r + 1) + ": expected 2 columns");
        const double score = gafatt::attention_score(gafatt::detail::split_words(rows[r][0]),
                                                     gafatt::detail::split_words(rows[r][1]));
        gafatt::csv::write_row(*out, {rows[r][0], rows[r][1], gafatt::csv::format_double(score)});
    }
}

void run_encode(const CliConfig& c, const std::string& dataset_dir, const std::string& out_dir) {
    require_valid(c);
    const gafatt::Dataset dataset = gafatt::load_dataset(dataset_dir);
    const gafatt::EncodeOptions options = build_encode_options(c);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) gafatt::fail(gafatt::ErrorCategory::io, "cannot create directory " + out_dir);
    std::size_t count = 0;
    for (const auto& trial : dataset.trials) {
        const auto segment =
            gafatt::extract_listening_segment(trial, dataset.signal_for(trial.subject_id));
        const auto image = gafatt::encode_trial(
            segment, options,
            gafatt::TrialProvenance{trial.subject_id, trial.trial_id, trial.attention_score});
        const auto name = "subject_" + std::to_string(trial.subject_id) + "_trial_" +
                          std::to_string(trial.trial_id) + ".gafi";
        gafatt::save_gafi(image, std::filesystem::path(out_dir) / name);
        ++count;
    }
    json sidecar = config_echo(c);
    sidecar["command"] = "encode";
    gafatt::write_json(sidecar, std::filesystem::path(out_dir) / "encode_config.json");
    std::cout << "encoded " << count << " trial(s) to " << out_dir << '\n';
}

void run_export_image(const CliConfig& c, const std::string& dataset_dir, int subject, int trial,
                      int channel, const std::string& out_path) {
    require_valid(c);
    const gafatt::Dataset dataset = gafatt::load_dataset(dataset_dir);
    const auto& record = find_trial(dataset, subject, trial);
    const auto segment = gafatt::extract_listening_segment(record, dataset.signal_for(subject));
    const auto image = gafatt::encode_trial(
        segment, build_encode_options(c),
        gafatt::TrialProvenance{record.subject_id, record.trial_id, record.attention_score});
    gafatt::export_pgm(image, channel, out_path);
    std::cout << "wrote " << image.size << "x" << image.size << " channel " << channel << " to "
              << out_path << '\n';
}

template <typename T>
void run_train_typed(const CliConfig& c, const gafatt::Dataset& dataset,
                     const std::string& report_path, const std::string& checkpoint_path) {
    const auto encoded = gafatt::encode_dataset(dataset, build_encode_options(c));
    const std::size_t n = encoded.size();
    auto n_val = static_cast<std::size_t>(std::llround(c.val_frac * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    gafatt::Rng split_rng(gafatt::derive_seed(c.seed, 0x73706c6974ULL));  // "split"
    split_rng.shuffle(order);
    std::vector<const gafatt::EncodedTrial*> val_set, train_set;
    for (std::size_t i = 0; i < n; ++i)
        (i < n_val ? val_set : train_set).push_back(&encoded[order[i]]);

    gafatt::AttnCnnConfig model_config = build_model_config(c);
    auto model = gafatt::build_model<T>(model_config);
    const auto history = gafatt::train(model, std::span<const gafatt::EncodedTrial* const>(train_set),
                                       std::span<const gafatt::EncodedTrial* const>(val_set),
                                       build_train_config(c));
    const double val_mae =
        gafatt::evaluate_mae(model, std::span<const gafatt::EncodedTrial* const>(val_set));

    json echo = config_echo(c);
    echo["command"] = "train";
    echo["model"] = model_config;
    gafatt::write_json(gafatt::train_report_to_json(history, val_mae, c.seed, echo), report_path);
    if (!checkpoint_path.empty()) gafatt::save_checkpoint(model, checkpoint_path);
    std::cout << "val MAE " << val_mae << " over " << val_set.size() << " trial(s); report at "
              << report_path << '\n';
}

void run_train(const CliConfig& c, const std::string& dataset_dir, const std::string& report_path,
               const std::string& checkpoint_path) {
    require_valid(c);
    const gafatt::Dataset dataset = gafatt::load_dataset(dataset_dir);
    if (c.precision == "f64")
        run_train_typed<double>(c, dataset, report_path, checkpoint_path);
    else
        run_train_typed<float>(c, dataset, report_path, checkpoint_path);
}

template <typename T>
void run_cv_typed(const CliConfig& c, const gafatt::Dataset& dataset, const std::string& report_path,
                  const std::string& curves_path) {
    gafatt::CvOptions options;
    options.n_folds = c.folds;
    options.seed = c.seed;
    options.workers = c.workers;
    options.train = build_train_config(c);
    options.model = build_model_config(c);
    options.encode = build_encode_options(c);

    const auto encoded = gafatt::encode_dataset(dataset, options.encode);
    const gafatt::CvReport report = gafatt::cross_validate<T>(encoded, options);

    json echo = config_echo(c);
    echo["command"] = "cv";
    echo["model"] = options.model;
    gafatt::write_json(gafatt::cv_report_to_json(report, echo, c.workers), report_path);
    if (!curves_path.empty()) gafatt::write_curves_csv(report, curves_path);
    std::cout << "validation MAE (mean ± std): " << format_mae(report.mean_mae, report.std_mae)
              << " over " << report.n_folds << " folds (constant-median baseline "
              << format_mae(report.baseline_mean_mae, report.baseline_std_mae) << "); report at "
              << report_path << '\n';
}

void run_cv(const CliConfig& c, const std::string& dataset_dir, const std::string& report_path,
            const std::string& curves_path) {
    require_valid(c);
    const gafatt::Dataset dataset = gafatt::load_dataset(dataset_dir);
    if (c.precision == "f64")
        run_cv_typed<double>(c, dataset, report_path, curves_path);
    else
        run_cv_typed<float>(c, dataset, report_path, curves_path);
}

template <typename T>
void run_predict_typed(const CliConfig& c, const std::string& checkpoint_path,
                       const std::string& gafi_path, const std::string& dataset_dir, int subject,
                       int trial) {
    auto model = gafatt::load_checkpoint<T>(checkpoint_path);
    gafatt::GadfImage image;
    if (!gafi_path.empty()) {
        image = gafatt::load_gafi(gafi_path);
    } else {
        const gafatt::Dataset dataset = gafatt::load_dataset(dataset_dir);
        const auto& record = find_trial(dataset, subject, trial);
        const auto segment = gafatt::extract_listening_segment(record, dataset.signal_for(subject));
        image = gafatt::encode_trial(
            segment, build_encode_options(c),
            gafatt::TrialProvenance{record.subject_id, record.trial_id, record.attention_score});
    }
    const auto input = gafatt::image_to_tensor<T>(image);
    const double pred =
        std::clamp(static_cast<double>(model.forward(input, gafatt::nn::Mode::eval)), 0.0, 100.0);
    std::cout << pred << '\n';
}

void run_predict(const CliConfig& c, const std::string& checkpoint_path, const std::string& gafi_path,
                 const std::string& dataset_dir, int subject, int trial) {
    require_valid(c);
    if (gafi_path.empty() && dataset_dir.empty())
        gafatt::fail(gafatt::ErrorCategory::argument,
                     "predict needs either --gafi or --dataset with --subject/--trial");
    if (c.precision == "f64")
        run_predict_typed<double>(c, checkpoint_path, gafi_path, dataset_dir, subject, trial);
    else
        run_predict_typed<float>(c, checkpoint_path, gafi_path, dataset_dir, subject, trial);
}

}  // namespace

int main(int argc, char** argv) {
    CliConfig config;

    try {
        if (const char* env_seed = std::getenv("GAF_ATTN_SEED")) {
            config.seed = static_cast<std::uint64_t>(
                gafatt::csv::parse_int(env_seed, "GAF_ATTN_SEED environment variable"));
        }
        // The config file is applied before flag parsing so flags override it.
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                apply_config_file(config, argv[i + 1]);
                break;
            }
            if (arg.rfind("--config=", 0) == 0) {
                apply_config_file(config, arg.substr(9));
                break;
            }
        }
    } catch (const gafatt::Error& e) {
        std::cerr << "error[" << e.category_name() << "]: " << e.what() << '\n';
        return 1;
    }

    CLI::App app{"Gramian angular field encoding and CNN regression for EEG attention scores"};
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("--config", config_file, "JSON config file; flags override its values");
    app.add_option("--seed", config.seed, "master seed (env GAF_ATTN_SEED overrides this default)")
        ->capture_default_str();
    app.add_option("--workers", config.workers, "worker threads for fold fan-out")
        ->capture_default_str();

    std::string dataset_dir, out_dir, out_path, in_path, report_path, curves_path, checkpoint_path,
        gafi_path;
    int subject = 1, trial = 1, channel = 0;

    auto add_encode_flags = [&](CLI::App* sub) {
        sub->add_option("--paa", config.paa, "max series length before encoding; 0 disables")
            ->capture_default_str();
        sub->add_option("--encoder", config.encoder, "gadf or gasf")->capture_default_str();
    };
    auto add_train_flags = [&](CLI::App* sub) {
        sub->add_option("--epochs", config.epochs, "training epochs")->capture_default_str();
        sub->add_option("--lr", config.lr, "initial Adam learning rate")->capture_default_str();
        sub->add_option("--lr-decay", config.lr_decay, "per-epoch learning-rate decay factor")
            ->capture_default_str();
        sub->add_option("--batch-size", config.batch_size, "fixed at 1")->capture_default_str();
        sub->add_option("--precision", config.precision, "f32 or f64")->capture_default_str();
        sub->add_option("--dropout", config.dropout, "dropout rate in the first dense layer")
            ->capture_default_str();
        sub->add_option("--conv-filters", config.conv_filters, "4 per-block filter counts")
            ->expected(4);
        sub->add_option("--adaptive-grid", config.adaptive_grid, "adaptive pool output grid")
            ->capture_default_str();
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
    synth->add_option("--out", out_dir, "output dataset directory")->required();
    synth->add_option("--subjects", config.subjects, "number of subjects")->capture_default_str();
    synth->add_option("--trials", config.trials, "trials per subject")->capture_default_str();
    synth->add_option("--listening-min", config.listening_min_s, "min listening seconds")
        ->capture_default_str();
    synth->add_option("--listening-max", config.listening_max_s, "max listening seconds")
        ->capture_default_str();
    synth->add_option("--snr-levels", config.snr_levels, "background-noise SNR levels in dB");
    synth->add_option("--sentence-min", config.sentence_min_words, "min words per sentence")
        ->capture_default_str();
    synth->add_option("--sentence-max", config.sentence_max_words, "max words per sentence")
        ->capture_default_str();
    synth->add_option("--score-lo", config.score_lo, "mean score at the noisiest SNR level")
        ->capture_default_str();
    synth->add_option("--score-hi", config.score_hi, "mean score at the cleanest SNR level")
        ->capture_default_str();
    synth->add_option("--score-jitter", config.score_jitter, "uniform score jitter half-width")
        ->capture_default_str();
    synth->callback([&] { run_synth(config, out_dir); });

    CLI::App* score = app.add_subcommand("score", "attention scores for a heard/written CSV");
    score->add_option("--in", in_path, "CSV with header heard,written (pipe-delimited words)")
        ->required();
    score->add_option("--out", out_path, "output CSV; stdout when omitted");
    score->callback([&] { run_score(in_path, out_path); });

    CLI::App* encode = app.add_subcommand("encode", "encode a dataset into a .gafi cache");
    encode->add_option("--dataset", dataset_dir, "dataset directory")->required();
    encode->add_option("--out", out_dir, "cache output directory")->required();
    add_encode_flags(encode);
    encode->callback([&] { run_encode(config, dataset_dir, out_dir); });

    CLI::App* export_image = app.add_subcommand("export-image", "write one channel as binary PGM");
    export_image->add_option("--dataset", dataset_dir, "dataset directory")->required();
    export_image->add_option("--subject", subject, "subject id")->required();
    export_image->add_option("--trial", trial, "trial id")->required();
    export_image->add_option("--channel", channel, "channel index in [0, 14)")->capture_default_str();
    export_image->add_option("--out", out_path, "output .pgm path")->required();
    add_encode_flags(export_image);
    export_image->callback(
        [&] { run_export_image(config, dataset_dir, subject, trial, channel, out_path); });

    CLI::App* train = app.add_subcommand("train", "train on a single seeded split");
    train->add_option("--dataset", dataset_dir, "dataset directory")->required();
    train->add_option("--out-report", report_path, "output report JSON")->required();
    train->add_option("--checkpoint", checkpoint_path, "write trained model checkpoint here");
    train->add_option("--val-frac", config.val_frac, "fraction of trials held out for validation")
        ->capture_default_str();
    add_encode_flags(train);
    add_train_flags(train);
    train->callback([&] { run_train(config, dataset_dir, report_path, checkpoint_path); });

    CLI::App* cv = app.add_subcommand("cv", "k-fold cross-validation run");
    cv->add_option("--dataset", dataset_dir, "dataset directory")->required();
    cv->add_option("--folds", config.folds, "number of folds")->capture_default_str();
    cv->add_option("--out-report", report_path, "output report JSON")->required();
    cv->add_option("--curves", curves_path, "optional per-epoch curves CSV");
    add_encode_flags(cv);
    add_train_flags(cv);
    cv->callback([&] { run_cv(config, dataset_dir, report_path, curves_path); });

    CLI::App* predict = app.add_subcommand("predict", "predict a score from a checkpoint");
    predict->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    predict->add_option("--gafi", gafi_path, "encoded trial file");
    predict->add_option("--dataset", dataset_dir, "dataset directory (with --subject/--trial)");
    predict->add_option("--subject", subject, "subject id")->capture_default_str();
    predict->add_option("--trial", trial, "trial id")->capture_default_str();
    predict->add_option("--precision", config.precision, "f32 or f64")->capture_default_str();
    add_encode_flags(predict);
    predict->callback(
        [&] { run_predict(config, checkpoint_path, gafi_path, dataset_dir, subject, trial); });

    for (CLI::App* sub : {synth, score, encode, export_image, train, cv, predict})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const gafatt::Error& e) {
        std::cerr << "error[" << e.category_name() << "]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
