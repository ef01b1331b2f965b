#ifndef GAFATT_GAF_HPP
#define GAFATT_GAF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gafatt/dataset.hpp"
#include "gafatt/error.hpp"

namespace gafatt {

enum class GafEncoder { GADF, GASF };

inline const char* to_string(GafEncoder e) { return e == GafEncoder::GADF ? "gadf" : "gasf"; }

inline GafEncoder encoder_from_string(const std::string& text) {
    if (text == "gadf") return GafEncoder::GADF;
    if (text == "gasf") return GafEncoder::GASF;
    fail(ErrorCategory::config, "unknown encoder '" + text + "' (expected gadf or gasf)");
}

struct EncodeOptions {
    GafEncoder encoder = GafEncoder::GADF;
    int paa_target = 0;  // 0 disables length reduction

    void validate() const {
        if (paa_target != 0 && paa_target < 2)
            fail(ErrorCategory::config, "paa_target must be >= 2 when set");
    }
};

// Values in [-1, 1]; min maps to -1 and max to +1 for non-constant input.
struct RescaledSeries {
    std::vector<double> values;
};

struct PolarSeries {
    std::vector<double> phi;  // arccos(value), in [0, pi]
    std::vector<double> r;    // i/k for i = 1..k
};

struct GadfMatrix {
    std::size_t size = 0;
    std::vector<double> entries;  // size x size, row-major

    double at(std::size_t i, std::size_t j) const { return entries[i * size + j]; }
};

struct GadfImage {
    std::size_t size = 0;  // k; every channel is k x k
    std::vector<float> data;  // kEegChannels * k * k, row-major per channel
    int subject_id = 0;
    int trial_id = 0;
    double target = 0.0;  // attention score percent

    const float* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * size * size; }
    float* channel(int c) { return data.data() + static_cast<std::size_t>(c) * size * size; }
};

// Min-max rescaling onto [-1, 1]:
//   f(x) = ((x - max X) + (x - min X)) / (max X - min X).
// A constant series maps to all zeros (the formula is 0/0 there); outputs are
// clamped to absorb floating-point overshoot of at most ~1e-12.
inline RescaledSeries rescale(const std::vector<double>& series) {
    if (series.empty()) fail(ErrorCategory::encode, "rescale: empty series");
    double lo = series[0], hi = series[0];
    for (double v : series) {
        if (!std::isfinite(v)) fail(ErrorCategory::encode, "rescale: non-finite value in series");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    RescaledSeries out;
    out.values.resize(series.size());
    if (hi == lo) {
        std::fill(out.values.begin(), out.values.end(), 0.0);
        return out;
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double v = ((series[i] - hi) + (series[i] - lo)) / range;
        out.values[i] = std::clamp(v, -1.0, 1.0);
    }
    return out;
}

inline PolarSeries to_polar(const RescaledSeries& rescaled) {
    const std::size_t k = rescaled.values.size();
    PolarSeries out;
    out.phi.resize(k);
    out.r.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.phi[i] = std::acos(std::clamp(rescaled.values[i], -1.0, 1.0));
        out.r[i] = static_cast<double>(i + 1) / static_cast<double>(k);
    }
    return out;
}

namespace detail {

template <typename Sink>
void gaf_entries(const RescaledSeries& rescaled, GafEncoder encoder, Sink&& sink) {
    const PolarSeries polar = to_polar(rescaled);
    const std::size_t k = polar.phi.size();
    std::vector<double> sin_phi(k), cos_phi(k);
    for (std::size_t i = 0; i < k; ++i) {
        sin_phi[i] = std::sin(polar.phi[i]);
        cos_phi[i] = std::cos(polar.phi[i]);
    }
    if (encoder == GafEncoder::GADF) {
        // sin(phi_i - phi_j)
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                sink(i, j, sin_phi[i] * cos_phi[j] - cos_phi[i] * sin_phi[j]);
    } else {
        // cos(phi_i + phi_j)
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                sink(i, j, cos_phi[i] * cos_phi[j] - sin_phi[i] * sin_phi[j]);
    }
}

}  // namespace detail

// GADF[i][j] = sin(phi_i - phi_j): antisymmetric with a zero diagonal.
inline GadfMatrix gadf_matrix(const RescaledSeries& rescaled) {
    GadfMatrix out;
    out.size = rescaled.values.size();
    out.entries.resize(out.size * out.size);
    detail::gaf_entries(rescaled, GafEncoder::GADF,
                        [&](std::size_t i, std::size_t j, double v) { out.entries[i * out.size + j] = v; });
    for (std::size_t i = 0; i < out.size; ++i) out.entries[i * out.size + i] = 0.0;
    return out;
}

// GASF[i][j] = cos(phi_i + phi_j): symmetric.
inline GadfMatrix gasf_matrix(const RescaledSeries& rescaled) {
    GadfMatrix out;
    out.size = rescaled.values.size();
    out.entries.resize(out.size * out.size);
    detail::gaf_entries(rescaled, GafEncoder::GASF,
                        [&](std::size_t i, std::size_t j, double v) { out.entries[i * out.size + j] = v; });
    return out;
}

// Piecewise aggregate approximation: contiguous index bins
// [floor(b*k/T), floor((b+1)*k/T)) and each bin's mean. Identity when the
// series is already short enough.
inline std::vector<double> paa_reduce(const std::vector<double>& series, int target_len) {
    if (target_len < 1) fail(ErrorCategory::encode, "paa_reduce: target length must be >= 1");
    const std::size_t k = series.size();
    const std::size_t target = static_cast<std::size_t>(target_len);
    if (target >= k) return series;
    std::vector<double> out(target);
    for (std::size_t b = 0; b < target; ++b) {
        const std::size_t begin = b * k / target;
        const std::size_t end = (b + 1) * k / target;
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) sum += series[i];
        out[b] = sum / static_cast<double>(end - begin);
    }
    return out;
}

struct TrialProvenance {
    int subject_id = 0;
    int trial_id = 0;
    double target = 0.0;
};

// Per channel: optional PAA, rescale, GADF/GASF; the 14 matrices are stacked
// into one image. Images keep their natural per-trial size; no padding.
inline GadfImage encode_trial(const EegSegment& segment, const EncodeOptions& options,
                              const TrialProvenance& provenance = {}) {
    options.validate();
    std::size_t k = segment.samples_per_channel;
    if (options.paa_target != 0)
        k = std::min(k, static_cast<std::size_t>(options.paa_target));
    if (k < 2)
        fail(ErrorCategory::encode,
             "encode_trial: series length " + std::to_string(k) + " after reduction; need >= 2");

    GadfImage image;
    image.size = k;
    image.subject_id = provenance.subject_id;
    image.trial_id = provenance.trial_id;
    image.target = provenance.target;
    image.data.resize(static_cast<std::size_t>(kEegChannels) * k * k);
    std::vector<double> series(segment.samples_per_channel);
    for (int c = 0; c < kEegChannels; ++c) {
        series.assign(segment.channel(c), segment.channel(c) + segment.samples_per_channel);
        if (options.paa_target != 0) series = paa_reduce(series, options.paa_target);
        const RescaledSeries scaled = rescale(series);
        float* plane = image.channel(c);
        detail::gaf_entries(scaled, options.encoder, [&](std::size_t i, std::size_t j, double v) {
            plane[i * k + j] = static_cast<float>(v);
        });
        if (options.encoder == GafEncoder::GADF)
            for (std::size_t i = 0; i < k; ++i) plane[i * k + i] = 0.0f;
    }
    return image;
}

}  // namespace gafatt

#endif  // GAFATT_GAF_HPP
