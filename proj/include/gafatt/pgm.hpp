#ifndef GAFATT_PGM_HPP
#define GAFATT_PGM_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gafatt/error.hpp"
#include "gafatt/gaf.hpp"

namespace gafatt {

// [-1, 1] -> [0, 255] with rounding half away from zero.
inline std::uint8_t pgm_pixel(double v) {
    const double scaled = std::round((v + 1.0) * 127.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

// Binary PGM (P5), maxval 255, one byte per pixel.
inline void export_pgm(const GadfImage& image, int channel, const std::filesystem::path& path) {
    if (channel < 0 || channel >= kEegChannels)
        fail(ErrorCategory::argument,
             "export_pgm: channel " + std::to_string(channel) + " outside [0, " +
                 std::to_string(kEegChannels) + ")");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
    const std::size_t k = image.size;
    out << "P5\n" << k << ' ' << k << "\n255\n";
    std::vector<std::uint8_t> row(k);
    const float* plane = image.channel(channel);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) row[j] = pgm_pixel(plane[i * k + j]);
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(k));
    }
    if (!out) fail(ErrorCategory::io, "write failed for " + path.string());
}

}  // namespace gafatt

#endif  // GAFATT_PGM_HPP
