#ifndef GAFATT_GAFI_HPP
#define GAFATT_GAFI_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "gafatt/error.hpp"
#include "gafatt/gaf.hpp"

namespace gafatt {

static_assert(std::endian::native == std::endian::little,
              "gafi/gafm serialization assumes a little-endian host");

inline constexpr std::uint32_t kGafiVersion = 1;

namespace detail {

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& context) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) fail(ErrorCategory::load, context + ": truncated file");
    return value;
}

}  // namespace detail

// One encoded trial per file: "GAFI", version u32, k u32, channels u32,
// score f64, then channels*k*k float32 planes, row-major per channel.
inline void save_gafi(const GadfImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
    out.write("GAFI", 4);
    detail::write_raw(out, kGafiVersion);
    detail::write_raw(out, static_cast<std::uint32_t>(image.size));
    detail::write_raw(out, static_cast<std::uint32_t>(kEegChannels));
    detail::write_raw(out, image.target);
    out.write(reinterpret_cast<const char*>(image.data.data()),
              static_cast<std::streamsize>(image.data.size() * sizeof(float)));
    if (!out) fail(ErrorCategory::io, "write failed for " + path.string());
}

inline GadfImage load_gafi(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::load, "cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GAFI", 4) != 0)
        fail(ErrorCategory::load, path.string() + ": not a GAFI file");
    const auto version = detail::read_raw<std::uint32_t>(in, path.string());
    if (version != kGafiVersion)
        fail(ErrorCategory::load, path.string() + ": unsupported version " + std::to_string(version));
    GadfImage image;
    image.size = detail::read_raw<std::uint32_t>(in, path.string());
    const auto channels = detail::read_raw<std::uint32_t>(in, path.string());
    if (channels != kEegChannels)
        fail(ErrorCategory::load, path.string() + ": expected " + std::to_string(kEegChannels) +
                                      " channels, got " + std::to_string(channels));
    if (image.size < 1) fail(ErrorCategory::load, path.string() + ": bad image size");
    image.target = detail::read_raw<double>(in, path.string());
    image.data.resize(static_cast<std::size_t>(channels) * image.size * image.size);
    in.read(reinterpret_cast<char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size() * sizeof(float)));
    if (!in) fail(ErrorCategory::load, path.string() + ": truncated pixel data");
    return image;
}

}  // namespace gafatt

#endif  // GAFATT_GAFI_HPP
