#ifndef GAFATT_CHECKPOINT_HPP
#define GAFATT_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gafatt/error.hpp"
#include "gafatt/gafi.hpp"
#include "gafatt/model.hpp"

namespace gafatt {

inline constexpr std::uint32_t kGafmVersion = 1;

// "GAFM", version u32, config-JSON (u32 length + bytes), then every parameter
// tensor in declared order: ndim u32, dims u64 each, float64 data.
template <typename T>
void save_checkpoint(AttnCnnModel<T>& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
    out.write("GAFM", 4);
    detail::write_raw(out, kGafmVersion);
    const std::string config_json = nlohmann::json(model.config).dump();
    detail::write_raw(out, static_cast<std::uint32_t>(config_json.size()));
    out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));

    const auto params = model.params();
    detail::write_raw(out, static_cast<std::uint32_t>(params.size()));
    for (const nn::Tensor<T>* p : params) {
        detail::write_raw(out, static_cast<std::uint32_t>(p->shape.size()));
        for (std::size_t dim : p->shape) detail::write_raw(out, static_cast<std::uint64_t>(dim));
        for (const T& v : p->data) detail::write_raw(out, static_cast<double>(v));
    }
    if (!out) fail(ErrorCategory::io, "write failed for " + path.string());
}

template <typename T>
AttnCnnModel<T> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::load, "cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GAFM", 4) != 0)
        fail(ErrorCategory::load, path.string() + ": not a GAFM checkpoint");
    const auto version = detail::read_raw<std::uint32_t>(in, path.string());
    if (version != kGafmVersion)
        fail(ErrorCategory::load, path.string() + ": unsupported version " + std::to_string(version));

    const auto config_len = detail::read_raw<std::uint32_t>(in, path.string());
    std::string config_json(config_len, '\0');
    in.read(config_json.data(), config_len);
    if (!in) fail(ErrorCategory::load, path.string() + ": truncated config");
    AttnCnnConfig config;
    try {
        nlohmann::json::parse(config_json).get_to(config);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::load, path.string() + ": bad config block: " + e.what());
    }

    AttnCnnModel<T> model = build_model<T>(config);
    const auto params = model.params();
    const auto n_tensors = detail::read_raw<std::uint32_t>(in, path.string());
    if (n_tensors != params.size())
        fail(ErrorCategory::load, path.string() + ": expected " + std::to_string(params.size()) +
                                      " tensors, found " + std::to_string(n_tensors));
    for (nn::Tensor<T>* p : params) {
        const auto ndim = detail::read_raw<std::uint32_t>(in, path.string());
        nn::Shape shape(ndim);
        for (auto& dim : shape)
            dim = static_cast<std::size_t>(detail::read_raw<std::uint64_t>(in, path.string()));
        if (shape != p->shape)
            fail(ErrorCategory::load, path.string() + ": tensor shape " + nn::shape_string(shape) +
                                          " does not match model shape " + nn::shape_string(p->shape));
        for (T& v : p->data) v = static_cast<T>(detail::read_raw<double>(in, path.string()));
    }
    return model;
}

}  // namespace gafatt

#endif  // GAFATT_CHECKPOINT_HPP
