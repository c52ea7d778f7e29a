#pragma once

// Parameter sets on disk: one .npy file per named tensor inside a directory.

#include <t2net/error.hpp>
#include <t2net/npy.hpp>
#include <t2net/nn/ops.hpp>

#include <filesystem>
#include <string>

namespace t2net::nn {

template <typename Params>
void save_parameters(const Params& params, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    params.visit("", [&](const std::string& name, const auto& t) { npy::save(dir / (name + ".npy"), t); });
}

/// Loads into an already-shaped parameter struct; every tensor must exist with the same shape.
template <typename Params>
void load_parameters(Params& params, const std::filesystem::path& dir) {
    params.visit("", [&](const std::string& name, auto& t) {
        using T = typename std::decay_t<decltype(t)>::value_type;
        const auto path = dir / (name + ".npy");
        if (!std::filesystem::exists(path)) throw InputError("checkpoint is missing tensor " + path.string());
        auto loaded = npy::load<T>(path);
        if (loaded.shape() != t.shape()) {
            throw InputError("checkpoint tensor " + name + " has shape " + shape_string(loaded.shape()) +
                             ", expected " + shape_string(t.shape()));
        }
        t = std::move(loaded);
    });
}

} // namespace t2net::nn
