#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>

#include "ghostrec/error.hpp"
#include "ghostrec/measurement.hpp"

namespace ghostrec {

inline constexpr std::uint16_t kEnsembleFormatVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
    std::uint64_t bits = 0;
    if constexpr (std::is_floating_point_v<T>) {
        bits = std::bit_cast<std::uint64_t>(static_cast<double>(v));
    } else {
        bits = static_cast<std::uint64_t>(v);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& is) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int c = is.get();
        if (c == EOF) throw IoError("truncated ensemble file");
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    if constexpr (std::is_floating_point_v<T>) {
        return std::bit_cast<double>(bits);
    } else {
        return static_cast<T>(bits);
    }
}

}  // namespace detail

/// "GISC", u16 version, u32 K, u16 n_x, u16 n_y, f64 pitch, then K raster
/// images and K bucket values, all little-endian f64.
inline void write_ensemble(const std::filesystem::path& path, const SpeckleEnsemble& e, const MeasurementVector& y) {
    if (e.count() != y.size()) throw DimensionMismatch("ensemble and measurement counts differ");
    if (e.grid.nx > 65535 || e.grid.ny > 65535) throw InvalidArgument("camera grid too large for the ensemble format");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write("GISC", 4);
    detail::put_le<std::uint16_t>(f, kEnsembleFormatVersion);
    detail::put_le<std::uint32_t>(f, static_cast<std::uint32_t>(e.count()));
    detail::put_le<std::uint16_t>(f, static_cast<std::uint16_t>(e.grid.nx));
    detail::put_le<std::uint16_t>(f, static_cast<std::uint16_t>(e.grid.ny));
    detail::put_le<double>(f, e.grid.pitch);
    for (const auto& img : e.images) {
        if (img.rows() != e.grid.ny || img.cols() != e.grid.nx) throw DimensionMismatch("ensemble image shape differs");
        for (double v : img.flat()) detail::put_le<double>(f, v);
    }
    for (double v : y.values) detail::put_le<double>(f, v);
    if (!f) throw IoError("write failed for " + path.string());
}

inline std::pair<SpeckleEnsemble, MeasurementVector> read_ensemble(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "GISC", 4) != 0) throw IoError(path.string() + " is not a GISC ensemble");
    const auto version = detail::get_le<std::uint16_t>(f);
    if (version != kEnsembleFormatVersion) throw IoError("unsupported ensemble format version " + std::to_string(version));
    const auto K = detail::get_le<std::uint32_t>(f);
    const auto nx = detail::get_le<std::uint16_t>(f);
    const auto ny = detail::get_le<std::uint16_t>(f);
    const double pitch = detail::get_le<double>(f);
    if (K == 0 || K > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) throw IoError("bad ensemble count");
    SpeckleEnsemble e{Grid(nx, ny, pitch), {}};
    e.images.reserve(K);
    for (std::uint32_t s = 0; s < K; ++s) {
        Image img(ny, nx);
        for (auto& v : img.flat()) v = detail::get_le<double>(f);
        e.images.push_back(std::move(img));
    }
    MeasurementVector y;
    y.values.resize(K);
    for (auto& v : y.values) v = detail::get_le<double>(f);
    if (f.peek() != EOF) throw IoError("trailing bytes in ensemble file " + path.string());
    return {std::move(e), std::move(y)};
}

}  // namespace ghostrec
