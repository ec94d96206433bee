#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "ghostrec/error.hpp"
#include "ghostrec/grid.hpp"

namespace ghostrec {

/// Real amplitude transmittance |T| sampled on the object-plane grid.
struct ObjectMask {
    Grid grid;
    Image transmittance;

    ObjectMask() = default;
    ObjectMask(Grid g, Image t) : grid(g), transmittance(std::move(t)) { validate(); }

    void validate() const {
        if (transmittance.rows() != grid.ny || transmittance.cols() != grid.nx)
            throw DimensionMismatch("transmittance shape does not match the object grid");
        bool any = false;
        for (double v : transmittance.flat()) {
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("transmittance values must lie in [0, 1]");
            any = any || v > 0.0;
        }
        if (!any) throw InvalidArgument("object mask is fully opaque");
    }

    /// |T|^2, the quantity the ghost-imaging measurement is linear in.
    [[nodiscard]] Image intensity_transmission() const {
        Image out = transmittance;
        for (auto& v : out.flat()) v *= v;
        return out;
    }
};

struct DoubleSlit {
    double width = 100e-6;       // a
    double separation = 200e-6;  // d, center to center
    double height = 500e-6;      // h
    double center_x = 0.0;       // offset from the grid's geometric center
    double center_y = 0.0;
};

/// Ring with a vertical bar through it, a stand-in for a Chinese-character
/// style ring aperture. All lengths in meters.
struct RingGlyph {
    double outer_radius = 1.0e-3;
    double ring_width = 150e-6;
    double bar_width = 150e-6;
    double bar_half_length = 1.3e-3;
    double center_x = 0.0;
    double center_y = 0.0;
};

/// Rasterizes an indicator function by area fraction. Coordinates are taken
/// relative to the geometric center of the array, which sits half a pixel
/// off the optical-axis pixel for even sizes.
inline Image rasterize(const Grid& grid, const std::function<bool(double, double)>& inside, int oversample = 16) {
    Image out(grid.ny, grid.nx);
    const double cx = 0.5 * (grid.nx - 1), cy = 0.5 * (grid.ny - 1);
    const double inv = 1.0 / (oversample * oversample);
    for (int r = 0; r < grid.ny; ++r)
        for (int c = 0; c < grid.nx; ++c) {
            int hits = 0;
            for (int sy = 0; sy < oversample; ++sy)
                for (int sx = 0; sx < oversample; ++sx) {
                    const double x = (c - cx - 0.5 + (sx + 0.5) / oversample) * grid.pitch;
                    const double y = (r - cy - 0.5 + (sy + 0.5) / oversample) * grid.pitch;
                    hits += inside(x, y) ? 1 : 0;
                }
            out(r, c) = hits * inv;
        }
    return out;
}

/// Slits are separated along x and extend along y.
inline ObjectMask make_double_slit(const Grid& grid, const DoubleSlit& s) {
    if (!(s.width > 0.0) || !(s.height > 0.0) || !(s.separation >= s.width))
        throw InvalidArgument("double slit needs width > 0, height > 0 and separation >= width");
    const double half_w = 0.5 * s.width, half_d = 0.5 * s.separation, half_h = 0.5 * s.height;
    auto inside = [=](double x, double y) {
        x -= s.center_x, y -= s.center_y;
        return std::abs(y) < half_h && std::abs(std::abs(x) - half_d) < half_w;
    };
    return ObjectMask(grid, rasterize(grid, inside));
}

inline ObjectMask make_ring_glyph(const Grid& grid, const RingGlyph& g) {
    if (!(g.outer_radius > g.ring_width) || !(g.ring_width > 0.0) || !(g.bar_width > 0.0) || !(g.bar_half_length > 0.0))
        throw InvalidArgument("ring glyph dimensions are inconsistent");
    const double r_in = g.outer_radius - g.ring_width;
    auto inside = [=](double x, double y) {
        x -= g.center_x, y -= g.center_y;
        const double r = std::hypot(x, y);
        const bool ring = r < g.outer_radius && r >= r_in;
        const bool bar = std::abs(x) < 0.5 * g.bar_width && std::abs(y) < g.bar_half_length;
        return ring || bar;
    };
    return ObjectMask(grid, rasterize(grid, inside));
}

/// Places a transmittance image (values in [0,1]) at the center of the grid,
/// one image pixel per grid pixel.
inline ObjectMask make_mask_from_image(const Grid& grid, const Image& img) {
    if (img.rows() > grid.ny || img.cols() > grid.nx) throw DimensionMismatch("mask image larger than the object grid");
    Image t(grid.ny, grid.nx);
    const int r0 = grid.ny / 2 - img.rows() / 2, c0 = grid.nx / 2 - img.cols() / 2;
    for (int r = 0; r < img.rows(); ++r)
        for (int c = 0; c < img.cols(); ++c) t(r0 + r, c0 + c) = std::clamp(img(r, c), 0.0, 1.0);
    return ObjectMask(grid, std::move(t));
}

}  // namespace ghostrec
