#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ghostrec/error.hpp"
#include "ghostrec/fft.hpp"
#include "ghostrec/grid.hpp"
#include "ghostrec/rng.hpp"

namespace ghostrec {

/// Sampled complex scalar field on a uniform grid.
struct ComplexField {
    Grid grid;
    ComplexImage values;
    double wavelength = 0.0;  // meters

    ComplexField() = default;
    ComplexField(Grid g, double lambda) : grid(g), values(g.ny, g.nx), wavelength(lambda) {}

    /// Sum of |E|^2 * pitch^2.
    [[nodiscard]] double total_power() const {
        double s = 0.0;
        for (const auto& v : values.flat()) s += std::norm(v);
        return s * grid.pitch * grid.pitch;
    }

    [[nodiscard]] Image intensity() const {
        Image out(values.rows(), values.cols());
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::norm(values[i]);
        return out;
    }

    [[nodiscard]] bool all_finite() const {
        return std::all_of(values.flat().begin(), values.flat().end(),
                           [](const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
    }
};

enum class Envelope { uniform_disk, gaussian_waist };

/// Pseudo-thermal source: a laser spot of transverse size D on a ground-glass
/// diffuser.
struct SourceSpec {
    double diameter = 0.6e-3;      // D, meters
    Envelope envelope = Envelope::uniform_disk;
    double wavelength = 650e-9;    // meters
    std::uint64_t seed = 1;

    void validate() const {
        if (!(diameter > 0.0) || !std::isfinite(diameter)) throw InvalidArgument("source diameter must be > 0");
        if (!(wavelength > 0.0) || !std::isfinite(wavelength)) throw InvalidArgument("wavelength must be > 0");
    }
};

/// Field amplitude envelope at radius r. The gaussian waist has 1/e^2
/// intensity diameter D and is cut off at radius D.
inline double envelope_amplitude(const SourceSpec& spec, double r) {
    const double radius = 0.5 * spec.diameter;
    switch (spec.envelope) {
        case Envelope::uniform_disk:
            return r <= radius ? 1.0 : 0.0;
        case Envelope::gaussian_waist:
            return r <= spec.diameter ? std::exp(-(r * r) / (radius * radius)) : 0.0;
    }
    return 0.0;
}

/// One ground-glass realization: envelope times an i.i.d. uniform phase per
/// pixel, drawn from the stream keyed by (spec.seed, realization_index).
inline ComplexField sample_source_field(const SourceSpec& spec, const Grid& grid, std::uint64_t realization_index) {
    spec.validate();
    grid.validate();
    const double support = spec.envelope == Envelope::uniform_disk ? spec.diameter : 2.0 * spec.diameter;
    if (std::min(grid.extent_x(), grid.extent_y()) < 2.0 * spec.diameter)
        throw GridTooSmall("grid extent " + std::to_string(std::min(grid.extent_x(), grid.extent_y())) +
                           " m is smaller than 2*D = " + std::to_string(2.0 * spec.diameter) + " m");

    ComplexField field(grid, spec.wavelength);
    auto rng = make_stream(spec.seed, StreamTag::source_phase, realization_index);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double reach = 0.5 * support;
    for (int r = 0; r < grid.ny; ++r) {
        const double y = grid.y(r);
        if (std::abs(y) > reach) continue;
        for (int c = 0; c < grid.nx; ++c) {
            const double x = grid.x(c);
            const double amp = envelope_amplitude(spec, std::hypot(x, y));
            if (amp == 0.0) continue;
            field.values(r, c) = std::polar(amp, phase(rng));
        }
    }
    return field;
}

/// 2 a^2 / lambda: distance beyond which an aperture of size a is in its far field.
inline double far_field_distance(double aperture, double wavelength) {
    if (!(aperture > 0.0) || !(wavelength > 0.0)) throw InvalidArgument("far_field_distance needs positive inputs");
    return 2.0 * aperture * aperture / wavelength;
}

/// lambda z / D: transverse speckle size on a plane at distance z from a
/// source of size D.
inline double speckle_size(double wavelength, double z, double source_diameter) {
    if (!(wavelength > 0.0) || !(z > 0.0) || !(source_diameter > 0.0))
        throw InvalidArgument("speckle_size needs positive inputs");
    return wavelength * z / source_diameter;
}

enum class PropagationMethod { automatic, angular_spectrum, fresnel };

inline std::string to_string(PropagationMethod m) {
    switch (m) {
        case PropagationMethod::automatic: return "auto";
        case PropagationMethod::angular_spectrum: return "angular_spectrum";
        case PropagationMethod::fresnel: return "fresnel";
    }
    return "?";
}

/// Largest distance the angular-spectrum transfer function can be sampled at
/// on this grid: N * pitch^2 / lambda.
inline double angular_spectrum_limit(const Grid& grid, double wavelength) {
    return std::min(grid.nx, grid.ny) * grid.pitch * grid.pitch / wavelength;
}

/// Output pitch of the single-transform Fresnel propagator: lambda z / (N pitch).
inline double fresnel_output_pitch(const Grid& grid, double wavelength, double distance) {
    return wavelength * distance / (grid.nx * grid.pitch);
}

/// The method `automatic` resolves to for this field and distance.
inline PropagationMethod select_method(const ComplexField& field, double distance) {
    return distance <= angular_spectrum_limit(field.grid, field.wavelength) ? PropagationMethod::angular_spectrum
                                                                           : PropagationMethod::fresnel;
}

namespace detail {

inline double reduced_phase(double cycles) {
    return 2.0 * std::numbers::pi * (cycles - std::floor(cycles));
}

inline ComplexField propagate_angular_spectrum(const ComplexField& in, double z) {
    const Grid& g = in.grid;
    const double lambda = in.wavelength;
    const double limit = angular_spectrum_limit(g, lambda);
    if (z > limit)
        throw SamplingViolation("angular-spectrum propagation over " + std::to_string(z) +
                                    " m exceeds the sampling limit N*pitch^2/lambda = " + std::to_string(limit) + " m",
                                limit);

    ComplexField out = in;
    fft::ifftshift(out.values);
    fft::transform(out.values, fft::Direction::forward);
    const double inv_l2 = 1.0 / (lambda * lambda);
    const double dfx = 1.0 / g.extent_x(), dfy = 1.0 / g.extent_y();
    for (int r = 0; r < g.ny; ++r) {
        const double fy = fft::frequency_index(r, g.ny) * dfy;
        for (int c = 0; c < g.nx; ++c) {
            const double fx = fft::frequency_index(c, g.nx) * dfx;
            const double arg = inv_l2 - fx * fx - fy * fy;
            Complex h;
            if (arg >= 0.0) {
                h = std::polar(1.0, reduced_phase(z * std::sqrt(arg)));
            } else {
                h = Complex(std::exp(-2.0 * std::numbers::pi * z * std::sqrt(-arg)), 0.0);
            }
            out.values(r, c) *= h;
        }
    }
    fft::transform(out.values, fft::Direction::inverse);
    fft::fftshift(out.values);
    return out;
}

inline ComplexField propagate_fresnel(const ComplexField& in, double z) {
    const Grid& g = in.grid;
    if (g.nx != g.ny) throw InvalidArgument("single-transform Fresnel propagation needs a square grid");
    const double lambda = in.wavelength;

    // The input chirp must not alias anywhere the field is nonzero.
    double r_max = 0.0;
    for (int r = 0; r < g.ny; ++r)
        for (int c = 0; c < g.nx; ++c)
            if (in.values(r, c) != Complex{}) r_max = std::max(r_max, std::hypot(g.x(c), g.y(r)));
    const double critical = 2.0 * g.pitch * r_max / lambda;
    if (z < critical)
        throw SamplingViolation("Fresnel propagation over " + std::to_string(z) +
                                    " m aliases the input chirp; needs at least " + std::to_string(critical) + " m",
                                critical);

    const double k_chirp = 1.0 / (lambda * z);  // cycles per m^2, times 1/2 below
    ComplexField work = in;
    for (int r = 0; r < g.ny; ++r)
        for (int c = 0; c < g.nx; ++c) {
            const double rho2 = g.x(c) * g.x(c) + g.y(r) * g.y(r);
            work.values(r, c) *= std::polar(1.0, reduced_phase(0.5 * k_chirp * rho2));
        }
    fft::ifftshift(work.values);
    fft::transform(work.values, fft::Direction::forward);
    fft::fftshift(work.values);

    const Grid og(g.nx, g.ny, fresnel_output_pitch(g, lambda, z));
    ComplexField out(og, lambda);
    // e^{ikz} / (i lambda z) * pitch^2 keeps sum |U|^2 pitch'^2 equal to the input power.
    const Complex front = std::polar(g.pitch * g.pitch / (lambda * z), reduced_phase(z / lambda) - 0.5 * std::numbers::pi);
    for (int r = 0; r < og.ny; ++r)
        for (int c = 0; c < og.nx; ++c) {
            const double rho2 = og.x(c) * og.x(c) + og.y(r) * og.y(r);
            out.values(r, c) = front * std::polar(1.0, reduced_phase(0.5 * k_chirp * rho2)) * work.values(r, c);
        }
    return out;
}

/// Output of propagate_fresnel restricted to the window [r0, r0+rows) x
/// [c0, c0+cols) of the output grid. Evaluates the same discrete transform as
/// the full propagator as a direct separable sum over the nonzero input
/// pixels, which is much cheaper when the source support is small.
inline ComplexImage propagate_fresnel_window(const ComplexField& in, double z, int r0, int c0, int rows, int cols) {
    const Grid& g = in.grid;
    if (g.nx != g.ny) throw InvalidArgument("single-transform Fresnel propagation needs a square grid");
    if (r0 < 0 || c0 < 0 || rows < 1 || cols < 1 || r0 + rows > g.ny || c0 + cols > g.nx)
        throw DimensionMismatch("Fresnel output window outside the grid");
    const double lambda = in.wavelength;
    const int n = g.nx, s = n / 2;

    std::vector<int> nz_rows;
    std::vector<std::vector<std::pair<int, Complex>>> row_entries;
    double r_max = 0.0;
    const double k_chirp = 1.0 / (lambda * z);
    for (int r = 0; r < g.ny; ++r) {
        std::vector<std::pair<int, Complex>> entries;
        for (int c = 0; c < g.nx; ++c) {
            const Complex v = in.values(r, c);
            if (v == Complex{}) continue;
            const double rho2 = g.x(c) * g.x(c) + g.y(r) * g.y(r);
            r_max = std::max(r_max, std::sqrt(rho2));
            entries.emplace_back(c, v * std::polar(1.0, reduced_phase(0.5 * k_chirp * rho2)));
        }
        if (!entries.empty()) {
            nz_rows.push_back(r);
            row_entries.push_back(std::move(entries));
        }
    }
    const double critical = 2.0 * g.pitch * r_max / lambda;
    if (z < critical)
        throw SamplingViolation("Fresnel propagation over " + std::to_string(z) +
                                    " m aliases the input chirp; needs at least " + std::to_string(critical) + " m",
                                critical);

    auto twiddle = [n, s](int out_index, int in_index) {
        const long long prod = static_cast<long long>(out_index - s) * (in_index - s);
        const long long m = ((prod % n) + n) % n;
        return std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m) / n);
    };

    // Transform along x for each nonzero input row, then along y.
    ComplexImage partial(static_cast<int>(nz_rows.size()), cols);
    for (std::size_t i = 0; i < nz_rows.size(); ++i)
        for (int oc = 0; oc < cols; ++oc) {
            Complex acc{};
            for (const auto& [c, v] : row_entries[i]) acc += v * twiddle(c0 + oc, c);
            partial(static_cast<int>(i), oc) = acc;
        }
    ComplexImage out(rows, cols);
    const Grid og(g.nx, g.ny, fresnel_output_pitch(g, lambda, z));
    const Complex front = std::polar(g.pitch * g.pitch / (lambda * z), reduced_phase(z / lambda) - 0.5 * std::numbers::pi);
    for (int orow = 0; orow < rows; ++orow) {
        std::vector<Complex> tw(nz_rows.size());
        for (std::size_t i = 0; i < nz_rows.size(); ++i) tw[i] = twiddle(r0 + orow, nz_rows[i]);
        for (int oc = 0; oc < cols; ++oc) {
            Complex acc{};
            for (std::size_t i = 0; i < nz_rows.size(); ++i) acc += tw[i] * partial(static_cast<int>(i), oc);
            const double x = og.x(c0 + oc), y = og.y(r0 + orow);
            out(orow, oc) = front * std::polar(1.0, reduced_phase(0.5 * k_chirp * (x * x + y * y))) * acc;
        }
    }
    return out;
}

}  // namespace detail

/// Free-space scalar propagation over `distance` meters.
///
/// angular_spectrum keeps the grid and conserves power exactly (up to
/// evanescent loss); fresnel is a single-FFT Fresnel transform whose output
/// pitch is lambda z / (N pitch). `automatic` picks angular_spectrum whenever
/// its sampling limit allows.
inline ComplexField propagate(const ComplexField& field, double distance,
                              PropagationMethod method = PropagationMethod::automatic) {
    if (!(distance > 0.0) || !std::isfinite(distance)) throw InvalidArgument("propagation distance must be > 0");
    if (!(field.wavelength > 0.0)) throw InvalidArgument("field wavelength must be > 0");
    if (method == PropagationMethod::automatic) method = select_method(field, distance);
    return method == PropagationMethod::angular_spectrum ? detail::propagate_angular_spectrum(field, distance)
                                                         : detail::propagate_fresnel(field, distance);
}

}  // namespace ghostrec
