#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ghostrec/error.hpp"
#include "ghostrec/field_sim.hpp"
#include "ghostrec/image_io.hpp"
#include "ghostrec/measurement.hpp"
#include "ghostrec/sparse_solver.hpp"

namespace ghostrec {

enum class ObjectKind { double_slit, ring_glyph, file };

inline std::string to_string(ObjectKind k) {
    switch (k) {
        case ObjectKind::double_slit: return "double_slit";
        case ObjectKind::ring_glyph: return "ring_glyph";
        case ObjectKind::file: return "file";
    }
    return "?";
}

inline std::string to_string(Envelope e) { return e == Envelope::uniform_disk ? "uniform_disk" : "gaussian_waist"; }

inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::none: return "none";
        case NoiseKind::additive_gaussian: return "additive_gaussian";
        case NoiseKind::poisson: return "poisson";
    }
    return "?";
}

/// Everything a run needs. Defaults are the double-slit experiment with the
/// fine camera; lengths are meters.
struct ExperimentConfig {
    // source and geometry
    double wavelength = 650e-9;
    double D = 0.6e-3;
    Envelope envelope = Envelope::uniform_disk;
    double z = 1200e-3;
    double z1 = 500e-3;
    double L1 = 6.4e-3;
    PropagationMethod source_propagator = PropagationMethod::fresnel;
    PropagationMethod detector_propagator = PropagationMethod::automatic;

    // sampling
    int grid = 256;
    double object_pitch = 50e-6;
    double camera_pitch = 50e-6;
    double camera_fov = 6.4e-3;  // square reference-camera field of view

    // object
    ObjectKind object = ObjectKind::double_slit;
    double slit_width = 100e-6;
    double slit_separation = 200e-6;
    double slit_height = 500e-6;
    double ring_outer_radius = 1.2e-3;
    double ring_width = 250e-6;
    double bar_width = 250e-6;
    double bar_half_length = 1.5e-3;
    double object_offset_x = 50e-6;
    double object_offset_y = 50e-6;
    std::string object_file;

    // acquisition
    int K = 3000;
    std::uint64_t seed = 1;
    NoiseKind noise = NoiseKind::none;
    double noise_sigma = 0.0;
    double noise_scale = 1.0;

    // reconstruction
    BasisKind basis = BasisKind::cartesian;
    double tau = 1e-4;
    TauMode tau_mode = TauMode::relative_to_ATy_inf;
    Algorithm algorithm = Algorithm::active_set;
    StepRule step_rule = StepRule::backtracking;
    int max_iters = 2000;
    double tol = 1e-5;
    std::optional<bool> nonneg;  // unset: by basis

    // output
    std::string output = "run";
    bool save_ensemble = false;

    bool operator==(const ExperimentConfig&) const = default;

    void validate() const;

    [[nodiscard]] SolverOptions solver_options() const {
        SolverOptions o;
        o.tau = tau;
        o.tau_mode = tau_mode;
        o.algorithm = algorithm;
        o.step_rule = step_rule;
        o.max_iters = max_iters;
        o.tol_rel_objective = tol;
        o.nonneg_project = nonneg;
        return o;
    }

    [[nodiscard]] SourceSpec source_spec() const {
        SourceSpec s;
        s.diameter = D;
        s.envelope = envelope;
        s.wavelength = wavelength;
        s.seed = seed;
        return s;
    }

    [[nodiscard]] Grid object_grid() const { return Grid(grid, grid, object_pitch); }

    /// Camera side in pixels: the field of view in whole pixels, reduced to
    /// what fits on the object grid.
    [[nodiscard]] int camera_pixels() const {
        const int f = camera_box_factor(object_pitch, camera_pitch);
        const int n = static_cast<int>(std::floor(camera_fov / camera_pitch * (1.0 + 1e-12)));
        return std::min(n, grid / f);
    }

    [[nodiscard]] DetectorSpec detector_spec() const {
        DetectorSpec d;
        d.z1 = z1;
        d.aperture = L1;
        d.camera_pitch = camera_pitch;
        d.camera_fov = camera_pixels() * camera_pitch;
        d.method = detector_propagator;
        return d;
    }

    [[nodiscard]] NoiseModel noise_model() const { return {noise, noise_sigma, noise_scale}; }
};

// ---------------------------------------------------------------------------
// Value codecs

namespace detail {

struct Unit {
    std::string_view suffix;
    int exponent;
};

inline constexpr std::array<Unit, 7> kLengthUnits{{
    {"nm", -9}, {"um", -6}, {"µm", -6}, {"mm", -3}, {"cm", -2}, {"m", 0}, {"", 0}}};

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Exact decimal parse of `text` scaled by 10^exponent: the exponent is added
/// to the literal so "10mm" and "10e-3" give the same double.
inline std::optional<double> parse_scaled(std::string_view text, int exponent) {
    if (text.empty()) return std::nullopt;
    std::string mantissa(text);
    long long e = exponent;
    const auto epos = mantissa.find_first_of("eE");
    if (epos != std::string::npos) {
        const std::string_view es = std::string_view(mantissa).substr(epos + 1);
        long long given = 0;
        const char* first = es.data();
        if (!es.empty() && es.front() == '+') ++first;
        auto [p, ec] = std::from_chars(first, es.data() + es.size(), given);
        if (ec != std::errc{} || p != es.data() + es.size()) return std::nullopt;
        e += given;
        mantissa.resize(epos);
    }
    if (mantissa.empty() || mantissa.find_first_not_of("+-.0123456789") != std::string::npos) return std::nullopt;
    if (mantissa.front() == '+') mantissa.erase(0, 1);
    const std::string literal = mantissa + "e" + std::to_string(e);
    double v = 0.0;
    auto [p, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), v);
    if (ec != std::errc{} || p != literal.data() + literal.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<double> parse_length(std::string_view text) {
    for (const auto& u : kLengthUnits) {
        if (text.size() < u.suffix.size() || text.substr(text.size() - u.suffix.size()) != u.suffix) continue;
        const std::string number = trim(text.substr(0, text.size() - u.suffix.size()));
        if (auto v = parse_scaled(number, u.exponent)) return v;
    }
    return std::nullopt;
}

/// Decimal digits of the shortest round-trip form of |v| and the power of ten
/// of the last digit: |v| = digits * 10^exp10.
inline std::pair<std::string, int> decimal_digits(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, std::abs(v), std::chars_format::scientific);
    const std::string s(buf, ptr);
    const auto epos = s.find('e');
    std::string mant = s.substr(0, epos);
    int exp10 = std::stoi(s.substr(epos + 1));
    const auto dot = mant.find('.');
    if (dot != std::string::npos) {
        exp10 -= static_cast<int>(mant.size() - dot - 1);
        mant.erase(dot, 1);
    }
    return {mant, exp10};
}

/// digits * 10^shift as plain decimal text.
inline std::string shift_decimal(const std::string& digits, int shift) {
    if (shift >= 0) return digits + std::string(static_cast<std::size_t>(shift), '0');
    const int n = static_cast<int>(digits.size());
    std::string out = -shift >= n ? "0." + std::string(static_cast<std::size_t>(-shift - n), '0') + digits
                                  : digits.substr(0, n + shift) + "." + digits.substr(n + shift);
    return out;
}

/// Shortest of m, mm, um and nm forms; always parses back to exactly `v`.
inline std::string format_length(double v) {
    if (v == 0.0) return "0m";
    const auto [digits, exp10] = decimal_digits(v);
    std::string best;
    for (const auto& [suffix, exponent] : {std::pair<const char*, int>{"m", 0}, {"mm", -3}, {"um", -6}, {"nm", -9}}) {
        const std::string text = (v < 0.0 ? "-" : "") + shift_decimal(digits, exp10 - exponent) + suffix;
        if (best.empty() || text.size() < best.size()) best = text;
    }
    return best;
}

template <typename E>
struct EnumName {
    std::string_view name;
    E value;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Key table

namespace detail {

struct KeyCodec {
    std::function<bool(ExperimentConfig&, const std::string&)> parse;  // false: malformed value
    std::function<std::string(const ExperimentConfig&)> emit;
};

template <typename E, std::size_t N>
KeyCodec enum_codec(E ExperimentConfig::*field, std::array<EnumName<E>, N> names) {
    return {[=](ExperimentConfig& c, const std::string& v) {
                for (const auto& n : names)
                    if (v == n.name) {
                        c.*field = n.value;
                        return true;
                    }
                return false;
            },
            [=](const ExperimentConfig& c) {
                for (const auto& n : names)
                    if (c.*field == n.value) return std::string(n.name);
                return std::string("?");
            }};
}

inline KeyCodec length_codec(double ExperimentConfig::*field) {
    return {[=](ExperimentConfig& c, const std::string& v) {
                auto x = parse_length(v);
                if (!x) return false;
                c.*field = *x;
                return true;
            },
            [=](const ExperimentConfig& c) { return format_length(c.*field); }};
}

inline KeyCodec real_codec(double ExperimentConfig::*field) {
    return {[=](ExperimentConfig& c, const std::string& v) {
                auto x = parse_scaled(v, 0);
                if (!x) return false;
                c.*field = *x;
                return true;
            },
            [=](const ExperimentConfig& c) { return format_double(c.*field); }};
}

template <typename I>
KeyCodec int_codec(I ExperimentConfig::*field) {
    return {[=](ExperimentConfig& c, const std::string& v) {
                I x{};
                auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
                if (ec != std::errc{} || p != v.data() + v.size()) return false;
                c.*field = x;
                return true;
            },
            [=](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

inline bool parse_bool(const std::string& v, bool& out) {
    if (v == "true" || v == "yes" || v == "1") return out = true, true;
    if (v == "false" || v == "no" || v == "0") return out = false, true;
    return false;
}

inline const std::vector<std::pair<std::string, KeyCodec>>& key_table() {
    using C = ExperimentConfig;
    static const std::vector<std::pair<std::string, KeyCodec>> table = [] {
        const std::array<EnumName<PropagationMethod>, 3> methods{{{"automatic", PropagationMethod::automatic},
                                                                 {"angular_spectrum", PropagationMethod::angular_spectrum},
                                                                 {"fresnel", PropagationMethod::fresnel}}};
        std::vector<std::pair<std::string, KeyCodec>> t;
        t.emplace_back("wavelength", length_codec(&C::wavelength));
        t.emplace_back("D", length_codec(&C::D));
        t.emplace_back("envelope", enum_codec(&C::envelope, std::array<EnumName<Envelope>, 2>{
                                                                {{"uniform_disk", Envelope::uniform_disk},
                                                                 {"gaussian_waist", Envelope::gaussian_waist}}}));
        t.emplace_back("z", length_codec(&C::z));
        t.emplace_back("z1", length_codec(&C::z1));
        t.emplace_back("L1", length_codec(&C::L1));
        t.emplace_back("source_propagator", enum_codec(&C::source_propagator, methods));
        t.emplace_back("detector_propagator", enum_codec(&C::detector_propagator, methods));
        t.emplace_back("grid", int_codec(&C::grid));
        t.emplace_back("object_pitch", length_codec(&C::object_pitch));
        t.emplace_back("camera_pitch", length_codec(&C::camera_pitch));
        t.emplace_back("camera_fov", length_codec(&C::camera_fov));
        t.emplace_back("object", enum_codec(&C::object, std::array<EnumName<ObjectKind>, 3>{
                                                            {{"double_slit", ObjectKind::double_slit},
                                                             {"ring_glyph", ObjectKind::ring_glyph},
                                                             {"file", ObjectKind::file}}}));
        t.emplace_back("slit_width", length_codec(&C::slit_width));
        t.emplace_back("slit_separation", length_codec(&C::slit_separation));
        t.emplace_back("slit_height", length_codec(&C::slit_height));
        t.emplace_back("ring_outer_radius", length_codec(&C::ring_outer_radius));
        t.emplace_back("ring_width", length_codec(&C::ring_width));
        t.emplace_back("bar_width", length_codec(&C::bar_width));
        t.emplace_back("bar_half_length", length_codec(&C::bar_half_length));
        t.emplace_back("object_offset_x", length_codec(&C::object_offset_x));
        t.emplace_back("object_offset_y", length_codec(&C::object_offset_y));
        t.emplace_back("object_file", KeyCodec{[](C& c, const std::string& v) { return c.object_file = v, true; },
                                               [](const C& c) { return c.object_file; }});
        t.emplace_back("K", int_codec(&C::K));
        t.emplace_back("seed", int_codec(&C::seed));
        t.emplace_back("noise", enum_codec(&C::noise, std::array<EnumName<NoiseKind>, 3>{
                                                          {{"none", NoiseKind::none},
                                                           {"additive_gaussian", NoiseKind::additive_gaussian},
                                                           {"poisson", NoiseKind::poisson}}}));
        t.emplace_back("noise_sigma", real_codec(&C::noise_sigma));
        t.emplace_back("noise_scale", real_codec(&C::noise_scale));
        t.emplace_back("basis", enum_codec(&C::basis, std::array<EnumName<BasisKind>, 2>{
                                                          {{"cartesian", BasisKind::cartesian},
                                                           {"dct2", BasisKind::dct2}}}));
        t.emplace_back("tau", real_codec(&C::tau));
        t.emplace_back("tau_mode", enum_codec(&C::tau_mode, std::array<EnumName<TauMode>, 2>{
                                                                {{"relative", TauMode::relative_to_ATy_inf},
                                                                 {"absolute", TauMode::absolute}}}));
        t.emplace_back("algorithm", enum_codec(&C::algorithm, std::array<EnumName<Algorithm>, 2>{
                                                                  {{"active_set", Algorithm::active_set},
                                                                   {"proximal_gradient", Algorithm::proximal_gradient}}}));
        t.emplace_back("step_rule", enum_codec(&C::step_rule, std::array<EnumName<StepRule>, 2>{
                                                                  {{"backtracking", StepRule::backtracking},
                                                                   {"bb", StepRule::barzilai_borwein_safeguarded}}}));
        t.emplace_back("max_iters", int_codec(&C::max_iters));
        t.emplace_back("tol", real_codec(&C::tol));
        t.emplace_back("nonneg", KeyCodec{[](C& c, const std::string& v) {
                                              if (v == "auto") return c.nonneg.reset(), true;
                                              bool b = false;
                                              if (!parse_bool(v, b)) return false;
                                              c.nonneg = b;
                                              return true;
                                          },
                                          [](const C& c) {
                                              return c.nonneg ? std::string(*c.nonneg ? "true" : "false") : "auto";
                                          }});
        t.emplace_back("output", KeyCodec{[](C& c, const std::string& v) { return c.output = v, true; },
                                          [](const C& c) { return c.output; }});
        t.emplace_back("save_ensemble", KeyCodec{[](C& c, const std::string& v) { return parse_bool(v, c.save_ensemble); },
                                                 [](const C& c) { return std::string(c.save_ensemble ? "true" : "false"); }});
        return t;
    }();
    return table;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline void ExperimentConfig::validate() const {
    auto positive = [](const char* key, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigValidationError(key, "must be > 0");
    };
    positive("wavelength", wavelength);
    positive("D", D);
    positive("z", z);
    positive("z1", z1);
    positive("L1", L1);
    positive("object_pitch", object_pitch);
    positive("camera_pitch", camera_pitch);
    positive("slit_width", slit_width);
    positive("slit_separation", slit_separation);
    positive("slit_height", slit_height);
    positive("ring_outer_radius", ring_outer_radius);
    positive("ring_width", ring_width);
    positive("bar_width", bar_width);
    positive("bar_half_length", bar_half_length);
    positive("tol", tol);
    if (!std::isfinite(object_offset_x)) throw ConfigValidationError("object_offset_x", "must be finite");
    if (!std::isfinite(object_offset_y)) throw ConfigValidationError("object_offset_y", "must be finite");
    if (grid < 8) throw ConfigValidationError("grid", "must be >= 8");
    positive("camera_fov", camera_fov);
    if (K < 1) throw ConfigValidationError("K", "must be >= 1");
    if (max_iters < 1) throw ConfigValidationError("max_iters", "must be >= 1");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigValidationError("tau", "must be >= 0");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigValidationError("noise_sigma", "must be >= 0");
    if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) throw ConfigValidationError("noise_scale", "must be > 0");
    if (slit_width >= slit_separation) throw ConfigValidationError("slit_width", "must be smaller than slit_separation");
    if (ring_width >= ring_outer_radius) throw ConfigValidationError("ring_width", "must be smaller than ring_outer_radius");
    if (object == ObjectKind::file && object_file.empty())
        throw ConfigValidationError("object_file", "required when object = file");
    if (output.empty()) throw ConfigValidationError("output", "must not be empty");
    try {
        if (camera_pixels() < 2) throw ConfigValidationError("camera_fov", "less than 2x2 camera pixels");
    } catch (const InvalidArgument& e) {
        throw ConfigValidationError("camera_pitch", e.what());
    }
    if (camera_pitch < object_pitch) throw ConfigValidationError("camera_pitch", "must be >= object_pitch");
}

/// Parses flat `key = value` text; `#` starts a comment. Unset keys keep their
/// defaults and the result is validated.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::map<std::string, int> seen;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigParseError("expected 'key = value'", line_no);
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigParseError("missing key", line_no);
        const auto& table = detail::key_table();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& kv) { return kv.first == key; });
        if (it == table.end()) throw ConfigParseError("unknown key '" + key + "'", line_no);
        if (auto [pos, fresh] = seen.emplace(key, line_no); !fresh)
            throw ConfigParseError("duplicate key '" + key + "' (first set on line " + std::to_string(pos->second) + ")",
                                   line_no);
        if (value.empty() && key != "object_file") throw ConfigParseError("missing value for '" + key + "'", line_no);
        if (!it->second.parse(c, value)) throw ConfigParseError("bad value '" + value + "' for '" + key + "'", line_no);
    }
    c.validate();
    return c;
}

/// Every key with its value, in table order; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ExperimentConfig& c) {
    std::ostringstream os;
    for (const auto& [key, codec] : detail::key_table()) os << key << " = " << codec.emit(c) << '\n';
    return os.str();
}

/// Reads a config file; a relative object_file is resolved against the
/// config's directory.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    ExperimentConfig c = parse_config(ss.str());
    if (!c.object_file.empty() && std::filesystem::path(c.object_file).is_relative())
        c.object_file = (path.parent_path() / c.object_file).lexically_normal().string();
    return c;
}

}  // namespace ghostrec
