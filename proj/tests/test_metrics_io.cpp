#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ghostrec/config.hpp"
#include "ghostrec/ensemble_io.hpp"
#include "ghostrec/image_io.hpp"
#include "ghostrec/metrics.hpp"

namespace fs = std::filesystem;

namespace ghostrec {
namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ghostrec_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Image two_gaussians(double fwhm_px, double sep_px, int n = 128) {
    const double sigma = fwhm_px / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    Image img(5, n);
    const double c = 0.5 * n;
    for (int r = 0; r < 5; ++r)
        for (int i = 0; i < n; ++i) {
            const double a = (i - c + 0.5 * sep_px) / sigma, b = (i - c - 0.5 * sep_px) / sigma;
            img(r, i) = std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b);
        }
    return img;
}

// ---------------------------------------------------------------------------
// Metrics

TEST(Resolvability, GaussiansAtOnePointTwoFwhmAreResolved) {
    const double pitch = 10e-6;
    const ResolvabilityReport rep =
        two_peak_resolvability(two_gaussians(10.0, 12.0), ProfileAxis::horizontal, Band{0, 5}, pitch);
    EXPECT_TRUE(rep.resolved);
    ASSERT_TRUE(rep.dip_ratio.has_value());
    EXPECT_LT(*rep.dip_ratio, 0.735);
    ASSERT_TRUE(rep.peak_separation.has_value());
    EXPECT_NEAR(*rep.peak_separation, 12.0 * pitch, 1.5 * pitch);
}

TEST(Resolvability, GaussiansAtHalfFwhmAreNot) {
    const ResolvabilityReport rep =
        two_peak_resolvability(two_gaussians(10.0, 5.0), ProfileAxis::horizontal, Band{0, 5}, 10e-6);
    EXPECT_FALSE(rep.resolved);
}

TEST(Resolvability, VerticalAxisAndErrors) {
    const Image h = two_gaussians(6.0, 20.0, 64);
    Image v(64, 5);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 64; ++c) v(c, r) = h(r, c);
    EXPECT_TRUE(two_peak_resolvability(v, ProfileAxis::vertical, Band{0, 5}, 1.0).resolved);
    EXPECT_THROW(two_peak_resolvability(Image(5, 16, 1.0), ProfileAxis::horizontal, Band{0, 5}, 1.0), EstimationError);
    EXPECT_THROW(two_peak_resolvability(h, ProfileAxis::horizontal, Band{3, 9}, 1.0), InvalidArgument);
}

TEST(Mse, Examples) {
    const Image truth(2, 2, std::vector<double>{1.0, 0.0, 0.0, 0.0});
    const Image moved(2, 2, std::vector<double>{0.0, 1.0, 0.0, 0.0});
    EXPECT_DOUBLE_EQ(mse(truth, truth), 0.0);
    EXPECT_EQ(psnr(truth, truth), std::numeric_limits<double>::infinity());
    EXPECT_DOUBLE_EQ(mse(moved, truth), 0.5);
    EXPECT_NEAR(psnr(moved, truth), 10.0 * std::log10(2.0), 1e-12);
    Image scaled = truth;
    scaled[0] = 7.0;
    EXPECT_DOUBLE_EQ(mse(scaled, truth), 0.0);
    EXPECT_THROW(mse(truth, Image(2, 2)), InvalidArgument);
    EXPECT_THROW(mse(truth, Image(2, 3, 1.0)), DimensionMismatch);
}

TEST(Ncc, Examples) {
    const Image a(1, 4, std::vector<double>{1, 2, 3, 4});
    const Image b(1, 4, std::vector<double>{2, 4, 6, 8});
    const Image c(1, 4, std::vector<double>{4, 3, 2, 1});
    EXPECT_NEAR(normalized_cross_correlation(a, b), 1.0, 1e-15);
    EXPECT_NEAR(normalized_cross_correlation(a, c), -1.0, 1e-15);
    EXPECT_EQ(normalized_cross_correlation(a, Image(1, 4, 2.0)), 0.0);
}

TEST(FringePeriod, CosineFringes) {
    const double pitch = 50e-6;
    std::vector<double> p(256);
    for (int i = 0; i < 256; ++i) p[i] = 1.0 + std::cos(2.0 * std::numbers::pi * i / 20.0);
    EXPECT_NEAR(fringe_period(p, pitch), 20.0 * pitch, 0.01 * 20.0 * pitch);
}

TEST(FringePeriod, EnvelopedDoubleSlitPattern) {
    // cos^2 fringes of period 32.5 px under a sinc^2 envelope with its first zero at 65 px.
    const double pitch = 50e-6;
    std::vector<double> p(256);
    for (int i = 0; i < 256; ++i) {
        const double x = i - 128.0;
        const double s = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x / 65.0) / (std::numbers::pi * x / 65.0);
        p[i] = s * s * std::pow(std::cos(std::numbers::pi * x / 32.5), 2);
    }
    EXPECT_NEAR(fringe_period(p, pitch), 32.5 * pitch, 0.1 * 32.5 * pitch);
    EXPECT_THROW(fringe_period(std::vector<double>(7, 1.0), pitch), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Files

TEST(Pgm, SixteenAndEightBitRoundTrip) {
    const fs::path dir = scratch_dir("pgm");
    Image img(3, 5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (auto& v : img.flat()) v = u(rng);
    img[4] = 2.5;
    img[0] = -1.0;
    for (const auto depth : {PgmDepth::bits16, PgmDepth::bits8}) {
        write_pgm(dir / "a.pgm", img, depth);
        const PgmImage back = read_pgm(dir / "a.pgm");
        EXPECT_EQ(back.maxval, static_cast<int>(depth));
        ASSERT_EQ(back.levels.rows(), 3);
        ASSERT_EQ(back.levels.cols(), 5);
        const Image n = back.normalized();
        const double step = 1.0 / static_cast<int>(depth);
        for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(n[i], std::clamp(img[i] / 2.5, 0.0, 1.0), step);
    }
    EXPECT_THROW(read_pgm(dir / "missing.pgm"), IoError);
    std::ofstream(dir / "bad.pgm") << "P5\n3 3\n255\nab";
    EXPECT_THROW(read_pgm(dir / "bad.pgm"), IoError);
    Image nan_img(2, 2);
    nan_img[1] = std::nan("");
    EXPECT_THROW(write_pgm(dir / "n.pgm", nan_img), InvalidArgument);
}

TEST(Csv, QuotingAndParsing) {
    CsvTable t({"name", "value"});
    t.add_row({"plain", "1"});
    t.add_row({"with,comma", "say \"hi\""});
    EXPECT_THROW(t.add_row({"short"}), InvalidArgument);
    const auto rows = parse_csv(t.str());
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"name", "value"}));
    EXPECT_EQ(rows[2], (std::vector<std::string>{"with,comma", "say \"hi\""}));
}

TEST(Csv, FormatDoubleRoundTrips) {
    for (const double v : {0.1, 1.0 / 3.0, 6.5e-7, -2.5, 1e300, 0.0}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(EnsembleFile, RoundTripIsBitExact) {
    const fs::path dir = scratch_dir("ens");
    SpeckleEnsemble e{Grid(3, 2, 1e-4), {}};
    MeasurementVector y;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 4; ++k) {
        Image img(2, 3);
        for (auto& v : img.flat()) v = u(rng);
        e.images.push_back(img);
        y.values.push_back(u(rng));
    }
    write_ensemble(dir / "e.gisc", e, y);
    const auto [e2, y2] = read_ensemble(dir / "e.gisc");
    EXPECT_EQ(e2.grid, e.grid);
    EXPECT_EQ(y2.values, y.values);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(e2.images[k], e.images[k]);

    y.values.pop_back();
    EXPECT_THROW(write_ensemble(dir / "f.gisc", e, y), DimensionMismatch);
    std::ofstream(dir / "g.gisc") << "NOPE";
    EXPECT_THROW(read_ensemble(dir / "g.gisc"), IoError);
    {
        std::ofstream f(dir / "e.gisc", std::ios::app | std::ios::binary);
        f.put('x');
    }
    EXPECT_THROW(read_ensemble(dir / "e.gisc"), IoError);
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, DefaultsMatchThePublishedGeometry) {
    const ExperimentConfig c;
    EXPECT_DOUBLE_EQ(c.wavelength, 650e-9);
    EXPECT_DOUBLE_EQ(c.D, 0.6e-3);
    EXPECT_DOUBLE_EQ(c.z, 1.2);
    EXPECT_DOUBLE_EQ(c.z1, 0.5);
    EXPECT_DOUBLE_EQ(c.L1, 6.4e-3);
    EXPECT_DOUBLE_EQ(c.slit_width, 100e-6);
    EXPECT_DOUBLE_EQ(c.slit_separation, 200e-6);
    EXPECT_DOUBLE_EQ(c.slit_height, 500e-6);
    EXPECT_EQ(c.K, 3000);
    EXPECT_EQ(c.object, ObjectKind::double_slit);
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(parse_config(""), c);
}

TEST(Config, LengthUnits) {
    const ExperimentConfig c = parse_config("z1 = 10 mm\nL1 = 3.2mm\nwavelength = 650 nm\nD = 600um\nz = 1.2\n");
    EXPECT_DOUBLE_EQ(c.z1, 0.01);
    EXPECT_DOUBLE_EQ(c.L1, 3.2e-3);
    EXPECT_DOUBLE_EQ(c.wavelength, 650e-9);
    EXPECT_DOUBLE_EQ(c.D, 600e-6);
    EXPECT_DOUBLE_EQ(c.z, 1.2);
}

TEST(Config, EmitParseRoundTrip) {
    ExperimentConfig c;
    c.z1 = 0.01;
    c.L1 = 1.6e-3;
    c.object = ObjectKind::ring_glyph;
    c.basis = BasisKind::dct2;
    c.camera_pitch = 250e-6;
    c.K = 500;
    c.seed = 123456789012345ULL;
    c.tau = 3.7e-5;
    c.noise = NoiseKind::additive_gaussian;
    c.noise_sigma = 0.05;
    c.nonneg = false;
    c.algorithm = Algorithm::proximal_gradient;
    c.step_rule = StepRule::barzilai_borwein_safeguarded;
    c.output = "some dir/run";
    c.save_ensemble = true;
    EXPECT_EQ(parse_config(emit_config(c)), c);
    EXPECT_EQ(parse_config(emit_config(ExperimentConfig{})), ExperimentConfig{});
}

TEST(Config, ParseErrorsCarryLineNumbers) {
    auto line_of = [](const std::string& text) {
        try {
            (void)parse_config(text);
        } catch (const ConfigParseError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("# header\nK = 10\nbogus = 1\n"), 3);
    EXPECT_EQ(line_of("K = 10\n\nK = 20\n"), 3);
    EXPECT_EQ(line_of("z1 0.5\n"), 1);
    EXPECT_EQ(line_of("K = 10\nz1 = far\n"), 2);
    EXPECT_EQ(line_of("K =\n"), 1);
    EXPECT_EQ(line_of("basis = wavelet\n"), 1);
}

TEST(Config, ValidationNamesTheKey) {
    auto key_of = [](const std::string& text) {
        try {
            (void)parse_config(text);
        } catch (const ConfigValidationError& e) {
            return e.key();
        }
        return std::string();
    };
    EXPECT_EQ(key_of("z1 = 0\n"), "z1");
    EXPECT_EQ(key_of("K = 0\n"), "K");
    EXPECT_EQ(key_of("slit_width = 300um\n"), "slit_width");
    EXPECT_EQ(key_of("object = file\n"), "object_file");
    EXPECT_EQ(key_of("camera_pitch = 75um\n"), "camera_pitch");
}

TEST(Config, LoadResolvesObjectFileAgainstConfigDirectory) {
    const fs::path dir = scratch_dir("cfg");
    fs::create_directories(dir / "sub");
    std::ofstream(dir / "sub" / "a.cfg") << "object = file\nobject_file = mask.pgm\n";
    const ExperimentConfig c = load_config(dir / "sub" / "a.cfg");
    EXPECT_EQ(fs::path(c.object_file), (dir / "sub" / "mask.pgm").lexically_normal());
    EXPECT_THROW(load_config(dir / "none.cfg"), IoError);
}

TEST(Config, DerivedCameraAndDetector) {
    ExperimentConfig c;
    c.camera_pitch = 100e-6;
    EXPECT_EQ(c.camera_pixels(), 64);
    c.camera_pitch = 250e-6;
    EXPECT_EQ(c.camera_pixels(), 25);
    EXPECT_NEAR(c.detector_spec().camera_fov, 6.25e-3, 1e-15);
    c.grid = 64;
    c.camera_pitch = 50e-6;
    EXPECT_EQ(c.camera_pixels(), 64);
}

}  // namespace
}  // namespace ghostrec
