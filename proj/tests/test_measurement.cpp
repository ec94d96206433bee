#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ghostrec/measurement.hpp"
#include "ghostrec/metrics.hpp"
#include "ghostrec/objects.hpp"

namespace ghostrec {
namespace {

struct SmallSetup {
    SourceSpec source;
    double z = 1.2;
    Grid object_grid{128, 128, 50e-6};
    ObjectMask object;
    DetectorSpec det;

    SmallSetup() {
        object = make_double_slit(object_grid, DoubleSlit{});
        det.z1 = 0.5;
        det.aperture = 6.4e-3;
        det.camera_pitch = 100e-6;
        det.camera_fov = 3.2e-3;
    }

    [[nodiscard]] AcquisitionPlan plan(int K) const {
        AcquisitionPlan p;
        p.source = source;
        p.z = z;
        p.source_grid = fresnel_source_grid(object_grid, source.wavelength, z);
        p.source_method = PropagationMethod::fresnel;
        p.object = object;
        p.cameras = {det.camera()};
        p.detectors = {det};
        p.K = K;
        return p;
    }
};

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

TEST(Camera, BoxFactor) {
    EXPECT_EQ(camera_box_factor(50e-6, 50e-6), 1);
    EXPECT_EQ(camera_box_factor(50e-6, 100e-6), 2);
    EXPECT_EQ(camera_box_factor(50e-6, 250e-6), 5);
    EXPECT_THROW(camera_box_factor(50e-6, 75e-6), InvalidArgument);
    EXPECT_THROW(camera_box_factor(50e-6, 0.0), InvalidArgument);
}

TEST(Camera, GridAndFieldOfViewLimits) {
    const Grid field(128, 128, 50e-6);
    const Grid cg = camera_grid(field, CameraSpec{100e-6, 3.2e-3});
    EXPECT_EQ(cg.nx, 32);
    EXPECT_EQ(cg.ny, 32);
    EXPECT_DOUBLE_EQ(cg.pitch, 100e-6);
    EXPECT_EQ(camera_grid(field, CameraSpec{50e-6, 0.0}).nx, 128);
    EXPECT_THROW(camera_grid(field, CameraSpec{50e-6, 12.8e-3 + 1e-4}), DimensionMismatch);
}

TEST(Camera, PitchDoublingIsTwoByTwoBlockMean) {
    const Grid field(16, 16, 50e-6);
    Image img(16, 16);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : img.flat()) v = u(rng);
    const Image fine = sample_camera(img, field, CameraSpec{50e-6, 0.0});
    const Image coarse = sample_camera(img, field, CameraSpec{100e-6, 0.0});
    ASSERT_EQ(coarse.rows(), 8);
    EXPECT_EQ(fine, img);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            const double m = 0.25 * (img(2 * r, 2 * c) + img(2 * r + 1, 2 * c) + img(2 * r, 2 * c + 1) +
                                     img(2 * r + 1, 2 * c + 1));
            EXPECT_NEAR(coarse(r, c), m, 1e-15);
        }
}

TEST(Camera, PointSourceGivesUniformReference) {
    ComplexField f(Grid(64, 64, 20e-6), 650e-9);
    f.values(32, 32) = 1.0;
    const Image ref = reference_intensity(f, 1.0, CameraSpec{fresnel_output_pitch(f.grid, 650e-9, 1.0), 0.0},
                                          PropagationMethod::fresnel);
    for (const double v : ref.flat()) EXPECT_NEAR(v / ref[0], 1.0, 1e-12);
}

TEST(Bucket, OpaqueObjectIsRejected) {
    const Grid g(32, 32, 10e-6);
    EXPECT_THROW(ObjectMask(g, Image(32, 32, 0.0)), InvalidArgument);
    EXPECT_THROW(ObjectMask(g, Image(32, 32, 1.5)), InvalidArgument);
}

TEST(Bucket, OpenApertureCollectsAllPower) {
    const Grid g(64, 64, 10e-6);
    ComplexField f(g, 650e-9);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : f.values.flat()) v = Complex(n(rng), n(rng));
    const ObjectMask open(g, Image(64, 64, 1.0));
    DetectorSpec det;
    det.z1 = 5e-3;
    det.aperture = 1.0;
    det.method = PropagationMethod::angular_spectrum;
    EXPECT_NEAR(bucket_measure(f, open, det) / f.total_power(), 1.0, 1e-9);
}

TEST(Bucket, SinglePixelAtCenterOfLargeAperture) {
    const Grid g(64, 64, 10e-6);
    Image t(64, 64);
    t(32, 32) = 0.5;
    const ObjectMask obj(g, t);
    ComplexField f(g, 650e-9);
    f.values(32, 32) = 2.0;
    DetectorSpec det;
    det.z1 = 5e-3;
    det.aperture = 1.0;
    det.method = PropagationMethod::angular_spectrum;
    // |0.5 * 2|^2 * pitch^2, all of it reaching the detector.
    EXPECT_NEAR(bucket_measure(f, obj, det), 1e-10, 1e-19);
}

class QuadraticForm : public ::testing::TestWithParam<PropagationMethod> {};

TEST_P(QuadraticForm, MatchesLiteralBucket) {
    const Grid g(64, 64, 20e-6);
    DoubleSlit s;
    s.width = 60e-6;
    s.separation = 160e-6;
    s.height = 200e-6;
    const ObjectMask obj = make_double_slit(g, s);
    DetectorSpec det;
    det.z1 = GetParam() == PropagationMethod::angular_spectrum ? 0.02 : 0.5;
    det.aperture = GetParam() == PropagationMethod::angular_spectrum ? 0.4e-3 : 6e-3;
    det.method = GetParam();
    const BucketOperator op = make_bucket_operator(obj, det, 650e-9);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        ComplexField f(g, 650e-9);
        for (auto& v : f.values.flat()) v = Complex(n(rng), n(rng));
        Eigen::VectorXcd v(static_cast<Eigen::Index>(op.support.size()));
        for (std::size_t j = 0; j < op.support.size(); ++j) v(static_cast<Eigen::Index>(j)) = f.values[op.support[j]];
        EXPECT_LT(rel_diff(op.apply(v), bucket_measure(f, obj, det)), 1e-9);
    }
}

INSTANTIATE_TEST_SUITE_P(Methods, QuadraticForm,
                         ::testing::Values(PropagationMethod::angular_spectrum, PropagationMethod::fresnel));

TEST(Acquire, PairingMatchesLiteralPipeline) {
    const SmallSetup s;
    const AcquisitionPlan p = s.plan(4);
    const AcquisitionResult r = acquire(p);
    ASSERT_EQ(r.ensembles.size(), 1u);
    ASSERT_EQ(r.measurements.size(), 1u);
    for (int k = 0; k < p.K; ++k) {
        const ComplexField src = sample_source_field(s.source, p.source_grid, static_cast<std::uint64_t>(k));
        const ComplexField at_object = propagate(src, s.z, PropagationMethod::fresnel);
        EXPECT_LT(rel_diff(r.measurements[0].values[k], bucket_measure(at_object, s.object, s.det)), 1e-9);
        const Image cam = sample_camera(at_object.intensity(), at_object.grid, s.det.camera());
        const Image& got = r.ensembles[0].images[k];
        ASSERT_TRUE(got.same_shape(cam));
        double scale = 0;
        for (double v : cam.flat()) scale = std::max(scale, v);
        for (std::size_t i = 0; i < cam.size(); ++i) EXPECT_NEAR(got[i], cam[i], 1e-9 * scale);
    }
}

TEST(Acquire, ThreadCountDoesNotChangeResults) {
    const SmallSetup s;
    AcquisitionPlan p = s.plan(12);
    p.threads = 1;
    const AcquisitionResult a = acquire(p);
    p.threads = 3;
    const AcquisitionResult b = acquire(p);
    EXPECT_EQ(a.measurements[0].values, b.measurements[0].values);
    for (int k = 0; k < p.K; ++k) EXPECT_EQ(a.ensembles[0].images[k], b.ensembles[0].images[k]);
}

TEST(Acquire, SpeckleRowsAreNearlyUncorrelatedAndStationary) {
    SmallSetup s;
    s.object_grid = Grid(256, 256, 50e-6);
    s.object = make_double_slit(s.object_grid, DoubleSlit{});
    s.det.camera_fov = 12.8e-3;
    const AcquisitionResult r = acquire(s.plan(200));
    const SensingMatrix A = build_sensing_matrix(r.ensembles[0]);
    ASSERT_EQ(A.rows(), 200);
    ASSERT_EQ(A.cols(), 128 * 128);

    double mean_abs_corr = 0, mean_corr = 0;
    int pairs = 0;
    for (int i = 0; i + 1 < A.rows(); i += 2) {
        const Eigen::RowVectorXd a = A.data.row(i).array() - A.data.row(i).mean();
        const Eigen::RowVectorXd b = A.data.row(i + 1).array() - A.data.row(i + 1).mean();
        const double corr = a.dot(b) / (a.norm() * b.norm());
        mean_abs_corr += std::abs(corr);
        mean_corr += corr;
        ++pairs;
    }
    EXPECT_LT(mean_abs_corr / pairs, 0.2);
    EXPECT_LT(std::abs(mean_corr / pairs), 0.05);

    const Eigen::RowVectorXd mean = A.data.colwise().mean();
    double left = 0, right = 0;
    for (int r = 0; r < 128; ++r)
        for (int c = 0; c < 128; ++c) (c < 64 ? left : right) += mean(r * 128 + c);
    EXPECT_NEAR(left / right, 1.0, 0.1);
}

TEST(Acquire, MeanPatternShowsDoubleSlitFringes) {
    SmallSetup s;
    s.object_grid = Grid(256, 256, 50e-6);
    s.object = make_double_slit(s.object_grid, DoubleSlit{});
    AcquisitionPlan p = s.plan(200);
    p.record_mean_pattern = true;
    const AcquisitionResult r = acquire(p);
    ASSERT_TRUE(r.mean_pattern.has_value());
    const ComplexField& m = *r.mean_pattern;
    std::vector<double> profile(m.grid.nx, 0.0);
    for (int row = m.grid.ny / 2 - 2; row <= m.grid.ny / 2 + 2; ++row)
        for (int c = 0; c < m.grid.nx; ++c) profile[c] += m.values(row, c).real();
    const double expected = 650e-9 * 0.5 / 200e-6;
    EXPECT_NEAR(fringe_period(profile, m.grid.pitch), expected, 0.1 * expected);
}

TEST(Acquire, RejectsInconsistentGrids) {
    const SmallSetup s;
    AcquisitionPlan p = s.plan(2);
    p.source_grid = Grid(128, 128, 10e-6);
    EXPECT_THROW(acquire(p), DimensionMismatch);
    p = s.plan(0);
    EXPECT_THROW(acquire(p), InvalidArgument);
}

TEST(Noise, NoneIsIdentity) {
    const MeasurementVector y{{1.0, 2.0, 3.0}, {}};
    EXPECT_EQ(add_noise(y, NoiseModel{}, 4).values, y.values);
}

TEST(Noise, GaussianHasRequestedRelativeSpread) {
    MeasurementVector y;
    y.values.assign(4000, 2.0);
    const NoiseModel model{NoiseKind::additive_gaussian, 0.1, 1.0};
    const MeasurementVector a = add_noise(y, model, 9);
    double s2 = 0;
    for (std::size_t i = 0; i < y.values.size(); ++i) s2 += std::pow(a.values[i] - 2.0, 2);
    EXPECT_NEAR(std::sqrt(s2 / y.values.size()), 0.2, 0.02);
    EXPECT_EQ(add_noise(y, model, 9).values, a.values);
    EXPECT_NE(add_noise(y, model, 10).values, a.values);
}

TEST(Noise, PoissonKeepsMeanAndRejectsNegative) {
    MeasurementVector y;
    y.values.assign(4000, 3.0);
    const MeasurementVector a = add_noise(y, NoiseModel{NoiseKind::poisson, 0.0, 100.0}, 2);
    double mean = 0;
    for (double v : a.values) mean += v;
    EXPECT_NEAR(mean / a.values.size(), 3.0, 0.01);
    y.values[0] = -1.0;
    EXPECT_THROW(add_noise(y, NoiseModel{NoiseKind::poisson, 0.0, 1.0}, 2), InvalidArgument);
    EXPECT_THROW(add_noise(y, NoiseModel{NoiseKind::poisson, 0.0, 0.0}, 2), InvalidArgument);
}

TEST(LinearModel, ExactProportionalDataHasZeroResidual) {
    const Grid g(3, 2, 1e-4);
    SpeckleEnsemble e{g, {}};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        Image img(2, 3);
        for (auto& v : img.flat()) v = u(rng);
        e.images.push_back(img);
    }
    const SensingMatrix A = build_sensing_matrix(e);
    Image x(2, 3);
    x(0, 1) = 1.0;
    x(1, 2) = 0.5;
    MeasurementVector y;
    for (int k = 0; k < 10; ++k) y.values.push_back(3.0 * (e.images[k](0, 1) + 0.5 * e.images[k](1, 2)));
    EXPECT_NEAR(linear_model_residual(A, y, x), 0.0, 1e-12);
    y.values[0] += 1.0;
    EXPECT_GT(linear_model_residual(A, y, x), 0.01);
    EXPECT_THROW(linear_model_residual(A, take_prefix(y, 5), x), DimensionMismatch);
    EXPECT_THROW(take_prefix(y, 11), InvalidArgument);
    EXPECT_THROW(take_prefix(e, 0), InvalidArgument);
}

}  // namespace
}  // namespace ghostrec
