#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ghostrec/diagnostics.hpp"
#include "ghostrec/error.hpp"
#include "ghostrec/field_sim.hpp"
#include "ghostrec/grid.hpp"
#include "ghostrec/objects.hpp"
#include "ghostrec/rng.hpp"

namespace ghostrec {

/// Reference camera: pixel pitch and the side of its square field of view.
/// A field of view of 0 means "as much of the field grid as fits".
struct CameraSpec {
    double pitch = 50e-6;
    double fov = 3.2e-3;
};

/// Test-arm geometry plus the reference camera that pairs with it.
struct DetectorSpec {
    double z1 = 500e-3;
    double aperture = 6.4e-3;  // L1, side of the square receiving aperture
    double camera_pitch = 50e-6;
    double camera_fov = 3.2e-3;
    PropagationMethod method = PropagationMethod::automatic;  // object -> test detector

    [[nodiscard]] CameraSpec camera() const { return {camera_pitch, camera_fov}; }

    void validate() const {
        if (!(z1 > 0.0) || !std::isfinite(z1)) throw InvalidArgument("z1 must be > 0");
        if (!(aperture > 0.0) || !std::isfinite(aperture)) throw InvalidArgument("aperture L1 must be > 0");
        if (!(camera_pitch > 0.0)) throw InvalidArgument("camera pitch must be > 0");
        if (camera_fov < 0.0) throw InvalidArgument("camera field of view must be >= 0");
    }
};

struct SpeckleEnsemble {
    Grid grid;  // camera grid
    std::vector<Image> images;

    [[nodiscard]] int count() const { return static_cast<int>(images.size()); }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// K x N, row s is the raster (row-major, top-left origin) reshape of I_s.
struct SensingMatrix {
    Grid grid;  // camera grid the columns index
    RowMatrix data;

    [[nodiscard]] int rows() const { return static_cast<int>(data.rows()); }
    [[nodiscard]] int cols() const { return static_cast<int>(data.cols()); }
};

enum class NoiseKind { none, additive_gaussian, poisson };

struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    double sigma = 0.0;  // additive_gaussian: std relative to mean(y)
    double scale = 1.0;  // poisson: counts per unit bucket value
};

struct MeasurementVector {
    std::vector<double> values;
    NoiseModel noise;

    [[nodiscard]] int size() const { return static_cast<int>(values.size()); }
};

// ---------------------------------------------------------------------------
// Camera sampling

/// Number of field pixels per camera pixel; camera_pitch must be an integer
/// multiple of the field pitch.
inline int camera_box_factor(double field_pitch, double camera_pitch) {
    if (!(camera_pitch > 0.0)) throw InvalidArgument("camera pitch must be > 0");
    const double ratio = camera_pitch / field_pitch;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-6 * k)
        throw InvalidArgument("camera pitch " + std::to_string(camera_pitch) +
                              " m is not an integer multiple of the field pitch " + std::to_string(field_pitch) + " m");
    return static_cast<int>(k);
}

/// Camera pixel grid for a field grid; the camera is centered on the field.
inline Grid camera_grid(const Grid& field_grid, const CameraSpec& cam) {
    const int f = camera_box_factor(field_grid.pitch, cam.pitch);
    int n_x = field_grid.nx / f, n_y = field_grid.ny / f;
    if (cam.fov > 0.0) {
        const int n = static_cast<int>(std::floor(cam.fov / cam.pitch * (1.0 + 1e-12)));
        if (n * f > std::min(field_grid.nx, field_grid.ny))
            throw DimensionMismatch("camera field of view exceeds the simulated field");
        n_x = n_y = n;
    }
    if (n_x < 2 || n_y < 2) throw InvalidArgument("camera needs at least 2x2 pixels");
    return Grid(n_x, n_y, f * field_grid.pitch);
}

/// Mean over non-overlapping factor x factor blocks; trailing partial blocks
/// are dropped.
inline Image box_average(const Image& img, int factor) {
    if (factor < 1) throw InvalidArgument("box factor must be >= 1");
    const int rows = img.rows() / factor, cols = img.cols() / factor;
    Image out(rows, cols);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double s = 0.0;
            for (int dr = 0; dr < factor; ++dr)
                for (int dc = 0; dc < factor; ++dc) s += img(r * factor + dr, c * factor + dc);
            out(r, c) = s * inv;
        }
    return out;
}

/// Top-left field-pixel corner of the camera window on a field grid.
inline std::pair<int, int> camera_origin(const Grid& field_grid, const Grid& cam_grid) {
    const int f = static_cast<int>(std::lround(cam_grid.pitch / field_grid.pitch));
    return {field_grid.ny / 2 - cam_grid.ny * f / 2, field_grid.nx / 2 - cam_grid.nx * f / 2};
}

/// Box-averaged camera image of an intensity sampled on `field_grid`.
inline Image sample_camera(const Image& intensity, const Grid& field_grid, const CameraSpec& cam) {
    const Grid cg = camera_grid(field_grid, cam);
    const int f = camera_box_factor(field_grid.pitch, cam.pitch);
    const auto [r0, c0] = camera_origin(field_grid, cg);
    return box_average(crop(intensity, r0, c0, cg.ny * f, cg.nx * f), f);
}

/// |T|^2 on the camera grid: the x_true of the linear forward model.
inline Image truth_on_camera(const ObjectMask& object, const CameraSpec& cam) {
    return sample_camera(object.intensity_transmission(), object.grid, cam);
}

inline double support_diameter(const ComplexField& field) {
    double r_max = 0.0;
    for (int r = 0; r < field.grid.ny; ++r)
        for (int c = 0; c < field.grid.nx; ++c)
            if (field.values(r, c) != Complex{})
                r_max = std::max(r_max, std::hypot(field.grid.x(c), field.grid.y(r)));
    return 2.0 * r_max;
}

/// Reference-arm camera image: |propagate(source, z)|^2 box-averaged onto the
/// camera pixels. Warns when z is short of the source's far-field distance.
inline Image reference_intensity(const ComplexField& source, double z, const CameraSpec& cam,
                                 PropagationMethod method = PropagationMethod::automatic) {
    const double d = support_diameter(source);
    if (d > 0.0 && z < far_field_distance(d, source.wavelength))
        warn("reference distance " + std::to_string(z) + " m is inside the source far-field distance " +
             std::to_string(far_field_distance(d, source.wavelength)) + " m");
    const ComplexField at_camera = propagate(source, z, method);
    return sample_camera(at_camera.intensity(), at_camera.grid, cam);
}

// ---------------------------------------------------------------------------
// Test arm

/// Fraction of the pixel centered at `center` (width `pitch`) inside [-half, half].
inline double covered_fraction(double center, double pitch, double half) {
    const double lo = std::max(center - 0.5 * pitch, -half);
    const double hi = std::min(center + 0.5 * pitch, half);
    return std::max(0.0, hi - lo) / pitch;
}

/// Area weights of the square L1 aperture, centered on the optical axis, on a
/// detector grid. Only pixels with nonzero weight are returned.
struct ApertureWeights {
    std::vector<int> index;  // raster index into the detector grid
    std::vector<double> weight;
};

inline ApertureWeights aperture_weights(const Grid& grid, double aperture) {
    const double half = 0.5 * aperture;
    ApertureWeights w;
    std::vector<double> wx(grid.nx), wy(grid.ny);
    for (int c = 0; c < grid.nx; ++c) wx[c] = covered_fraction(grid.x(c), grid.pitch, half);
    for (int r = 0; r < grid.ny; ++r) wy[r] = covered_fraction(grid.y(r), grid.pitch, half);
    for (int r = 0; r < grid.ny; ++r) {
        if (wy[r] == 0.0) continue;
        for (int c = 0; c < grid.nx; ++c) {
            if (wx[c] == 0.0) continue;
            w.index.push_back(r * grid.nx + c);
            w.weight.push_back(wx[c] * wy[r]);
        }
    }
    return w;
}

inline void check_object_grid(const ComplexField& field, const ObjectMask& object) {
    if (!(field.grid.nx == object.grid.nx && field.grid.ny == object.grid.ny &&
          std::abs(field.grid.pitch - object.grid.pitch) <= 1e-9 * object.grid.pitch))
        throw DimensionMismatch("object grid does not match the field at the object plane");
}

/// Bucket value: the aperture-weighted power of the field transmitted by the
/// object after propagating z1. `field` is the source field at the object plane.
inline double bucket_measure(const ComplexField& field, const ObjectMask& object, const DetectorSpec& det) {
    det.validate();
    check_object_grid(field, object);
    ComplexField transmitted = field;
    for (std::size_t i = 0; i < transmitted.values.size(); ++i) transmitted.values[i] *= object.transmittance[i];
    const ComplexField out = propagate(transmitted, det.z1, det.method);
    const ApertureWeights w = aperture_weights(out.grid, det.aperture);
    double s = 0.0;
    for (std::size_t k = 0; k < w.index.size(); ++k) s += w.weight[k] * std::norm(out.values[w.index[k]]);
    return s * out.grid.pitch * out.grid.pitch;
}

/// Exact quadratic form of bucket_measure in the object-plane field values on
/// the object support: B = Re(v^H Q v), v_j = E(support_j).
///
/// Q = G^H G with column j of G the aperture-weighted detector response to a
/// unit impulse at support pixel j (already multiplied by T_j).
struct BucketOperator {
    Grid object_grid;
    std::vector<int> support;  // raster indices on the object grid
    Eigen::MatrixXcd Q;
    Eigen::MatrixXcd G;  // kept only when requested

    [[nodiscard]] double apply(const Eigen::VectorXcd& v) const { return std::max(0.0, (v.adjoint() * Q * v)(0).real()); }
};

inline std::vector<int> object_support(const ObjectMask& object) {
    std::vector<int> s;
    for (std::size_t i = 0; i < object.transmittance.size(); ++i)
        if (object.transmittance[i] > 0.0) s.push_back(static_cast<int>(i));
    return s;
}

inline BucketOperator make_bucket_operator(const ObjectMask& object, const DetectorSpec& det, double wavelength,
                                           bool keep_response = false) {
    det.validate();
    const Grid& g = object.grid;
    BucketOperator op;
    op.object_grid = g;
    op.support = object_support(object);
    const int m = static_cast<int>(op.support.size());

    ComplexField probe(g, wavelength);
    PropagationMethod method = det.method;
    if (method == PropagationMethod::automatic) method = select_method(probe, det.z1);

    Eigen::MatrixXcd G;
    ApertureWeights w;
    double out_pitch = g.pitch;
    if (method == PropagationMethod::angular_spectrum) {
        // The discrete angular-spectrum propagator is a circular convolution,
        // so every impulse response is a shifted copy of the on-axis one.
        const int r_axis = g.ny / 2, c_axis = g.nx / 2;
        probe.values(r_axis, c_axis) = 1.0;
        const ComplexField h = propagate(probe, det.z1, method);
        w = aperture_weights(h.grid, det.aperture);
        G.resize(static_cast<Eigen::Index>(w.index.size()), m);
        for (int j = 0; j < m; ++j) {
            const int rj = op.support[j] / g.nx, cj = op.support[j] % g.nx;
            const double t = object.transmittance[op.support[j]];
            for (std::size_t k = 0; k < w.index.size(); ++k) {
                const int rk = w.index[k] / g.nx, ck = w.index[k] % g.nx;
                const int rr = ((rk - rj + r_axis) % g.ny + g.ny) % g.ny;
                const int cc = ((ck - cj + c_axis) % g.nx + g.nx) % g.nx;
                G(static_cast<Eigen::Index>(k), j) = t * h.values(rr, cc);
            }
        }
    } else {
        for (int j = 0; j < m; ++j) {
            probe.values = ComplexImage(g.ny, g.nx);
            probe.values[op.support[j]] = object.transmittance[op.support[j]];
            const ComplexField h = propagate(probe, det.z1, method);
            if (j == 0) {
                w = aperture_weights(h.grid, det.aperture);
                G.resize(static_cast<Eigen::Index>(w.index.size()), m);
                out_pitch = h.grid.pitch;
            }
            for (std::size_t k = 0; k < w.index.size(); ++k)
                G(static_cast<Eigen::Index>(k), j) = h.values[w.index[k]];
        }
    }
    if (method == PropagationMethod::angular_spectrum) out_pitch = g.pitch;
    for (std::size_t k = 0; k < w.index.size(); ++k)
        G.row(static_cast<Eigen::Index>(k)) *= std::sqrt(w.weight[k]) * out_pitch;
    op.Q = G.adjoint() * G;
    if (keep_response) op.G = std::move(G);
    return op;
}

// ---------------------------------------------------------------------------
// Acquisition

/// Worker count: GHOSTREC_THREADS if set, else 1.
inline int configured_threads() {
    if (const char* env = std::getenv("GHOSTREC_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

/// Runs body(i) for i in [0, n) on `threads` workers with a static
/// interleaved schedule.
template <typename F>
void parallel_for(int n, int threads, F&& body) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < n; i += threads) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// One source, several cameras and several test detectors fed by the same
/// realizations.
struct AcquisitionPlan {
    SourceSpec source;
    double z = 1200e-3;                 // source -> object / reference camera
    Grid source_grid;
    PropagationMethod source_method = PropagationMethod::automatic;
    ObjectMask object;
    std::vector<CameraSpec> cameras;
    std::vector<DetectorSpec> detectors;
    int K = 1;
    bool record_mean_pattern = false;   // mean detector-plane intensity of detectors[0]
    int threads = 0;                    // 0: configured_threads()
};

struct AcquisitionResult {
    std::vector<SpeckleEnsemble> ensembles;        // one per camera
    std::vector<MeasurementVector> measurements;   // one per detector
    std::optional<ComplexField> mean_pattern;      // values hold the real mean intensity
};

/// Source grid whose single-FFT Fresnel transform over z lands on `object_grid`.
inline Grid fresnel_source_grid(const Grid& object_grid, double wavelength, double z) {
    return Grid(object_grid.nx, object_grid.ny, wavelength * z / (object_grid.nx * object_grid.pitch));
}

namespace detail {

inline void warn_far_field(const SourceSpec& spec, double z) {
    const double ff = far_field_distance(spec.diameter, spec.wavelength);
    if (z < ff)
        warn("reference distance " + std::to_string(z) + " m is inside the source far-field distance " +
             std::to_string(ff) + " m");
}

}  // namespace detail

inline AcquisitionResult acquire(const AcquisitionPlan& plan,
                                 const std::vector<const BucketOperator*>& prebuilt = {}) {
    if (plan.K < 1) throw InvalidArgument("K must be >= 1");
    plan.source.validate();
    plan.object.validate();
    for (const auto& d : plan.detectors) d.validate();
    detail::warn_far_field(plan.source, plan.z);

    const Grid& og = plan.object.grid;
    PropagationMethod src_method = plan.source_method;
    {
        ComplexField probe(plan.source_grid, plan.source.wavelength);
        if (src_method == PropagationMethod::automatic) src_method = select_method(probe, plan.z);
    }
    const Grid expected_object_grid =
        src_method == PropagationMethod::fresnel
            ? Grid(plan.source_grid.nx, plan.source_grid.ny,
                   fresnel_output_pitch(plan.source_grid, plan.source.wavelength, plan.z))
            : plan.source_grid;
    if (expected_object_grid.nx != og.nx || expected_object_grid.ny != og.ny ||
        std::abs(expected_object_grid.pitch - og.pitch) > 1e-9 * og.pitch)
        throw DimensionMismatch("source grid does not propagate onto the object grid");

    // Field window on the object plane: camera crops plus object support.
    std::vector<Grid> cam_grids;
    int r_lo = og.ny, r_hi = -1, c_lo = og.nx, c_hi = -1;
    for (const auto& cam : plan.cameras) {
        const Grid cg = camera_grid(og, cam);
        const int f = camera_box_factor(og.pitch, cam.pitch);
        const auto [r0, c0] = camera_origin(og, cg);
        r_lo = std::min(r_lo, r0), c_lo = std::min(c_lo, c0);
        r_hi = std::max(r_hi, r0 + cg.ny * f - 1), c_hi = std::max(c_hi, c0 + cg.nx * f - 1);
        cam_grids.push_back(cg);
    }
    const std::vector<int> support = object_support(plan.object);
    for (int idx : support) {
        r_lo = std::min(r_lo, idx / og.nx), r_hi = std::max(r_hi, idx / og.nx);
        c_lo = std::min(c_lo, idx % og.nx), c_hi = std::max(c_hi, idx % og.nx);
    }
    const int w_rows = r_hi - r_lo + 1, w_cols = c_hi - c_lo + 1;

    std::vector<BucketOperator> owned;
    std::vector<const BucketOperator*> ops(plan.detectors.size(), nullptr);
    for (std::size_t d = 0; d < plan.detectors.size(); ++d) {
        if (d < prebuilt.size() && prebuilt[d]) {
            if (prebuilt[d]->support != support) throw DimensionMismatch("prebuilt bucket operator support differs");
            ops[d] = prebuilt[d];
        }
    }
    owned.reserve(plan.detectors.size());
    for (std::size_t d = 0; d < plan.detectors.size(); ++d)
        if (!ops[d]) {
            owned.push_back(make_bucket_operator(plan.object, plan.detectors[d], plan.source.wavelength));
            ops[d] = &owned.back();
        }

    const int K = plan.K;
    const int m = static_cast<int>(support.size());
    AcquisitionResult result;
    for (const auto& cg : cam_grids) result.ensembles.push_back({cg, std::vector<Image>(K)});
    Eigen::MatrixXcd V(m, K);

    const int threads = plan.threads > 0 ? plan.threads : configured_threads();
    parallel_for(K, threads, [&](int s) {
        const ComplexField src = sample_source_field(plan.source, plan.source_grid, static_cast<std::uint64_t>(s));
        ComplexImage win;
        if (src_method == PropagationMethod::fresnel) {
            win = detail::propagate_fresnel_window(src, plan.z, r_lo, c_lo, w_rows, w_cols);
        } else {
            win = crop(propagate(src, plan.z, src_method).values, r_lo, c_lo, w_rows, w_cols);
        }
        for (int j = 0; j < m; ++j) {
            const int r = support[j] / og.nx - r_lo, c = support[j] % og.nx - c_lo;
            V(j, s) = win(r, c);
        }
        Image inten(w_rows, w_cols);
        for (std::size_t i = 0; i < win.size(); ++i) inten[i] = std::norm(win[i]);
        for (std::size_t k = 0; k < plan.cameras.size(); ++k) {
            const Grid& cg = cam_grids[k];
            const int f = camera_box_factor(og.pitch, plan.cameras[k].pitch);
            const auto [r0, c0] = camera_origin(og, cg);
            result.ensembles[k].images[s] = box_average(crop(inten, r0 - r_lo, c0 - c_lo, cg.ny * f, cg.nx * f), f);
        }
    });

    for (std::size_t d = 0; d < plan.detectors.size(); ++d) {
        const Eigen::MatrixXcd QV = ops[d]->Q * V;
        MeasurementVector y;
        y.values.resize(K);
        for (int s = 0; s < K; ++s) y.values[s] = std::max(0.0, V.col(s).dot(QV.col(s)).real());
        result.measurements.push_back(std::move(y));
    }

    if (plan.record_mean_pattern && !plan.detectors.empty()) {
        // Exact ensemble mean via the mutual intensity on the support:
        // propagate its eigenmodes and sum their intensities.
        const Eigen::MatrixXcd J = (V * V.adjoint()) / static_cast<double>(K);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(J);
        const Eigen::VectorXd lam = eig.eigenvalues();
        const double total = lam.sum();
        ComplexField probe(og, plan.source.wavelength);
        Image mean;
        Grid out_grid;
        double kept = 0.0;
        for (int i = m - 1; i >= 0; --i) {
            if (lam(i) <= 0.0 || kept >= total * (1.0 - 1e-10)) break;
            kept += lam(i);
            probe.values = ComplexImage(og.ny, og.nx);
            for (int j = 0; j < m; ++j)
                probe.values[support[j]] = eig.eigenvectors()(j, i) * plan.object.transmittance[support[j]];
            const ComplexField out = propagate(probe, plan.detectors[0].z1, plan.detectors[0].method);
            if (mean.empty()) {
                mean = Image(out.grid.ny, out.grid.nx);
                out_grid = out.grid;
            }
            for (std::size_t p = 0; p < mean.size(); ++p) mean[p] += lam(i) * std::norm(out.values[p]);
        }
        ComplexField pattern(out_grid, plan.source.wavelength);
        for (std::size_t p = 0; p < mean.size(); ++p) pattern.values[p] = mean[p];
        result.mean_pattern = std::move(pattern);
    }
    return result;
}

/// Single-detector dual-arm acquisition. The source is propagated to the
/// object plane with `source_method`; `source_grid` defaults to the grid whose
/// Fresnel transform over z lands on the object grid.
inline std::pair<SpeckleEnsemble, MeasurementVector> acquire_ensemble(
    const SourceSpec& spec, const ObjectMask& object, const DetectorSpec& det, double z, int K,
    std::optional<Grid> source_grid = std::nullopt, PropagationMethod source_method = PropagationMethod::fresnel) {
    AcquisitionPlan plan;
    plan.source = spec;
    plan.z = z;
    plan.source_grid = source_grid ? *source_grid : fresnel_source_grid(object.grid, spec.wavelength, z);
    plan.source_method = source_method;
    plan.object = object;
    plan.cameras = {det.camera()};
    plan.detectors = {det};
    plan.K = K;
    AcquisitionResult r = acquire(plan);
    return {std::move(r.ensembles[0]), std::move(r.measurements[0])};
}

inline SensingMatrix build_sensing_matrix(const SpeckleEnsemble& ensemble) {
    if (ensemble.images.empty()) throw InvalidArgument("empty speckle ensemble");
    const Grid& g = ensemble.grid;
    SensingMatrix A{g, RowMatrix(ensemble.count(), static_cast<Eigen::Index>(g.size()))};
    for (int s = 0; s < ensemble.count(); ++s) {
        const Image& img = ensemble.images[s];
        if (img.rows() != g.ny || img.cols() != g.nx) throw DimensionMismatch("ensemble image shape differs from its grid");
        std::copy(img.data(), img.data() + img.size(), A.data.row(s).data());
    }
    return A;
}

/// First `k` rows / entries of an acquisition.
inline SpeckleEnsemble take_prefix(const SpeckleEnsemble& e, int k) {
    if (k < 1 || k > e.count()) throw InvalidArgument("prefix length out of range");
    return {e.grid, std::vector<Image>(e.images.begin(), e.images.begin() + k)};
}

inline MeasurementVector take_prefix(const MeasurementVector& y, int k) {
    if (k < 1 || k > y.size()) throw InvalidArgument("prefix length out of range");
    return {std::vector<double>(y.values.begin(), y.values.begin() + k), y.noise};
}

inline MeasurementVector add_noise(const MeasurementVector& y, const NoiseModel& model, std::uint64_t seed) {
    MeasurementVector out = y;
    out.noise = model;
    auto rng = make_stream(seed, StreamTag::measurement_noise, 0);
    switch (model.kind) {
        case NoiseKind::none:
            break;
        case NoiseKind::additive_gaussian: {
            if (!(model.sigma >= 0.0) || !std::isfinite(model.sigma)) throw InvalidArgument("noise sigma must be >= 0");
            if (model.sigma == 0.0 || y.values.empty()) break;
            double mean = 0.0;
            for (double v : y.values) mean += v;
            mean /= static_cast<double>(y.values.size());
            std::normal_distribution<double> n(0.0, model.sigma * std::abs(mean));
            for (double& v : out.values) v += n(rng);
            break;
        }
        case NoiseKind::poisson: {
            if (!(model.scale > 0.0) || !std::isfinite(model.scale)) throw InvalidArgument("poisson scale must be > 0");
            for (double& v : out.values) {
                if (v < 0.0) throw InvalidArgument("poisson noise needs nonnegative values");
                std::poisson_distribution<long long> p(v * model.scale);
                v = static_cast<double>(v * model.scale > 0.0 ? p(rng) : 0) / model.scale;
            }
            break;
        }
    }
    return out;
}

/// rho = ||y - c A x|| / ||y|| with the scalar c fitted by least squares.
inline double linear_model_residual(const SensingMatrix& A, const MeasurementVector& y, const Image& x_true) {
    if (A.rows() != y.size()) throw DimensionMismatch("A rows and y length differ");
    if (static_cast<std::size_t>(A.cols()) != x_true.size()) throw DimensionMismatch("A columns and x size differ");
    const Eigen::Map<const Eigen::VectorXd> x(x_true.data(), static_cast<Eigen::Index>(x_true.size()));
    const Eigen::Map<const Eigen::VectorXd> yv(y.values.data(), y.size());
    const Eigen::VectorXd ax = A.data * x;
    const double denom = ax.squaredNorm();
    const double c = denom > 0.0 ? ax.dot(yv) / denom : 0.0;
    const double ny = yv.norm();
    if (ny == 0.0) throw InvalidArgument("zero measurement vector");
    return (yv - c * ax).norm() / ny;
}

}  // namespace ghostrec
