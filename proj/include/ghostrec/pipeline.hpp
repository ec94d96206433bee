#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ghostrec/basis.hpp"
#include "ghostrec/config.hpp"
#include "ghostrec/ensemble_io.hpp"
#include "ghostrec/error.hpp"
#include "ghostrec/field_sim.hpp"
#include "ghostrec/gi_recon.hpp"
#include "ghostrec/image_io.hpp"
#include "ghostrec/measurement.hpp"
#include "ghostrec/metrics.hpp"
#include "ghostrec/objects.hpp"
#include "ghostrec/rng.hpp"
#include "ghostrec/sparse_solver.hpp"

namespace ghostrec {

struct ImageScores {
    double mse = 0.0;
    double psnr = 0.0;
    std::optional<ResolvabilityReport> resolvability;  // double slit only
};

/// One row of metrics.csv.
struct RunMetrics {
    std::string object;
    std::string basis;
    int K = 0;
    std::uint64_t seed = 0;
    double z1 = 0.0;
    double L1 = 0.0;
    double camera_pitch = 0.0;
    int camera_pixels = 0;
    double tau_effective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool kkt_ok = false;
    double kkt_violation = 0.0;
    bool trace_monotone = false;
    double rho = 0.0;
    ImageScores gi;
    ImageScores gisc;
    std::optional<double> fringe_period;
    std::optional<double> fringe_expected;
};

inline const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> cols{
        "object",        "basis",          "K",              "seed",           "z1_m",
        "L1_m",          "camera_pitch_m", "camera_pixels",  "tau_effective",  "iterations",
        "converged",     "kkt_ok",         "kkt_violation",  "trace_monotone", "rho",
        "mse_gi",        "psnr_gi",        "gi_resolved",    "gi_dip_ratio",   "gi_peak_separation_m",
        "mse_gisc",      "psnr_gisc",      "gisc_resolved",  "gisc_dip_ratio", "gisc_peak_separation_m",
        "fringe_period_m", "fringe_expected_m"};
    return cols;
}

namespace detail {

inline std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
inline std::string cell(bool b) { return b ? "true" : "false"; }

inline void append_scores(std::vector<std::string>& row, const ImageScores& s) {
    row.push_back(format_double(s.mse));
    row.push_back(format_double(s.psnr));
    if (s.resolvability) {
        row.push_back(cell(s.resolvability->resolved));
        row.push_back(cell(s.resolvability->dip_ratio));
        row.push_back(cell(s.resolvability->peak_separation));
    } else {
        row.insert(row.end(), 3, std::string());
    }
}

}  // namespace detail

inline std::vector<std::string> metrics_cells(const RunMetrics& m) {
    std::vector<std::string> row{m.object,
                                 m.basis,
                                 std::to_string(m.K),
                                 std::to_string(m.seed),
                                 format_double(m.z1),
                                 format_double(m.L1),
                                 format_double(m.camera_pitch),
                                 std::to_string(m.camera_pixels),
                                 format_double(m.tau_effective),
                                 std::to_string(m.iterations),
                                 detail::cell(m.converged),
                                 detail::cell(m.kkt_ok),
                                 format_double(m.kkt_violation),
                                 detail::cell(m.trace_monotone),
                                 format_double(m.rho)};
    detail::append_scores(row, m.gi);
    detail::append_scores(row, m.gisc);
    row.push_back(detail::cell(m.fringe_period));
    row.push_back(detail::cell(m.fringe_expected));
    return row;
}

// ---------------------------------------------------------------------------
// Building blocks

namespace detail {

template <typename F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const ConfigValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

}  // namespace detail

/// Source-plane grid and propagator that land the source on the object grid.
inline std::pair<Grid, PropagationMethod> source_setup(const ExperimentConfig& c) {
    const Grid og = c.object_grid();
    PropagationMethod m = c.source_propagator;
    if (m == PropagationMethod::automatic)
        m = c.z <= angular_spectrum_limit(og, c.wavelength) ? PropagationMethod::angular_spectrum
                                                           : PropagationMethod::fresnel;
    return {m == PropagationMethod::fresnel ? fresnel_source_grid(og, c.wavelength, c.z) : og, m};
}

inline ObjectMask make_object(const ExperimentConfig& c) {
    const Grid og = c.object_grid();
    switch (c.object) {
        case ObjectKind::double_slit:
            return make_double_slit(og, DoubleSlit{c.slit_width, c.slit_separation, c.slit_height, c.object_offset_x,
                                                   c.object_offset_y});
        case ObjectKind::ring_glyph:
            return make_ring_glyph(og, RingGlyph{c.ring_outer_radius, c.ring_width, c.bar_width, c.bar_half_length,
                                                 c.object_offset_x, c.object_offset_y});
        case ObjectKind::file:
            return make_mask_from_image(og, read_pgm(c.object_file).normalized());
    }
    throw InvalidArgument("unknown object kind");
}

/// Rows of the camera image covered by the slits: the band the two-peak test
/// averages over. Empty for other objects.
inline std::optional<Band> slit_band(const ExperimentConfig& c, const Image& truth) {
    if (c.object != ObjectKind::double_slit) return std::nullopt;
    int lo = truth.rows(), hi = -1;
    for (int r = 0; r < truth.rows(); ++r)
        for (int col = 0; col < truth.cols(); ++col)
            if (truth(r, col) > 0.0) lo = std::min(lo, r), hi = std::max(hi, r);
    if (hi < lo) return std::nullopt;
    return Band{lo, hi + 1};
}

inline ImageScores score_image(const Image& recon, const Image& truth, double pitch, const std::optional<Band>& band) {
    ImageScores s;
    s.mse = mse(recon, truth);
    s.psnr = psnr(recon, truth);
    if (band) {
        try {
            s.resolvability = two_peak_resolvability(recon, ProfileAxis::horizontal, *band, pitch);
        } catch (const EstimationError&) {
            s.resolvability = ResolvabilityReport{};  // flat image: nothing resolved
        }
    }
    return s;
}

/// Ghost image as written and scored: the covariance image with negative
/// values set to zero.
inline Image gi_display(const CorrelationImage& g) {
    Image out = g.values;
    for (auto& v : out.flat()) v = std::max(v, 0.0);
    return out;
}

/// Fringe period of a detector-plane pattern along x, from a few rows through
/// the pattern center. Empty when the expected period spans fewer than four
/// samples or more than half the grid.
inline std::optional<double> detector_fringe_period(const ComplexField& pattern, double expected) {
    const Grid& g = pattern.grid;
    if (expected < 4.0 * g.pitch || expected > 0.5 * g.nx * g.pitch) return std::nullopt;
    Image inten(g.ny, g.nx);
    for (std::size_t i = 0; i < inten.size(); ++i) inten[i] = pattern.values[i].real();
    const Band band{std::max(0, g.ny / 2 - 2), std::min(g.ny, g.ny / 2 + 3)};
    try {
        return fringe_period(band_profile(inten, ProfileAxis::horizontal, band), g.pitch);
    } catch (const EstimationError&) {
        return std::nullopt;
    }
}

struct Analysis {
    MeasurementVector y;
    CorrelationImage gi;
    ReconstructionResult gisc;
    RunMetrics metrics;
};

/// Noise, GI, GISC and scores for one detector's measurements.
inline Analysis analyze(const ExperimentConfig& c, const SensingMatrix& A, const MeasurementVector& clean,
                        const Image& truth) {
    Analysis out;
    out.y = detail::run_stage("noise", [&] { return add_noise(clean, c.noise_model(), c.seed); });
    out.gi = detail::run_stage("gi", [&] { return correlate_gi(A, out.y); });
    out.gisc = detail::run_stage("gisc", [&] {
        return solve_l1(A, out.y, Basis(c.basis, A.grid.nx, A.grid.ny), c.solver_options());
    });
    detail::run_stage("metrics", [&] {
        RunMetrics& m = out.metrics;
        m.object = to_string(c.object);
        m.basis = to_string(c.basis);
        m.K = c.K;
        m.seed = c.seed;
        m.z1 = c.z1;
        m.L1 = c.L1;
        m.camera_pitch = A.grid.pitch;
        m.camera_pixels = A.grid.nx;
        m.tau_effective = out.gisc.tau_effective;
        m.iterations = out.gisc.iterations_used;
        m.converged = out.gisc.converged;
        m.kkt_ok = out.gisc.kkt.ok;
        m.kkt_violation = out.gisc.kkt.max_violation;
        m.trace_monotone = objective_trace_monotone(out.gisc.objective_trace);
        m.rho = linear_model_residual(A, out.y, truth);
        const auto band = slit_band(c, truth);
        m.gi = score_image(gi_display(out.gi), truth, A.grid.pitch, band);
        m.gisc = score_image(out.gisc.image, truth, A.grid.pitch, band);
        return 0;
    });
    return out;
}

struct RunOutcome {
    ExperimentConfig config;
    ObjectMask object;
    Image truth;  // |T|^2 on the camera grid
    SpeckleEnsemble ensemble;
    Analysis analysis;
    std::optional<ComplexField> mean_pattern;

    [[nodiscard]] const RunMetrics& metrics() const { return analysis.metrics; }
};

/// Full pipeline for one config, in memory.
inline RunOutcome simulate(const ExperimentConfig& c) {
    c.validate();
    RunOutcome out;
    out.config = c;
    out.object = detail::run_stage("object", [&] { return make_object(c); });
    const DetectorSpec det = c.detector_spec();
    AcquisitionResult acq = detail::run_stage("acquisition", [&] {
        const auto [sgrid, smethod] = source_setup(c);
        AcquisitionPlan plan;
        plan.source = c.source_spec();
        plan.z = c.z;
        plan.source_grid = sgrid;
        plan.source_method = smethod;
        plan.object = out.object;
        plan.cameras = {det.camera()};
        plan.detectors = {det};
        plan.K = c.K;
        plan.record_mean_pattern = true;
        return acquire(plan);
    });
    out.ensemble = std::move(acq.ensembles[0]);
    out.mean_pattern = std::move(acq.mean_pattern);
    out.truth = truth_on_camera(out.object, det.camera());
    const SensingMatrix A = build_sensing_matrix(out.ensemble);
    out.analysis = analyze(c, A, acq.measurements[0], out.truth);
    if (c.object == ObjectKind::double_slit && out.mean_pattern) {
        const double expected = c.wavelength * c.z1 / c.slit_separation;
        out.analysis.metrics.fringe_expected = expected;
        out.analysis.metrics.fringe_period = detector_fringe_period(*out.mean_pattern, expected);
    }
    return out;
}

/// resolved.cfg text: derived quantities as comments, then every key.
inline std::string resolved_config_text(const ExperimentConfig& c) {
    const auto [sgrid, smethod] = source_setup(c);
    const DetectorSpec det = c.detector_spec();
    ComplexField probe(c.object_grid(), c.wavelength);
    const PropagationMethod dmethod =
        c.detector_propagator == PropagationMethod::automatic ? select_method(probe, c.z1) : c.detector_propagator;
    std::ostringstream os;
    os << "# speckle size lambda*z/D = " << format_double(speckle_size(c.wavelength, c.z, c.D)) << " m\n";
    os << "# source far-field distance 2D^2/lambda = " << format_double(far_field_distance(c.D, c.wavelength))
       << " m\n";
    if (c.object == ObjectKind::double_slit)
        os << "# slit far-field distance 2d^2/lambda = "
           << format_double(far_field_distance(c.slit_separation, c.wavelength)) << " m\n";
    os << "# source propagator: " << to_string(smethod) << ", source pitch " << format_double(sgrid.pitch) << " m\n";
    os << "# detector propagator: " << to_string(dmethod) << "\n";
    os << "# object grid: " << c.grid << "x" << c.grid << " at " << format_double(c.object_pitch) << " m\n";
    os << "# camera: " << c.camera_pixels() << "x" << c.camera_pixels() << " pixels, field of view "
       << format_double(det.camera_fov) << " m\n";
    os << emit_config(c);
    return os.str();
}

/// Writes every artifact of a run into `dir`.
inline void write_run(const RunOutcome& r, const std::filesystem::path& dir) {
    detail::run_stage("output", [&] {
        std::filesystem::create_directories(dir);
        write_pgm(dir / "truth.pgm", r.truth);
        write_pgm(dir / "object.pgm", r.object.intensity_transmission());
        if (r.mean_pattern) {
            Image m(r.mean_pattern->grid.ny, r.mean_pattern->grid.nx);
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = r.mean_pattern->values[i].real();
            write_pgm(dir / "detector_mean.pgm", m);
        }
        write_pgm(dir / "gi.pgm", gi_display(r.analysis.gi));
        write_pgm(dir / "gisc.pgm", r.analysis.gisc.image);

        CsvTable metrics(metrics_columns());
        metrics.add_row(metrics_cells(r.metrics()));
        metrics.write(dir / "metrics.csv");

        CsvTable trace({"iteration", "objective"});
        for (std::size_t i = 0; i < r.analysis.gisc.objective_trace.size(); ++i)
            trace.add_row({std::to_string(i), format_double(r.analysis.gisc.objective_trace[i])});
        trace.write(dir / "solver_trace.csv");

        std::ofstream cfg(dir / "resolved.cfg", std::ios::binary);
        cfg << resolved_config_text(r.config);
        if (!cfg) throw IoError("cannot write resolved.cfg");

        if (r.config.save_ensemble) write_ensemble(dir / "ensemble.gisc", r.ensemble, r.analysis.y);
        return 0;
    });
}

inline RunOutcome run_scenario(const ExperimentConfig& c) {
    RunOutcome r = simulate(c);
    write_run(r, c.output);
    return r;
}

// ---------------------------------------------------------------------------
// Re-evaluation of a run directory

/// Scores recomputed from the images stored in a run directory.
inline CsvTable evaluate_run_dir(const std::filesystem::path& dir) {
    const ExperimentConfig c = load_config(dir / "resolved.cfg");
    return detail::run_stage("evaluate", [&] {
        const Image truth = read_pgm(dir / "truth.pgm").normalized();
        const auto band = slit_band(c, truth);
        CsvTable t({"image", "mse", "psnr", "resolved", "dip_ratio", "peak_separation_m"});
        for (const char* name : {"gi", "gisc"}) {
            const Image img = read_pgm(dir / (std::string(name) + ".pgm")).normalized();
            const ImageScores s = score_image(img, truth, c.camera_pitch, band);
            std::vector<std::string> row{name, format_double(s.mse), format_double(s.psnr)};
            if (s.resolvability) {
                row.push_back(detail::cell(s.resolvability->resolved));
                row.push_back(detail::cell(s.resolvability->dip_ratio));
                row.push_back(detail::cell(s.resolvability->peak_separation));
            } else {
                row.insert(row.end(), 3, std::string());
            }
            t.add_row(row);
        }
        return t;
    });
}

// ---------------------------------------------------------------------------
// Reconstruction from a stored ensemble

struct ReconstructRequest {
    std::filesystem::path ensemble;
    std::filesystem::path output;
    BasisKind basis = BasisKind::cartesian;
    SolverOptions solver;
    int K = 0;  // 0: all stored measurements
    std::optional<std::filesystem::path> truth;
};

inline ReconstructionResult reconstruct_ensemble(const ReconstructRequest& req) {
    auto [ensemble, y] = detail::run_stage("load", [&] { return read_ensemble(req.ensemble); });
    if (req.K > 0) {
        if (req.K > ensemble.count()) throw PipelineError("load", "K exceeds the stored measurement count");
        ensemble = take_prefix(ensemble, req.K);
        y = take_prefix(y, req.K);
    }
    const SensingMatrix A = build_sensing_matrix(ensemble);
    const CorrelationImage gi = detail::run_stage("gi", [&] { return correlate_gi(A, y); });
    ReconstructionResult res = detail::run_stage(
        "gisc", [&] { return solve_l1(A, y, Basis(req.basis, A.grid.nx, A.grid.ny), req.solver); });
    detail::run_stage("output", [&] {
        std::filesystem::create_directories(req.output);
        write_pgm(req.output / "gi.pgm", gi_display(gi));
        write_pgm(req.output / "gisc.pgm", res.image);
        CsvTable trace({"iteration", "objective"});
        for (std::size_t i = 0; i < res.objective_trace.size(); ++i)
            trace.add_row({std::to_string(i), format_double(res.objective_trace[i])});
        trace.write(req.output / "solver_trace.csv");
        CsvTable summary({"basis", "K", "tau_effective", "iterations", "converged", "kkt_ok", "trace_monotone",
                          "mse_gi", "mse_gisc"});
        std::string mse_gi, mse_gisc;
        if (req.truth) {
            const Image truth = read_pgm(*req.truth).normalized();
            mse_gi = format_double(mse(gi_display(gi), truth));
            mse_gisc = format_double(mse(res.image, truth));
        }
        summary.add_row({to_string(req.basis), std::to_string(A.rows()), format_double(res.tau_effective),
                         std::to_string(res.iterations_used), detail::cell(res.converged), detail::cell(res.kkt.ok),
                         detail::cell(objective_trace_monotone(res.objective_trace)), mse_gi, mse_gisc});
        summary.write(req.output / "reconstruct.csv");
        return 0;
    });
    return res;
}

// ---------------------------------------------------------------------------
// Figure sweeps

enum class Figure { fig2, fig3, fig4 };

inline std::string to_string(Figure f) {
    switch (f) {
        case Figure::fig2: return "fig2";
        case Figure::fig3: return "fig3";
        case Figure::fig4: return "fig4";
    }
    return "?";
}

inline Figure parse_figure(const std::string& s) {
    if (s == "fig2") return Figure::fig2;
    if (s == "fig3") return Figure::fig3;
    if (s == "fig4") return Figure::fig4;
    throw InvalidArgument("unknown figure '" + s + "' (expected fig2, fig3 or fig4)");
}

struct SweepCell {
    std::string label;
    ExperimentConfig config;
    double nominal_camera_pitch = 0.0;  // the camera the cell stands in for
};

/// Cells of a figure. Camera pitches keep the nominal 13:26:65 um ratios as
/// 50:100:250 um on a fixed 6.4 mm field of view.
inline std::vector<SweepCell> sweep_cells(Figure f) {
    std::vector<SweepCell> cells;
    const ExperimentConfig base;
    auto name = [](const char* what, double v) { return std::string(what) + "=" + detail::format_length(v); };
    if (f == Figure::fig2) {
        struct Camera {
            const char* label;
            double pitch, nominal_pitch;
            int K;
        };
        for (const Camera cam : {Camera{"fine", 50e-6, 13e-6, 3000}, Camera{"coarse", 250e-6, 65e-6, 500}})
            for (double L1 : {1.6e-3, 3.2e-3, 6.4e-3}) {
                ExperimentConfig c = base;
                c.camera_pitch = cam.pitch;
                c.K = cam.K;
                c.L1 = L1;
                cells.push_back({std::string(cam.label) + " " + name("L1", L1), c, cam.nominal_pitch});
            }
    } else if (f == Figure::fig3) {
        for (double z1 : {500e-3, 200e-3, 100e-3, 10e-3}) {
            ExperimentConfig c = base;
            c.camera_pitch = 100e-6;
            c.K = 1000;
            c.z1 = z1;
            cells.push_back({name("z1", z1), c, 26e-6});
        }
    } else {
        for (BasisKind b : {BasisKind::cartesian, BasisKind::dct2}) {
            ExperimentConfig c = base;
            c.object = ObjectKind::ring_glyph;
            c.camera_pitch = 100e-6;
            c.K = 2000;
            c.z1 = 10e-3;
            c.basis = b;
            cells.push_back({"basis=" + to_string(b), c, 26e-6});
        }
    }
    return cells;
}

struct CellRun {
    std::size_t cell = 0;
    int replicate = 0;
    RunMetrics metrics;
};

struct SweepResult {
    Figure figure = Figure::fig2;
    std::vector<SweepCell> cells;
    std::vector<CellRun> runs;
};

/// Seed of replicate r; every cell of a replicate shares it, so cells compare
/// on the same speckle realizations.
inline std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
    return derive_seed(master, static_cast<std::uint64_t>(replicate));
}

namespace detail {

/// Cells that differ only in the test detector or the solver share one
/// acquisition.
inline std::string acquisition_key(ExperimentConfig c) {
    c.z1 = 1.0;
    c.L1 = 1.0;
    c.basis = BasisKind::cartesian;
    c.tau = 0.0;
    c.nonneg.reset();
    c.output = "-";
    return emit_config(c);
}

}  // namespace detail

using ProgressFn = std::function<void(const std::string&)>;

/// Runs `seeds` replicates of every cell. When `artifact_dir` is set, the
/// first replicate of each cell is also written as a full run directory.
inline SweepResult run_sweep(Figure fig, int seeds, std::uint64_t master_seed,
                             const std::optional<std::filesystem::path>& artifact_dir = std::nullopt,
                             const ProgressFn& progress = {}) {
    if (seeds < 1) throw InvalidArgument("seeds must be >= 1");
    SweepResult out;
    out.figure = fig;
    out.cells = sweep_cells(fig);

    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
        const std::string key = detail::acquisition_key(out.cells[i].config);
        auto [it, fresh] = group_of.emplace(key, groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].push_back(i);
    }

    for (int r = 0; r < seeds; ++r) {
        const std::uint64_t seed = replicate_seed(master_seed, r);
        for (const auto& group : groups) {
            ExperimentConfig lead = out.cells[group.front()].config;
            lead.seed = seed;
            lead.validate();
            const ObjectMask object = detail::run_stage("object", [&] { return make_object(lead); });

            std::vector<DetectorSpec> dets;
            std::vector<std::size_t> det_of(group.size());
            for (std::size_t g = 0; g < group.size(); ++g) {
                const DetectorSpec d = out.cells[group[g]].config.detector_spec();
                std::size_t k = 0;
                while (k < dets.size() && !(dets[k].z1 == d.z1 && dets[k].aperture == d.aperture)) ++k;
                if (k == dets.size()) dets.push_back(d);
                det_of[g] = k;
            }
            AcquisitionResult acq = detail::run_stage("acquisition", [&] {
                const auto [sgrid, smethod] = source_setup(lead);
                AcquisitionPlan plan;
                plan.source = lead.source_spec();
                plan.z = lead.z;
                plan.source_grid = sgrid;
                plan.source_method = smethod;
                plan.object = object;
                plan.cameras = {dets.front().camera()};
                plan.detectors = dets;
                plan.K = lead.K;
                return acquire(plan);
            });
            const Image truth = truth_on_camera(object, dets.front().camera());
            const SensingMatrix A = build_sensing_matrix(acq.ensembles[0]);
            acq.ensembles.clear();

            for (std::size_t g = 0; g < group.size(); ++g) {
                ExperimentConfig c = out.cells[group[g]].config;
                c.seed = seed;
                Analysis a = analyze(c, A, acq.measurements[det_of[g]], truth);
                out.runs.push_back({group[g], r, a.metrics});
                if (progress) {
                    std::ostringstream os;
                    os << to_string(fig) << " [" << out.cells[group[g]].label << "] replicate " << r << ": mse_gisc "
                       << format_double(a.metrics.gisc.mse) << ", kkt " << detail::cell(a.metrics.kkt_ok);
                    progress(os.str());
                }
            }
        }
    }

    if (artifact_dir) {
        for (std::size_t i = 0; i < out.cells.size(); ++i) {
            ExperimentConfig c = out.cells[i].config;
            c.seed = replicate_seed(master_seed, 0);
            c.output = (*artifact_dir / ("cell" + std::to_string(i))).string();
            run_scenario(c);
        }
    }
    std::sort(out.runs.begin(), out.runs.end(),
              [](const CellRun& a, const CellRun& b) { return std::tie(a.cell, a.replicate) < std::tie(b.cell, b.replicate); });
    return out;
}

inline CsvTable sweep_runs_table(const SweepResult& s) {
    std::vector<std::string> cols{"figure", "cell", "label", "replicate"};
    cols.insert(cols.end(), metrics_columns().begin(), metrics_columns().end());
    CsvTable t(cols);
    for (const auto& run : s.runs) {
        std::vector<std::string> row{to_string(s.figure), std::to_string(run.cell), s.cells[run.cell].label,
                                     std::to_string(run.replicate)};
        const auto m = metrics_cells(run.metrics);
        row.insert(row.end(), m.begin(), m.end());
        t.add_row(row);
    }
    return t;
}

/// Per-cell aggregate over replicates.
struct CellSummary {
    int seeds = 0;
    double mse_gisc_mean = 0.0, mse_gisc_std = 0.0, mse_gi_mean = 0.0, rho_mean = 0.0;
    int gisc_resolved = 0, gi_resolved = 0, kkt_ok = 0, trace_monotone = 0;
};

inline std::vector<CellSummary> summarize(const SweepResult& s) {
    std::vector<CellSummary> out(s.cells.size());
    std::vector<std::vector<double>> mses(s.cells.size());
    for (const auto& run : s.runs) {
        CellSummary& c = out[run.cell];
        const RunMetrics& m = run.metrics;
        ++c.seeds;
        mses[run.cell].push_back(m.gisc.mse);
        c.mse_gi_mean += m.gi.mse;
        c.rho_mean += m.rho;
        c.gisc_resolved += m.gisc.resolvability && m.gisc.resolvability->resolved;
        c.gi_resolved += m.gi.resolvability && m.gi.resolvability->resolved;
        c.kkt_ok += m.kkt_ok;
        c.trace_monotone += m.trace_monotone;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        CellSummary& c = out[i];
        if (c.seeds == 0) continue;
        for (double v : mses[i]) c.mse_gisc_mean += v;
        c.mse_gisc_mean /= c.seeds;
        for (double v : mses[i]) c.mse_gisc_std += (v - c.mse_gisc_mean) * (v - c.mse_gisc_mean);
        c.mse_gisc_std = c.seeds > 1 ? std::sqrt(c.mse_gisc_std / (c.seeds - 1)) : 0.0;
        c.mse_gi_mean /= c.seeds;
        c.rho_mean /= c.seeds;
    }
    return out;
}

inline CsvTable sweep_summary_table(const SweepResult& s) {
    CsvTable t({"figure", "cell", "label", "object", "basis", "K", "z1_m", "L1_m", "camera_pitch_m",
                "nominal_camera_pitch_m", "camera_pixels", "seeds", "mse_gisc_mean", "mse_gisc_std", "mse_gi_mean",
                "rho_mean", "gisc_resolved", "gi_resolved", "kkt_ok", "trace_monotone"});
    const auto sums = summarize(s);
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
        const ExperimentConfig& c = s.cells[i].config;
        const CellSummary& m = sums[i];
        t.add_row({to_string(s.figure), std::to_string(i), s.cells[i].label, to_string(c.object), to_string(c.basis),
                   std::to_string(c.K), format_double(c.z1), format_double(c.L1), format_double(c.camera_pitch),
                   format_double(s.cells[i].nominal_camera_pitch), std::to_string(c.camera_pixels()),
                   std::to_string(m.seeds), format_double(m.mse_gisc_mean), format_double(m.mse_gisc_std),
                   format_double(m.mse_gi_mean), format_double(m.rho_mean), std::to_string(m.gisc_resolved),
                   std::to_string(m.gi_resolved), std::to_string(m.kkt_ok), std::to_string(m.trace_monotone)});
    }
    return t;
}

}  // namespace ghostrec
