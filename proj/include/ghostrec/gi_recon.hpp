#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ghostrec/error.hpp"
#include "ghostrec/fft.hpp"
#include "ghostrec/grid.hpp"
#include "ghostrec/measurement.hpp"

namespace ghostrec {

struct CorrelationImage {
    Grid grid;
    Image values;
    int K_used = 0;
};

/// Covariance ghost image g_j = (1/K) sum_s (I_sj - mean_j)(B_s - mean_B).
inline CorrelationImage correlate_gi(const SensingMatrix& A, const MeasurementVector& y) {
    if (A.rows() != y.size()) throw DimensionMismatch("A has " + std::to_string(A.rows()) + " rows but y has " +
                                                       std::to_string(y.size()) + " entries");
    const int K = A.rows();
    if (K < 2) throw EstimationError("correlation needs K >= 2");
    const Eigen::Map<const Eigen::VectorXd> yv(y.values.data(), K);
    const Eigen::VectorXd dy = yv.array() - yv.mean();
    const Eigen::RowVectorXd mean_i = A.data.colwise().mean();
    // sum_s (I_s - mean)(dB_s) = A^T dB - mean * sum(dB); the second term is
    // zero up to rounding, kept for exactness.
    const Eigen::RowVectorXd g = (dy.transpose() * A.data - mean_i * dy.sum()) / static_cast<double>(K);
    CorrelationImage out{A.grid, Image(A.grid.ny, A.grid.nx), K};
    std::copy(g.data(), g.data() + g.size(), out.values.data());
    return out;
}

/// Radially averaged autocovariance of the ensemble (fluctuations about the
/// pixelwise ensemble mean, so the DC pedestal is removed). Bin r holds the
/// lags with round(|lag|) == r, in camera pixels.
inline std::vector<double> speckle_autocorrelation_profile(const SpeckleEnsemble& ensemble) {
    if (ensemble.count() < 1) throw EstimationError("empty ensemble");
    const int rows = ensemble.grid.ny, cols = ensemble.grid.nx;
    Image mean(rows, cols);
    for (const auto& img : ensemble.images)
        for (std::size_t i = 0; i < img.size(); ++i) mean[i] += img[i];
    for (auto& v : mean.flat()) v /= ensemble.count();

    // Linear (zero-padded) autocorrelation of each fluctuation image.
    const int pr = 2 * rows, pc = 2 * cols;
    Image acc(pr, pc);
    ComplexImage buf(pr, pc);
    for (const auto& img : ensemble.images) {
        buf = ComplexImage(pr, pc);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) buf(r, c) = img(r, c) - mean(r, c);
        fft::transform(buf, fft::Direction::forward);
        for (auto& v : buf.flat()) v = std::norm(v);
        fft::transform(buf, fft::Direction::inverse);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += buf[i].real();
    }

    const int max_r = std::min(rows, cols) / 2;
    std::vector<double> sum(max_r + 1, 0.0), weight(max_r + 1, 0.0);
    for (int dr = -(rows - 1); dr <= rows - 1; ++dr)
        for (int dc = -(cols - 1); dc <= cols - 1; ++dc) {
            const int bin = static_cast<int>(std::lround(std::hypot(dr, dc)));
            if (bin > max_r) continue;
            const double overlap = static_cast<double>(rows - std::abs(dr)) * (cols - std::abs(dc));
            const double v = acc((dr + pr) % pr, (dc + pc) % pc) / overlap;
            sum[bin] += v;
            weight[bin] += 1.0;
        }
    std::vector<double> profile(max_r + 1);
    for (int b = 0; b <= max_r; ++b) profile[b] = sum[b] / weight[b];
    return profile;
}

/// Full width at half maximum of the speckle autocorrelation, in meters.
inline double speckle_fwhm(const SpeckleEnsemble& ensemble) {
    if (ensemble.count() < 100)
        throw EstimationError("speckle_fwhm needs K >= 100, got " + std::to_string(ensemble.count()));
    std::vector<double> p = speckle_autocorrelation_profile(ensemble);
    const double peak = p[0];
    double scale = 0.0;
    for (const auto& img : ensemble.images)
        for (double v : img.flat()) scale = std::max(scale, std::abs(v));
    if (!(peak > 1e-24 * std::max(1.0, scale * scale))) throw EstimationError("flat autocorrelation: no peak");
    const int n = static_cast<int>(p.size());
    const double half = 0.5 * peak;
    for (int i = 1; i < n; ++i) {
        if (p[i] <= half) {
            const double t = (p[i - 1] - half) / (p[i - 1] - p[i]);
            return 2.0 * (i - 1 + t) * ensemble.grid.pitch;
        }
    }
    throw EstimationError("autocorrelation never falls to half maximum inside the camera window");
}

}  // namespace ghostrec
