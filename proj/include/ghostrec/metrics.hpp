#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "ghostrec/error.hpp"
#include "ghostrec/grid.hpp"

namespace ghostrec {

enum class ProfileAxis { horizontal, vertical };

/// Pixel range [begin, end) across the profile axis that gets averaged.
struct Band {
    int begin = 0;
    int end = 0;
};

struct ResolvabilityReport {
    bool resolved = false;
    std::optional<double> dip_ratio;        // only when two peaks were found
    std::optional<double> peak_separation;  // meters
    std::vector<double> profile;
};

/// Band-averaged 1-D profile; horizontal averages rows [band) into a profile
/// along x.
inline std::vector<double> band_profile(const Image& image, ProfileAxis axis, Band band) {
    const int across = axis == ProfileAxis::horizontal ? image.rows() : image.cols();
    const int along = axis == ProfileAxis::horizontal ? image.cols() : image.rows();
    if (band.begin < 0 || band.end > across || band.begin >= band.end) throw InvalidArgument("band outside the image");
    std::vector<double> p(along, 0.0);
    for (int k = band.begin; k < band.end; ++k)
        for (int i = 0; i < along; ++i) p[i] += axis == ProfileAxis::horizontal ? image(k, i) : image(i, k);
    for (auto& v : p) v /= (band.end - band.begin);
    return p;
}

namespace detail {

struct Peak {
    double position;  // sub-pixel
    int lo, hi;       // plateau extent
    double height;
};

/// Interior strict local maxima, treating runs of equal values as one
/// plateau; positions are refined by a parabola through single-pixel peaks.
inline std::vector<Peak> local_maxima(const std::vector<double>& p) {
    std::vector<Peak> peaks;
    const int n = static_cast<int>(p.size());
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && p[j + 1] == p[i]) ++j;
        if (i > 0 && j < n - 1 && p[i - 1] < p[i] && p[j + 1] < p[i]) {
            double pos = 0.5 * (i + j);
            if (i == j) {
                const double ym = p[i - 1], y0 = p[i], yp = p[i + 1];
                const double den = ym - 2.0 * y0 + yp;
                if (den < 0.0) pos += 0.5 * (ym - yp) / den;
            }
            peaks.push_back({pos, i, j, p[i]});
        }
        i = j + 1;
    }
    return peaks;
}

}  // namespace detail

/// Two-point resolution test on a band-averaged profile. The profile minimum
/// is taken as the baseline, so the result ignores positive scaling and
/// constant offsets. A second peak only counts if it rises at least
/// `min_peak_fraction` of the way from the baseline to the tallest peak.
inline ResolvabilityReport two_peak_resolvability(const Image& image, ProfileAxis axis, Band band, double pitch,
                                                  double min_peak_fraction = 0.5) {
    ResolvabilityReport rep;
    rep.profile = band_profile(image, axis, band);
    const auto& p = rep.profile;
    for (double v : p)
        if (!std::isfinite(v)) throw InvalidArgument("non-finite image value");
    const auto [mn, mx] = std::minmax_element(p.begin(), p.end());
    const double base = *mn;
    if (!(*mx > base)) throw EstimationError("flat profile: no peaks");

    auto peaks = detail::local_maxima(p);
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.height > b.height; });
    if (peaks.empty()) return rep;
    const detail::Peak first = peaks[0];
    const detail::Peak* second = nullptr;
    for (std::size_t k = 1; k < peaks.size(); ++k) {
        const int gap = peaks[k].lo > first.hi ? peaks[k].lo - first.hi : first.lo - peaks[k].hi;
        if (gap >= 2 && peaks[k].height - base >= min_peak_fraction * (first.height - base)) {
            second = &peaks[k];
            break;
        }
    }
    if (!second) return rep;

    const int a = std::min(first.hi, second->hi), b = std::max(first.lo, second->lo);
    double dip = std::numeric_limits<double>::infinity();
    for (int i = a; i <= b; ++i) dip = std::min(dip, p[i]);
    const double mean_peak = 0.5 * (first.height + second->height) - base;
    rep.dip_ratio = (dip - base) / mean_peak;
    rep.peak_separation = std::abs(first.position - second->position) * pitch;
    rep.resolved = *rep.dip_ratio < 0.735;
    return rep;
}

/// Dominant fringe period of a nonnegative 1-D intensity profile, in meters.
/// The magnitude spectrum is scanned on a fine frequency grid; the lobe around
/// zero frequency (up to its first minimum) is skipped and the strongest
/// remaining peak is refined with a parabola.
inline double fringe_period(const std::vector<double>& profile, double pitch) {
    const int n = static_cast<int>(profile.size());
    if (n < 8) throw InvalidArgument("fringe profile too short");
    const int samples = 64 * n;  // frequency samples on [0, 0.5] cycles per pixel
    std::vector<double> mag(samples + 1);
    for (int k = 0; k <= samples; ++k) {
        const double f = 0.5 * k / samples;
        double re = 0.0, im = 0.0;
        for (int i = 0; i < n; ++i) {
            const double ph = 2.0 * std::numbers::pi * f * (i - 0.5 * (n - 1));
            re += profile[i] * std::cos(ph);
            im -= profile[i] * std::sin(ph);
        }
        mag[k] = std::hypot(re, im);
    }
    int k = 1;
    while (k < samples && mag[k + 1] <= mag[k]) ++k;
    int best = -1;
    for (int j = k + 1; j < samples; ++j)
        if (mag[j] >= mag[j - 1] && mag[j] >= mag[j + 1] && (best < 0 || mag[j] > mag[best])) best = j;
    if (best < 0) throw EstimationError("no fringe peak in the profile spectrum");
    double pos = best;
    const double den = mag[best - 1] - 2.0 * mag[best] + mag[best + 1];
    if (den < 0.0) pos += 0.5 * (mag[best - 1] - mag[best + 1]) / den;
    return pitch / (0.5 * pos / samples);
}

namespace detail {

inline Image max_normalized(const Image& img) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : img.flat()) mx = std::max(mx, v);
    Image out = img;
    if (mx > 0.0)
        for (auto& v : out.flat()) v /= mx;
    return out;
}

}  // namespace detail

/// Mean squared error after dividing each image by its own maximum (an image
/// whose maximum is not positive is compared as is).
inline double mse(const Image& recon, const Image& truth) {
    if (!recon.same_shape(truth)) throw DimensionMismatch("mse needs images of equal shape");
    if (std::none_of(truth.flat().begin(), truth.flat().end(), [](double v) { return v != 0.0; }))
        throw InvalidArgument("truth image is identically zero");
    const Image a = detail::max_normalized(recon), b = detail::max_normalized(truth);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

/// 10 log10(1/mse); +infinity when the images agree exactly.
inline double psnr(const Image& recon, const Image& truth) {
    const double e = mse(recon, truth);
    return e == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / e);
}

/// Zero-mean normalized cross-correlation.
inline double normalized_cross_correlation(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("ncc needs images of equal shape");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= n, mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace ghostrec
