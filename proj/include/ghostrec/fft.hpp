#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <utility>
#include <vector>

#include "ghostrec/grid.hpp"

namespace ghostrec::fft {

enum class Direction { forward, inverse };

namespace detail {

// FFTW's planner is not thread-safe; execution through the new-array API is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(int rows, int cols, Direction dir) {
        std::lock_guard lock(planner_mutex());
        const auto key = std::make_tuple(rows, cols, dir);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<Complex> scratch(static_cast<std::size_t>(rows) * cols);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan p = fftw_plan_dft_2d(rows, cols, buf, buf, dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

private:
    std::map<std::tuple<int, int, Direction>, fftw_plan> plans_;
};

inline PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace detail

/// In-place unnormalized 2-D DFT. The inverse is scaled by 1/(rows*cols) so
/// that inverse(forward(a)) == a.
inline void transform(ComplexImage& a, Direction dir) {
    fftw_plan p = detail::plan_cache().get(a.rows(), a.cols(), dir);
    auto* buf = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(p, buf, buf);
    if (dir == Direction::inverse) {
        const double s = 1.0 / static_cast<double>(a.size());
        for (auto& v : a.flat()) v *= s;
    }
}

/// Moves the zero-frequency sample from (0,0) to (rows/2, cols/2).
template <typename T>
void fftshift(Array2D<T>& a) {
    Array2D<T> out(a.rows(), a.cols());
    const int sr = a.rows() / 2, sc = a.cols() / 2;
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) out((r + sr) % a.rows(), (c + sc) % a.cols()) = a(r, c);
    a = std::move(out);
}

/// Inverse of fftshift (they differ for odd sizes).
template <typename T>
void ifftshift(Array2D<T>& a) {
    Array2D<T> out(a.rows(), a.cols());
    const int sr = a.rows() / 2, sc = a.cols() / 2;
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) out(r, c) = a((r + sr) % a.rows(), (c + sc) % a.cols());
    a = std::move(out);
}

/// Signed DFT frequency index of bin k for an n-point transform.
constexpr int frequency_index(int k, int n) noexcept { return k <= (n - 1) / 2 ? k : k - n; }

}  // namespace ghostrec::fft
