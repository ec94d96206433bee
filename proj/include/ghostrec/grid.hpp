#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "ghostrec/error.hpp"

namespace ghostrec {

using Complex = std::complex<double>;

/// Uniform square-pixel sampling of a transverse plane.
///
/// Pixel (row, col) sits at x = (col - nx/2) * pitch, y = (row - ny/2) * pitch,
/// so the optical axis falls on pixel (ny/2, nx/2). This is the layout the
/// FFT-based propagators assume after an fftshift.
struct Grid {
    int nx = 0;
    int ny = 0;
    double pitch = 0.0;  // meters

    Grid() = default;
    Grid(int nx_, int ny_, double pitch_) : nx(nx_), ny(ny_), pitch(pitch_) { validate(); }

    void validate() const {
        if (nx < 2 || ny < 2) throw InvalidArgument("grid needs at least 2x2 pixels");
        if (!(pitch > 0.0) || !std::isfinite(pitch)) throw InvalidArgument("grid pitch must be > 0");
    }

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(nx) * ny; }
    [[nodiscard]] double extent_x() const noexcept { return nx * pitch; }
    [[nodiscard]] double extent_y() const noexcept { return ny * pitch; }
    [[nodiscard]] double x(int col) const noexcept { return (col - nx / 2) * pitch; }
    [[nodiscard]] double y(int row) const noexcept { return (row - ny / 2) * pitch; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Row-major 2-D array; row 0 is the top of the image.
template <typename T>
class Array2D {
public:
    Array2D() = default;
    Array2D(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw InvalidArgument("negative array dimension");
    }
    Array2D(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(rows) * cols)
            throw DimensionMismatch("array data size does not match rows*cols");
    }

    [[nodiscard]] int rows() const noexcept { return rows_; }
    [[nodiscard]] int cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    T& operator()(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    [[nodiscard]] std::span<T> flat() noexcept { return data_; }
    [[nodiscard]] std::span<const T> flat() const noexcept { return data_; }
    [[nodiscard]] T* data() noexcept { return data_.data(); }
    [[nodiscard]] const T* data() const noexcept { return data_.data(); }
    [[nodiscard]] const std::vector<T>& vector() const noexcept { return data_; }

    [[nodiscard]] bool same_shape(const Array2D& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Array2D&, const Array2D&) = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Image = Array2D<double>;
using ComplexImage = Array2D<Complex>;

/// Copy of the `rows x cols` window whose top-left corner is (r0, c0).
template <typename T>
Array2D<T> crop(const Array2D<T>& a, int r0, int c0, int rows, int cols) {
    if (r0 < 0 || c0 < 0 || rows < 0 || cols < 0 || r0 + rows > a.rows() || c0 + cols > a.cols())
        throw DimensionMismatch("crop window outside array");
    Array2D<T> out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out(r, c) = a(r0 + r, c0 + c);
    return out;
}

/// Central `rows x cols` window, aligned so the optical-axis pixel keeps its
/// (rows/2, cols/2) position.
template <typename T>
Array2D<T> crop_center(const Array2D<T>& a, int rows, int cols) {
    return crop(a, a.rows() / 2 - rows / 2, a.cols() / 2 - cols / 2, rows, cols);
}

}  // namespace ghostrec
