#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

#include "ghostrec/error.hpp"
#include "ghostrec/grid.hpp"

namespace ghostrec {

enum class BasisKind { cartesian, dct2 };

inline std::string to_string(BasisKind k) { return k == BasisKind::cartesian ? "cartesian" : "dct2"; }

/// Orthonormal DCT-II matrix: C(k, i) = s_k cos(pi (2i+1) k / 2n).
inline Eigen::MatrixXd dct_matrix(int n) {
    Eigen::MatrixXd C(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int i = 0; i < n; ++i) C(k, i) = s * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
    }
    return C;
}

/// Representation basis Psi for n_y x n_x images, x = Psi alpha. Coefficient
/// arrays have the image's shape and raster order.
class Basis {
public:
    Basis(BasisKind kind, int nx, int ny) : kind_(kind), nx_(nx), ny_(ny) {
        if (nx < 1 || ny < 1) throw InvalidArgument("basis needs positive side lengths");
        if (kind == BasisKind::dct2) {
            cx_ = dct_matrix(nx);
            cy_ = dct_matrix(ny);
        }
    }

    [[nodiscard]] BasisKind kind() const noexcept { return kind_; }
    [[nodiscard]] int nx() const noexcept { return nx_; }
    [[nodiscard]] int ny() const noexcept { return ny_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(nx_) * ny_; }

    /// alpha = Psi^T x.
    [[nodiscard]] Image forward(const Image& img) const {
        check(img);
        if (kind_ == BasisKind::cartesian) return img;
        return from_matrix(cy_ * to_matrix(img) * cx_.transpose());
    }

    /// x = Psi alpha.
    [[nodiscard]] Image inverse(const Image& coeffs) const {
        check(coeffs);
        if (kind_ == BasisKind::cartesian) return coeffs;
        return from_matrix(cy_.transpose() * to_matrix(coeffs) * cx_);
    }

    /// Psi^T applied to every row of M (each row a raster image).
    void forward_rows(Eigen::Ref<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M) const {
        if (M.cols() != size()) throw DimensionMismatch("row length does not match the basis size");
        if (kind_ == BasisKind::cartesian) return;
        RowMat tmp(ny_, nx_);
        for (Eigen::Index r = 0; r < M.rows(); ++r) {
            Eigen::Map<RowMat> img(M.row(r).data(), ny_, nx_);
            tmp.noalias() = cy_ * img;
            img.noalias() = tmp * cx_.transpose();
        }
    }

    /// Vector forms on raster-ordered data.
    [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& x) const { return as_vector(forward(as_image(x))); }
    [[nodiscard]] Eigen::VectorXd inverse(const Eigen::VectorXd& a) const { return as_vector(inverse(as_image(a))); }

    [[nodiscard]] Image as_image(const Eigen::VectorXd& v) const {
        if (v.size() != size()) throw DimensionMismatch("vector length does not match the basis size");
        return Image(ny_, nx_, std::vector<double>(v.data(), v.data() + v.size()));
    }
    [[nodiscard]] static Eigen::VectorXd as_vector(const Image& img) {
        return Eigen::Map<const Eigen::VectorXd>(img.data(), static_cast<Eigen::Index>(img.size()));
    }

private:
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    void check(const Image& img) const {
        if (img.rows() != ny_ || img.cols() != nx_) throw DimensionMismatch("image shape does not match the basis");
    }
    [[nodiscard]] static RowMat to_matrix(const Image& img) {
        return Eigen::Map<const RowMat>(img.data(), img.rows(), img.cols());
    }
    [[nodiscard]] Image from_matrix(const RowMat& m) const {
        return Image(ny_, nx_, std::vector<double>(m.data(), m.data() + m.size()));
    }

    BasisKind kind_;
    int nx_, ny_;
    Eigen::MatrixXd cx_, cy_;
};

inline Image basis_forward(const Basis& b, const Image& img) { return b.forward(img); }
inline Image basis_inverse(const Basis& b, const Image& coeffs) { return b.inverse(coeffs); }

}  // namespace ghostrec
