// Independent reference solutions used by the unit and acceptance tests.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "ghostrec/measurement.hpp"

namespace ghostrec::testing {

/// min 1/2||y - B b||^2 + tau ||b||_1 subject to b >= 0, by enumerating every
/// support S and keeping the one whose stationary point is positive on S and
/// satisfies c_i <= tau off S. Only for small column counts.
inline std::optional<Eigen::VectorXd> brute_force_nonneg_lasso(const Eigen::MatrixXd& B, const Eigen::VectorXd& y,
                                                               double tau) {
    const int n = static_cast<int>(B.cols());
    const int m = static_cast<int>(B.rows());
    std::optional<Eigen::VectorXd> best;
    double best_obj = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> S;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) S.push_back(i);
        if (static_cast<int>(S.size()) > m) continue;
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        if (!S.empty()) {
            Eigen::MatrixXd BS(m, S.size());
            for (std::size_t k = 0; k < S.size(); ++k) BS.col(static_cast<Eigen::Index>(k)) = B.col(S[k]);
            const Eigen::MatrixXd G = BS.transpose() * BS;
            const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
            if (lu.rank() < static_cast<Eigen::Index>(S.size())) continue;
            const Eigen::VectorXd bs = lu.solve(BS.transpose() * y - tau * Eigen::VectorXd::Ones(S.size()));
            if ((bs.array() <= 0.0).any()) continue;
            for (std::size_t k = 0; k < S.size(); ++k) b(S[k]) = bs(static_cast<Eigen::Index>(k));
        }
        const Eigen::VectorXd c = B.transpose() * (y - B * b);
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            if (b(i) == 0.0 && c(i) > tau * (1.0 + 1e-10) + 1e-12) ok = false;
        if (!ok) continue;
        const double obj = 0.5 * (y - B * b).squaredNorm() + tau * b.sum();
        if (!best || obj < best_obj) best = b, best_obj = obj;
    }
    return best;
}

/// Cyclic coordinate descent for the signed lasso, run to a tight fixed point.
inline Eigen::VectorXd coordinate_descent_lasso(const Eigen::MatrixXd& B, const Eigen::VectorXd& y, double tau,
                                                int sweeps = 20000) {
    const Eigen::Index n = B.cols();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = y;
    const Eigen::VectorXd sq = B.colwise().squaredNorm();
    for (int s = 0; s < sweeps; ++s) {
        double change = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double old = b(j);
            const double rho = B.col(j).dot(r) + old * sq(j);
            const double nb = std::copysign(std::max(std::abs(rho) - tau, 0.0), rho) / sq(j);
            if (nb != old) {
                r -= B.col(j) * (nb - old);
                change = std::max(change, std::abs(nb - old));
                b(j) = nb;
            }
        }
        if (change < 1e-15) break;
    }
    return b;
}

struct SmallInstance {
    SensingMatrix A;
    MeasurementVector y;
    double tau = 0.0;  // absolute
};

/// 8 x 16 Gaussian matrix with unit-norm columns, a 3-sparse nonnegative
/// signal and slight measurement noise; tau is 0.1 ||A^T y||_inf.
inline SmallInstance random_small_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    SmallInstance inst;
    inst.A.grid = Grid(4, 4, 1e-4);
    inst.A.data = RowMatrix(8, 16);
    for (Eigen::Index i = 0; i < inst.A.data.size(); ++i) inst.A.data.data()[i] = n(rng);
    for (Eigen::Index j = 0; j < 16; ++j) inst.A.data.col(j).normalize();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(16);
    std::vector<int> idx(16);
    for (int i = 0; i < 16; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int k = 0; k < 3; ++k) x(idx[k]) = u(rng);
    Eigen::VectorXd y = inst.A.data * x;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 0.01 * n(rng);
    inst.y.values.assign(y.data(), y.data() + y.size());
    inst.tau = 0.1 * (inst.A.data.transpose() * y).lpNorm<Eigen::Infinity>();
    return inst;
}

}  // namespace ghostrec::testing
