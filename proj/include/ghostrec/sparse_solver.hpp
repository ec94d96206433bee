#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ghostrec/basis.hpp"
#include "ghostrec/error.hpp"
#include "ghostrec/measurement.hpp"

namespace ghostrec {

enum class StepRule { backtracking, barzilai_borwein_safeguarded };
enum class TauMode { absolute, relative_to_ATy_inf };
enum class Algorithm { proximal_gradient, active_set };

inline std::string to_string(StepRule r) { return r == StepRule::backtracking ? "backtracking" : "bb"; }
inline std::string to_string(TauMode m) { return m == TauMode::absolute ? "absolute" : "relative"; }
inline std::string to_string(Algorithm a) { return a == Algorithm::proximal_gradient ? "proximal_gradient" : "active_set"; }

struct SolverOptions {
    double tau = 0.1;
    TauMode tau_mode = TauMode::relative_to_ATy_inf;
    int max_iters = 2000;
    double tol_rel_objective = 1e-5;
    std::optional<bool> nonneg_project;  // unset: true for cartesian, false for dct2
    StepRule step_rule = StepRule::backtracking;
    Algorithm algorithm = Algorithm::proximal_gradient;
    bool normalize_columns = true;

    void validate() const {
        if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be >= 0");
        if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
        if (!(tol_rel_objective > 0.0)) throw InvalidArgument("tolerance must be > 0");
    }

    [[nodiscard]] bool nonneg_for(BasisKind k) const { return nonneg_project.value_or(k == BasisKind::cartesian); }
};

struct KktReport {
    bool ok = false;
    double max_violation = 0.0;
    double epsilon = 0.0;
};

struct ReconstructionResult {
    Image image;         // |T|^2 estimate on the camera grid, negative values clamped to 0
    Image coefficients;  // alpha in the solver's (column-normalized) parametrization
    std::vector<double> objective_trace;
    int iterations_used = 0;
    bool converged = false;
    double tau_effective = 0.0;
    bool nonneg = false;
    KktReport kkt;
};

// ---------------------------------------------------------------------------

inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
    if (!(t >= 0.0)) throw InvalidArgument("soft-threshold level must be >= 0");
    return v.unaryExpr([t](double x) { return std::copysign(std::max(std::abs(x) - t, 0.0), x); });
}

inline Image soft_threshold(const Image& v, double t) {
    const Eigen::VectorXd out = soft_threshold(Basis::as_vector(v), t);
    return Image(v.rows(), v.cols(), std::vector<double>(out.data(), out.data() + out.size()));
}

/// 1/2 ||y - A Psi alpha||^2 + tau ||alpha||_1.
inline double objective(const SensingMatrix& A, const MeasurementVector& y, const Basis& basis, const Image& alpha,
                        double tau) {
    if (A.rows() != y.size()) throw DimensionMismatch("A rows and y length differ");
    if (A.cols() != basis.size()) throw DimensionMismatch("A columns and basis size differ");
    const Eigen::VectorXd x = Basis::as_vector(basis.inverse(alpha));
    const Eigen::Map<const Eigen::VectorXd> yv(y.values.data(), y.size());
    return 0.5 * (yv - A.data * x).squaredNorm() + tau * Basis::as_vector(alpha).lpNorm<1>();
}

/// Optimality check for min 1/2||y - B b||^2 + tau||b||_1 (b >= 0 when
/// nonneg). With c = B^T (y - B b): c_i = tau sign(b_i) on the support and
/// |c_i| <= tau (c_i <= tau under nonnegativity) elsewhere, within epsilon.
inline KktReport kkt_certificate(const RowMatrix& B, const Eigen::VectorXd& y, const Eigen::VectorXd& b, double tau,
                                 bool nonneg, double epsilon) {
    const Eigen::VectorXd c = B.transpose() * (y - B * b);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        double v;
        if (b(i) != 0.0)
            v = std::abs(c(i) - tau * (b(i) > 0.0 ? 1.0 : -1.0));
        else
            v = std::max(0.0, (nonneg ? c(i) : std::abs(c(i))) - tau);
        worst = std::max(worst, v);
    }
    return {worst <= epsilon, worst, epsilon};
}

namespace detail {

/// Thin QR of a growing/shrinking column set, B_S = Q R.
class IncrementalQr {
public:
    explicit IncrementalQr(Eigen::Index rows) : rows_(rows) {}

    [[nodiscard]] int size() const noexcept { return static_cast<int>(q_.size()); }

    /// Appends column b; rejects it (returns false) when numerically dependent.
    bool add(const Eigen::VectorXd& b) {
        const int m = size();
        Eigen::VectorXd v = b;
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(m + 1);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < m; ++i) {
                const double c = q_[i].dot(v);
                v -= c * q_[i];
                coef(i) += c;
            }
        const double nb = b.norm(), nv = v.norm();
        if (!(nv > 1e-10 * nb)) return false;
        coef(m) = nv;
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m + 1, m + 1);
        r.topLeftCorner(m, m) = r_;
        r.col(m) = coef;
        r_ = std::move(r);
        q_.push_back(v / nv);
        return true;
    }

    /// Removes column p and restores triangularity with Givens rotations.
    void remove(int p) {
        const int m = size();
        Eigen::MatrixXd r(m, m - 1);
        for (int j = 0, k = 0; j < m; ++j)
            if (j != p) r.col(k++) = r_.col(j);
        for (int i = p; i < m - 1; ++i) {
            const double a = r(i, i), b = r(i + 1, i);
            const double h = std::hypot(a, b);
            if (h == 0.0) continue;
            const double c = a / h, s = b / h;
            for (int j = i; j < m - 1; ++j) {
                const double ri = r(i, j), rk = r(i + 1, j);
                r(i, j) = c * ri + s * rk;
                r(i + 1, j) = -s * ri + c * rk;
            }
            r(i + 1, i) = 0.0;
            const Eigen::VectorXd qi = q_[i];
            q_[i] = c * qi + s * q_[i + 1];
            q_[i + 1] = -s * qi + c * q_[i + 1];
        }
        r_ = r.topRows(m - 1);
        q_.pop_back();
    }

    /// argmin_z 1/2||y - B_S z||^2 + tau theta^T z.
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& y, const Eigen::VectorXd& theta, double tau) const {
        const int m = size();
        Eigen::VectorXd u(m);
        for (int i = 0; i < m; ++i) u(i) = q_[i].dot(y);
        const auto R = r_.triangularView<Eigen::Upper>();
        const Eigen::VectorXd w = R.transpose().solve(theta);
        return R.solve(u - tau * w);
    }

private:
    Eigen::Index rows_;
    std::vector<Eigen::VectorXd> q_;
    Eigen::MatrixXd r_;
};

struct Problem {
    RowMatrix B;         // normalized A times Psi
    Eigen::VectorXd y;   // scaled to unit norm
    Eigen::VectorXd d;   // column norms of A (ones when not normalizing)
    double y_scale = 1.0;
};

inline double half_sq(const Eigen::VectorXd& r) { return 0.5 * r.squaredNorm(); }

struct SolveState {
    Eigen::VectorXd b;
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
};

inline SolveState solve_proximal_gradient(const Problem& P, double tau, bool nonneg, const Basis& basis,
                                          const SolverOptions& opts) {
    const Eigen::Index n = P.B.cols();
    SolveState st;
    st.b = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = P.y;
    double F = half_sq(r);
    st.trace.push_back(F);

    // Lipschitz estimate of B^T B by power iteration.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double L = 1.0;
    for (int i = 0; i < 30; ++i) {
        const Eigen::VectorXd w = P.B.transpose() * (P.B * v);
        L = w.norm();
        if (!(L > 0.0)) break;
        v = w / L;
    }
    double eta = L > 0.0 ? 1.0 / L : 1.0;

    auto prox = [&](const Eigen::VectorXd& u, double step) {
        Eigen::VectorXd out = soft_threshold(u, step * tau);
        if (nonneg) out = out.cwiseMax(0.0);
        return out;
    };
    const bool project_image = nonneg && basis.kind() != BasisKind::cartesian;
    const bool simple_nonneg = nonneg && !project_image;

    Eigen::VectorXd grad = -(P.B.transpose() * r);
    Eigen::VectorXd prev_b, prev_grad;
    int small_steps = 0;
    for (int it = 0; it < opts.max_iters; ++it) {
        double step = eta;
        if (opts.step_rule == StepRule::barzilai_borwein_safeguarded && prev_b.size() == n) {
            const Eigen::VectorXd s = st.b - prev_b, g = grad - prev_grad;
            const double sg = s.dot(g);
            if (sg > 0.0) step = std::clamp(s.squaredNorm() / sg, 1e-3 / L, 1e3 / L);
        } else {
            step = std::min(eta * 2.0, 1e3 / L);
        }
        Eigen::VectorXd nb, nr;
        double Fn = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            nb = simple_nonneg ? prox(st.b - step * grad, step) : soft_threshold(st.b - step * grad, step * tau);
            nr = P.y - P.B * nb;
            const Eigen::VectorXd dlt = nb - st.b;
            const double f_new = half_sq(nr), f_old = half_sq(r);
            if (f_new <= f_old + grad.dot(dlt) + dlt.squaredNorm() / (2.0 * step) + 1e-15 * f_old) {
                Fn = f_new + tau * nb.lpNorm<1>();
                if (Fn <= F + 1e-12) break;
            }
            step *= 0.5;
        }
        if (project_image) {
            // Heuristic image-domain projection, kept only when it does not
            // raise the objective.
            Eigen::VectorXd x = basis.inverse(nb).cwiseQuotient(P.d).cwiseMax(0.0);
            const Eigen::VectorXd pb = basis.forward(Eigen::VectorXd(x.cwiseProduct(P.d)));
            const Eigen::VectorXd pr = P.y - P.B * pb;
            const double Fp = half_sq(pr) + tau * pb.lpNorm<1>();
            if (Fp <= Fn) nb = pb, nr = pr, Fn = Fp;
        }
        if (!std::isfinite(Fn)) throw NumericalError("non-finite objective at iteration " + std::to_string(it));
        if (Fn > F + 1e-12) break;  // no descent possible at this step size
        prev_b = st.b;
        prev_grad = grad;
        st.b = std::move(nb);
        r = std::move(nr);
        grad = -(P.B.transpose() * r);
        eta = step;
        const double rel = (F - Fn) / std::max(F, std::numeric_limits<double>::min());
        F = Fn;
        st.trace.push_back(F);
        st.iterations = it + 1;
        small_steps = rel < opts.tol_rel_objective ? small_steps + 1 : 0;
        if (small_steps >= 3) {
            st.converged = true;
            break;
        }
    }
    return st;
}

/// Feature-sign / Lawson-Hanson style active-set method: exact minimization
/// over sign-consistent faces with a discrete line search between them.
inline SolveState solve_active_set(const Problem& P, double tau, bool nonneg, const SolverOptions& opts,
                                   double activation_tol) {
    const Eigen::Index n = P.B.cols();
    SolveState st;
    st.b = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = P.y;
    double F = half_sq(r);
    st.trace.push_back(F);

    IncrementalQr qr(P.B.rows());
    std::vector<Eigen::Index> S;
    std::vector<char> excluded(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> excluded_list;
    bool failed = false;

    auto residual_of = [&]() {
        Eigen::VectorXd res = P.y;
        for (Eigen::Index j : S) res -= st.b(j) * P.B.col(j);
        return res;
    };
    auto drop = [&](std::size_t pos) {
        qr.remove(static_cast<int>(pos));
        S.erase(S.begin() + static_cast<std::ptrdiff_t>(pos));
    };

    while (st.iterations < opts.max_iters && !failed) {
        const Eigen::VectorXd c = P.B.transpose() * r;
        Eigen::Index pick = -1;
        double best = activation_tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (excluded[j] || st.b(j) != 0.0) continue;
            const double viol = (nonneg ? c(j) : std::abs(c(j))) - tau;
            if (viol > best) best = viol, pick = j;
        }
        if (pick < 0) {
            st.converged = excluded_list.empty();
            break;
        }
        const double sign_new = nonneg ? 1.0 : (c(pick) > 0.0 ? 1.0 : -1.0);
        if (!qr.add(P.B.col(pick))) {
            excluded[pick] = 1;
            excluded_list.push_back(pick);
            continue;
        }
        S.push_back(pick);

        bool first = true, stepped = false;
        while (st.iterations < opts.max_iters) {
            ++st.iterations;
            const int m = static_cast<int>(S.size());
            Eigen::VectorXd theta(m), cur(m);
            for (int k = 0; k < m; ++k) {
                cur(k) = st.b(S[k]);
                theta(k) = cur(k) > 0.0 ? 1.0 : (cur(k) < 0.0 ? -1.0 : sign_new);
            }
            const Eigen::VectorXd z = qr.solve(P.y, theta, tau);
            if (!z.allFinite()) {
                failed = true;
                break;
            }
            if (first) {
                first = false;
                if (z(m - 1) * sign_new <= 0.0) {
                    drop(static_cast<std::size_t>(m - 1));
                    excluded[pick] = 1;
                    excluded_list.push_back(pick);
                    --st.iterations;
                    break;
                }
            }

            // Candidate step lengths: the face minimizer and every sign change.
            std::vector<double> cand{1.0};
            double t_first = 1.0;
            for (int k = 0; k < m; ++k)
                if (cur(k) != 0.0 && cur(k) * z(k) <= 0.0) {
                    const double t = cur(k) / (cur(k) - z(k));
                    cand.push_back(t);
                    t_first = std::min(t_first, t);
                }
            if (nonneg) cand = {t_first};

            Eigen::VectorXd rz = P.y;
            for (int k = 0; k < m; ++k) rz -= z(k) * P.B.col(S[k]);
            const Eigen::VectorXd dr = rz - r;
            const double a0 = r.squaredNorm(), a1 = r.dot(dr), a2 = dr.squaredNorm();
            double t_best = cand[0], F_best = std::numeric_limits<double>::infinity();
            for (double t : cand) {
                const Eigen::VectorXd bt = cur + t * (z - cur);
                const double Ft = 0.5 * (a0 + 2.0 * t * a1 + t * t * a2) + tau * bt.lpNorm<1>();
                if (Ft < F_best) F_best = Ft, t_best = t;
            }

            Eigen::VectorXd nb = cur + t_best * (z - cur);
            for (int k = 0; k < m; ++k) {
                const bool crossed_here = cur(k) != 0.0 && cur(k) * z(k) <= 0.0 &&
                                          cur(k) / (cur(k) - z(k)) == t_best;
                if (crossed_here || (nonneg && nb(k) <= 0.0)) nb(k) = 0.0;
            }
            const Eigen::VectorXd old_b = st.b;
            for (int k = 0; k < m; ++k) st.b(S[k]) = nb(k);
            const Eigen::VectorXd new_r = residual_of();
            const double F_new = half_sq(new_r) + tau * st.b.lpNorm<1>();
            if (!std::isfinite(F_new)) throw NumericalError("non-finite objective in active-set step");
            if (F_new > F + 1e-12 * std::max(1.0, F)) {
                st.b = old_b;
                failed = true;
                break;
            }
            F = F_new;
            r = new_r;
            stepped = true;
            st.trace.push_back(F);
            for (int k = m - 1; k >= 0; --k)
                if (st.b(S[k]) == 0.0) drop(static_cast<std::size_t>(k));
            if (t_best == 1.0 || S.empty()) break;
        }
        if (!excluded_list.empty() && stepped) {
            for (Eigen::Index j : excluded_list) excluded[j] = 0;
            excluded_list.clear();
        }
    }
    return st;
}

}  // namespace detail

/// True when no step raises the objective by more than `slack` times ||y||^2
/// (the trace starts at 1/2 ||y||^2).
inline bool objective_trace_monotone(const std::vector<double>& trace, double slack = 1e-12) {
    if (trace.empty()) return true;
    const double scale = 2.0 * trace.front();
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] > trace[i - 1] + slack * scale) return false;
    return true;
}

/// Solves min_alpha 1/2 ||y - A Psi alpha||^2 + tau ||alpha||_1.
///
/// With normalize_columns, A's pixel columns are scaled to unit norm first,
/// so alpha lives in that scaled parametrization and the image is
/// Psi alpha divided by the column norms.
inline ReconstructionResult solve_l1(const SensingMatrix& A, const MeasurementVector& y, const Basis& basis,
                                     const SolverOptions& opts) {
    opts.validate();
    if (A.rows() < 1 || A.cols() < 1) throw InvalidArgument("empty sensing matrix");
    if (A.rows() != y.size()) throw DimensionMismatch("A rows and y length differ");
    if (A.cols() != basis.size()) throw DimensionMismatch("A columns and basis size differ");
    for (double v : y.values)
        if (!std::isfinite(v)) throw NumericalError("non-finite measurement value");

    detail::Problem P;
    P.B = A.data;
    P.d = Eigen::VectorXd::Ones(A.cols());
    if (opts.normalize_columns) {
        for (Eigen::Index j = 0; j < A.data.cols(); ++j) {
            const double nrm = A.data.col(j).norm();
            if (nrm > 0.0) {
                P.d(j) = nrm;
                P.B.col(j) /= nrm;
            }
        }
    }
    basis.forward_rows(P.B);
    const Eigen::Map<const Eigen::VectorXd> yv(y.values.data(), y.size());
    P.y_scale = yv.norm();
    ReconstructionResult res;
    res.nonneg = opts.nonneg_for(basis.kind());

    const double aty_inf = (P.B.transpose() * yv).lpNorm<Eigen::Infinity>();
    res.tau_effective = opts.tau_mode == TauMode::absolute ? opts.tau : opts.tau * aty_inf;
    if (!(P.y_scale > 0.0)) {
        res.coefficients = Image(basis.ny(), basis.nx());
        res.image = Image(basis.ny(), basis.nx());
        res.objective_trace = {0.0};
        res.converged = true;
        res.kkt = {true, 0.0, 0.0};
        return res;
    }
    P.y = yv / P.y_scale;
    const double tau_s = res.tau_effective / P.y_scale;
    const double aty_s = aty_inf / P.y_scale;

    detail::SolveState st =
        opts.algorithm == Algorithm::active_set
            ? detail::solve_active_set(P, tau_s, res.nonneg && basis.kind() == BasisKind::cartesian, opts, 1e-9 * std::max(aty_s, 1e-300))
            : detail::solve_proximal_gradient(P, tau_s, res.nonneg, basis, opts);

    res.kkt = kkt_certificate(P.B, P.y, st.b, tau_s, res.nonneg && basis.kind() == BasisKind::cartesian, 1e-4 * aty_s);
    res.kkt.max_violation *= P.y_scale;
    res.kkt.epsilon *= P.y_scale;

    const double s2 = P.y_scale * P.y_scale;
    for (double v : st.trace) res.objective_trace.push_back(v * s2);
    res.iterations_used = st.iterations;
    res.converged = st.converged;
    const Eigen::VectorXd beta = st.b * P.y_scale;
    res.coefficients = basis.as_image(beta);
    const Eigen::VectorXd x = basis.inverse(beta).cwiseQuotient(P.d).cwiseMax(0.0);
    res.image = basis.as_image(x);
    return res;
}

}  // namespace ghostrec
