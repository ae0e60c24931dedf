#pragma once

// Independent dense reference implementations. Nothing here calls the
// spectral machinery in the library; they are built from textbook formulas.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd random_points(int n, int d, std::mt19937_64& rng, double extent = 1.0) {
    std::uniform_real_distribution<double> u(0.0, extent);
    MatrixXd p(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) p(i, j) = u(rng);
    return p;
}

// Uniform draw within each of n equal strata of [0, extent] (d = 1), or iid
// uniform (d > 1). Stratifying keeps the 1-d mesh ratio bounded.
inline MatrixXd jittered_points(int n, int d, std::mt19937_64& rng, double extent = 1.0) {
    if (d != 1) return random_points(n, d, rng, extent);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    MatrixXd p(n, 1);
    for (int i = 0; i < n; ++i) p(i, 0) = extent * (i + u(rng)) / n;
    return p;
}

inline MatrixXd grid_points(int per_side, int d, double extent = 1.0) {
    int n = 1;
    for (int j = 0; j < d; ++j) n *= per_side;
    MatrixXd p(n, d);
    for (int i = 0; i < n; ++i) {
        int r = i;
        for (int j = 0; j < d; ++j) {
            p(i, j) = extent * (r % per_side + 0.5) / per_side;
            r /= per_side;
        }
    }
    return p;
}

inline VectorXd normal_vector(int n, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> g(0.0, sd);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

// Kernel written out for the two cases the tests use (m = 2).
inline double kernel_m2(double r, int d) {
    if (r <= 0) return 0.0;
    if (d == 1) return r * r * r / 12.0;
    return r * r * std::log(r) / (8.0 * std::numbers::pi);
}

inline MatrixXd linear_polys(const MatrixXd& p) {
    MatrixXd T(p.rows(), p.cols() + 1);
    T.col(0).setOnes();
    T.rightCols(p.cols()) = p;
    return T;
}

struct Interpolant {
    VectorXd delta;
    VectorXd alpha;
    double energy = 0.0;
};

// Natural thin plate interpolant through (p_i, f_i) from the bordered system
// [E T; T^T 0][delta; alpha] = [f; 0]; its bending energy is delta^T E delta.
inline Interpolant bordered_interpolant(const MatrixXd& p, const VectorXd& f) {
    const int n = static_cast<int>(p.rows());
    const int d = static_cast<int>(p.cols());
    MatrixXd E(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) E(i, j) = kernel_m2((p.row(i) - p.row(j)).norm(), d);
    MatrixXd T = linear_polys(p);
    const int M = static_cast<int>(T.cols());
    MatrixXd A = MatrixXd::Zero(n + M, n + M);
    A.topLeftCorner(n, n) = E;
    A.topRightCorner(n, M) = T;
    A.bottomLeftCorner(M, n) = T.transpose();
    VectorXd rhs = VectorXd::Zero(n + M);
    rhs.head(n) = f;
    VectorXd sol = A.fullPivLu().solve(rhs);
    Interpolant out;
    out.delta = sol.head(n);
    out.alpha = sol.tail(M);
    out.energy = out.delta.dot(E * out.delta);
    return out;
}

// Exact integral of s''(t)^2 for the natural cubic interpolant in d = 1.
// s''(t) = sum_i delta_i |t - t_i| / 2 is piecewise linear and vanishes
// outside the data range.
inline double cubic_bending_energy(const VectorXd& t, const VectorXd& f) {
    MatrixXd p = t;
    Interpolant s = bordered_interpolant(p, f);
    std::vector<double> knots(t.data(), t.data() + t.size());
    std::sort(knots.begin(), knots.end());
    auto s2 = [&](double u) {
        double v = 0.0;
        for (int i = 0; i < t.size(); ++i) v += s.delta[i] * std::abs(u - t[i]) / 2.0;
        return v;
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double a = s2(knots[i]), b = s2(knots[i + 1]), h = knots[i + 1] - knots[i];
        total += h * (a * a + a * b + b * b) / 3.0;
    }
    return total;
}

inline MatrixXd dense_smoother(const MatrixXd& Gamma, double lambda) {
    const int n = static_cast<int>(Gamma.rows());
    MatrixXd A = MatrixXd::Identity(n, n) + n * lambda * Gamma;
    return A.fullPivLu().solve(MatrixXd::Identity(n, n));
}

struct JointSolution {
    VectorXd beta;
    VectorXd f;
};

// Stacked normal equations of min ||y - X b - f||^2 + n lambda f^T Gamma f:
// [X^T X, X^T; X, I + n lambda Gamma] [b; f] = [X^T y; y].
inline JointSolution stacked_partial_spline(const VectorXd& y, const MatrixXd& X, const MatrixXd& Gamma,
                                            double lambda) {
    const int n = static_cast<int>(y.size());
    const int p = static_cast<int>(X.cols());
    MatrixXd A(p + n, p + n);
    A.topLeftCorner(p, p) = X.transpose() * X;
    A.topRightCorner(p, n) = X.transpose();
    A.bottomLeftCorner(n, p) = X;
    A.bottomRightCorner(n, n) = MatrixXd::Identity(n, n) + n * lambda * Gamma;
    VectorXd rhs(p + n);
    rhs.head(p) = X.transpose() * y;
    rhs.tail(n) = y;
    VectorXd sol = A.fullPivLu().solve(rhs);
    return {sol.head(p), sol.tail(n)};
}

// Same problem written over basis coefficients: f = B c with penalty
// lambda c^T P c.
inline JointSolution stacked_basis_fit(const VectorXd& y, const MatrixXd& X, const MatrixXd& B,
                                       const MatrixXd& P, double lambda) {
    const int p = static_cast<int>(X.cols());
    const int k = static_cast<int>(B.cols());
    MatrixXd D(y.size(), p + k);
    D << X, B;
    MatrixXd H = D.transpose() * D;
    H.bottomRightCorner(k, k) += lambda * P;
    VectorXd sol = H.fullPivLu().solve(D.transpose() * y);
    return {sol.head(p), B * sol.tail(k)};
}

// Penalty matrix from the bordered system alone: with delta = D f for the
// top-left block D of its inverse, f^T D f = delta^T E delta is the bending
// energy, so Gamma = D.
inline MatrixXd bordered_gamma(const MatrixXd& p) {
    const int n = static_cast<int>(p.rows());
    const int d = static_cast<int>(p.cols());
    MatrixXd T = linear_polys(p);
    const int M = static_cast<int>(T.cols());
    MatrixXd A = MatrixXd::Zero(n + M, n + M);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = kernel_m2((p.row(i) - p.row(j)).norm(), d);
    A.topRightCorner(n, M) = T;
    A.bottomLeftCorner(M, n) = T.transpose();
    MatrixXd inv = A.fullPivLu().inverse();
    MatrixXd G = inv.topLeftCorner(n, n);
    return 0.5 * (G + G.transpose());
}

enum class Glm { poisson, binomial, exponential };

// Fisher scoring with the canonical textbook formulas and step halving on a
// deviance increase, no penalty: Poisson log link, binomial counts out of
// size with logit link, exponential with log link (unit working weights).
inline VectorXd textbook_irls(Glm fam, const VectorXd& y, const MatrixXd& D, int size = 10) {
    const Eigen::Index n = y.size();
    auto mean = [&](double eta) { return fam == Glm::binomial ? size / (1.0 + std::exp(-eta)) : std::exp(eta); };
    auto deviance = [&](const VectorXd& eta) {
        double dev = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = mean(eta[i]), yi = y[i];
            switch (fam) {
                case Glm::poisson: dev += 2.0 * ((yi > 0 ? yi * std::log(yi / mu) : 0.0) - (yi - mu)); break;
                case Glm::binomial:
                    dev += 2.0 * ((yi > 0 ? yi * std::log(yi / mu) : 0.0) +
                                  (yi < size ? (size - yi) * std::log((size - yi) / (size - mu)) : 0.0));
                    break;
                case Glm::exponential: dev += 2.0 * ((yi - mu) / mu - std::log(yi / mu)); break;
            }
        }
        return dev;
    };
    VectorXd mu(n), eta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (fam) {
            case Glm::poisson: mu[i] = y[i] + 0.1; eta[i] = std::log(mu[i]); break;
            case Glm::binomial:
                mu[i] = size * (y[i] + 0.5) / (size + 1.0);
                eta[i] = std::log(mu[i] / (size - mu[i]));
                break;
            case Glm::exponential: mu[i] = y[i]; eta[i] = std::log(mu[i]); break;
        }
    }
    VectorXd beta = VectorXd::Zero(D.cols());
    bool started = false;
    double dev_old = 0.0;
    for (int it = 0; it < 1000; ++it) {
        VectorXd w(n), z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double gprime = 0.0, var = 0.0;
            switch (fam) {
                case Glm::poisson: gprime = 1.0 / mu[i]; var = mu[i]; break;
                case Glm::binomial:
                    gprime = size / (mu[i] * (size - mu[i]));
                    var = mu[i] * (size - mu[i]) / size;
                    break;
                case Glm::exponential: gprime = 1.0 / mu[i]; var = mu[i] * mu[i]; break;
            }
            w[i] = 1.0 / (gprime * gprime * var);
            z[i] = eta[i] + (y[i] - mu[i]) * gprime;
        }
        MatrixXd Dw = w.cwiseSqrt().asDiagonal() * D;
        VectorXd next = Dw.colPivHouseholderQr().solve(w.cwiseSqrt().cwiseProduct(z));
        const double full_step = (D * next - eta).lpNorm<Eigen::Infinity>();
        VectorXd eta_next = D * next;
        double dev = deviance(eta_next);
        for (int h = 0; started && h < 30 && dev > dev_old; ++h) {
            next = 0.5 * (beta + next);
            eta_next = D * next;
            dev = deviance(eta_next);
        }
        beta = next;
        eta = eta_next;
        dev_old = dev;
        started = true;
        for (Eigen::Index i = 0; i < n; ++i) mu[i] = mean(eta[i]);
        if (full_step < 1e-12 * (1.0 + eta.lpNorm<Eigen::Infinity>())) break;
    }
    return beta;
}

inline double rel_err(const VectorXd& a, const VectorXd& b) {
    double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
