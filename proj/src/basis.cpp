#include "spatialplus/basis.hpp"

#include "spatialplus/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

namespace spatialplus {

LocationSet::LocationSet(MatrixXd points) : points_(std::move(points)) {
    const int n = this->n();
    if (n == 0 || d() == 0) throw InvalidInput("LocationSet: empty point set");
    if (!points_.allFinite()) throw InvalidInput("LocationSet: non-finite coordinate");
    if (n == 1) {
        // A single site has no neighbour; all distances are undefined.
        h_min_ = h_max_ = std::numeric_limits<double>::infinity();
        return;
    }
    VectorXd nearest = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double dist = (points_.row(i) - points_.row(j)).norm();
            if (dist == 0.0) {
                throw DuplicatePoints("rows " + std::to_string(i) + " and " + std::to_string(j) +
                                      " coincide");
            }
            nearest[i] = std::min(nearest[i], dist);
            nearest[j] = std::min(nearest[j], dist);
        }
    }
    h_min_ = nearest.minCoeff();
    h_max_ = nearest.maxCoeff();
}

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

int nullspace_dim(int m, int d) { return static_cast<int>(std::lround(binomial(m + d - 1, d))); }

double tps_kernel(double r, int m, int d) {
    if (r <= 0.0) return 0.0;
    const double pi = std::numbers::pi;
    const int p = 2 * m - d;
    if (d % 2 == 0) {
        const double sign = ((m + 1 + d / 2) % 2 == 0) ? 1.0 : -1.0;
        const double c = sign / (std::pow(2.0, 2 * m - 1) * std::pow(pi, d / 2.0) *
                                 factorial(m - 1) * factorial(m - d / 2));
        return c * std::pow(r, p) * std::log(r);
    }
    const double c = std::tgamma(d / 2.0 - m) /
                     (std::pow(2.0, 2 * m) * std::pow(pi, d / 2.0) * factorial(m - 1));
    return c * std::pow(r, p);
}

std::vector<std::vector<int>> monomial_exponents(int m, int d) {
    std::vector<std::vector<int>> out;
    for (int degree = 0; degree < m; ++degree) {
        // Enumerate compositions of `degree` into d non-negative parts.
        std::vector<int> e(d, 0);
        std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == d - 1) {
                e[pos] = left;
                out.push_back(e);
                return;
            }
            for (int v = left; v >= 0; --v) {
                e[pos] = v;
                rec(pos + 1, left - v);
            }
        };
        rec(0, degree);
    }
    return out;
}

MatrixXd polynomial_matrix(const MatrixXd& points, int m) {
    const auto exps = monomial_exponents(m, static_cast<int>(points.cols()));
    MatrixXd T(points.rows(), static_cast<Eigen::Index>(exps.size()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (std::size_t j = 0; j < exps.size(); ++j) {
            double v = 1.0;
            for (Eigen::Index c = 0; c < points.cols(); ++c) v *= std::pow(points(i, c), exps[j][c]);
            T(i, static_cast<Eigen::Index>(j)) = v;
        }
    }
    return T;
}

MatrixXd radial_matrix(const MatrixXd& points, int m) {
    const Eigen::Index n = points.rows();
    const int d = static_cast<int>(points.cols());
    MatrixXd E = MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            E(i, j) = E(j, i) = tps_kernel((points.row(i) - points.row(j)).norm(), m, d);
        }
    }
    return E;
}

TpsBasis build_basis(const LocationSet& locs, int m) {
    const int n = locs.n();
    const int d = locs.d();
    if (2 * m <= d) throw OrderTooSmall("need m > d/2, got m=" + std::to_string(m) + ", d=" + std::to_string(d));
    const int M = nullspace_dim(m, d);
    if (n < M + 1) {
        throw RankDeficientPolynomialBlock("n=" + std::to_string(n) + " points cannot support M=" +
                                           std::to_string(M) + " polynomial terms plus a penalized part");
    }

    auto core = std::make_shared<TpsBasis::Core>();
    core->locs = locs;
    core->m = m;
    core->M = M;
    core->T = polynomial_matrix(locs.points(), m);
    core->E = radial_matrix(locs.points(), m);

    // The polynomial space of degree < m is affine invariant, so the QR is
    // taken on standardized coordinates for conditioning.
    MatrixXd z = locs.points();
    Eigen::RowVectorXd centre = z.colwise().mean();
    z.rowwise() -= centre;
    double scale = z.cwiseAbs().maxCoeff();
    if (scale > 0) z /= scale;
    MatrixXd Tz = polynomial_matrix(z, m);

    Eigen::ColPivHouseholderQR<MatrixXd> rank_check(Tz);
    rank_check.setThreshold(1e-8);
    if (rank_check.rank() < M) {
        throw RankDeficientPolynomialBlock("polynomial block has rank " + std::to_string(rank_check.rank()) +
                                           " < M=" + std::to_string(M));
    }

    Eigen::HouseholderQR<MatrixXd> qr(Tz);
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
    core->Q1 = Q.leftCols(M);
    MatrixXd Q2 = Q.rightCols(n - M);

    MatrixXd K = Q2.transpose() * core->E * Q2;
    K = 0.5 * (K + K.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(K);
    if (eig.info() != Eigen::Success) throw EigenFailure("eigendecomposition of the penalized block failed");

    // Penalty via an independent Cholesky solve so that the spectral form can be
    // checked against it.
    Eigen::LLT<MatrixXd> llt(K);
    if (llt.info() == Eigen::Success) {
        core->Gamma = Q2 * llt.solve(Q2.transpose());
    } else {
        Eigen::LDLT<MatrixXd> ldlt(K);
        core->Gamma = Q2 * ldlt.solve(Q2.transpose());
    }
    core->Gamma = 0.5 * (core->Gamma + core->Gamma.transpose()).eval();

    const int r = n - M;
    const double top = eig.eigenvalues()[r - 1];
    if (!(top > 0.0)) throw EigenFailure("radial block is not positive definite on the polynomial complement");
    core->lambda_k.resize(r);
    core->Q2V.resize(n, r);
    for (int j = 0; j < r; ++j) {
        // Largest eigenvalue of K first: smoothest direction first.
        double lam = eig.eigenvalues()[r - 1 - j];
        core->lambda_k[j] = std::max(lam, top * 1e-15);
    }
    core->Q2V = Q2 * eig.eigenvectors().rowwise().reverse();

    TpsBasis basis;
    basis.core_ = std::move(core);
    basis.set_rank(n);
    return basis;
}

void TpsBasis::set_rank(int k) {
    const int M = core_->M;
    const int n = core_->locs.n();
    k_ = k;
    columns_.resize(n, k);
    columns_.leftCols(M) = core_->Q1;
    columns_.rightCols(k - M) = core_->Q2V.leftCols(k - M);
    penalty_ = VectorXd::Zero(k);
    for (int j = M; j < k; ++j) penalty_[j] = n / core_->lambda_k[j - M];
}

TpsBasis truncate_basis(const TpsBasis& basis, int k) {
    if (k < basis.nullspace_dim() || k > basis.n()) {
        throw RankOutOfRange("rank " + std::to_string(k) + " outside [" + std::to_string(basis.nullspace_dim()) +
                             ", " + std::to_string(basis.n()) + "]");
    }
    TpsBasis out;
    out.core_ = basis.core_;
    out.set_rank(k);
    return out;
}

}  // namespace spatialplus
