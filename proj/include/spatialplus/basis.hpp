#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace spatialplus {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Scattered sample locations. Rows of points() are the t_i.
class LocationSet {
public:
    LocationSet() = default;
    explicit LocationSet(MatrixXd points);

    const MatrixXd& points() const { return points_; }
    int n() const { return static_cast<int>(points_.rows()); }
    int d() const { return static_cast<int>(points_.cols()); }

    double h_min() const { return h_min_; }
    // Largest nearest-neighbour distance; the domain itself is never stored,
    // so the true fill distance is not available.
    double h_max() const { return h_max_; }
    double mesh_ratio() const { return h_max_ / h_min_; }

private:
    MatrixXd points_;
    double h_min_ = 0.0;
    double h_max_ = 0.0;
};

int nullspace_dim(int m, int d);

// Thin plate Green's function eta_{m,d}(r) with the usual normalization, so
// that delta^T E delta is the order-m bending energy of the interpolant.
double tps_kernel(double r, int m, int d);

// Exponent vectors of the monomials of total degree < m, constant first.
std::vector<std::vector<int>> monomial_exponents(int m, int d);
MatrixXd polynomial_matrix(const MatrixXd& points, int m);
MatrixXd radial_matrix(const MatrixXd& points, int m);

class TpsBasis {
public:
    TpsBasis() = default;

    int m() const { return core_->m; }
    int d() const { return core_->locs.d(); }
    int n() const { return core_->locs.n(); }
    int nullspace_dim() const { return core_->M; }
    // Number of columns kept; equals n when untruncated.
    int rank() const { return k_; }
    bool truncated() const { return k_ < n(); }

    const LocationSet& locations() const { return core_->locs; }
    const MatrixXd& E() const { return core_->E; }
    const MatrixXd& T() const { return core_->T; }
    // Full n x n penalty Q2 (Q2^T E Q2)^{-1} Q2^T.
    const MatrixXd& Gamma() const { return core_->Gamma; }

    // n x k orthonormal design. The first M columns span the polynomials,
    // the rest are the smoothest directions of the penalized block.
    const MatrixXd& columns() const { return columns_; }
    // Penalty on the coefficients of columns(): eigenvalues of n*Gamma in that
    // basis, ascending, with exactly M leading zeros.
    const VectorXd& penalty() const { return penalty_; }

    // Eigenvalues of Q2^T E Q2, descending.
    const VectorXd& radial_eigenvalues() const { return core_->lambda_k; }

private:
    struct Core {
        LocationSet locs;
        int m = 0;
        int M = 0;
        MatrixXd E, T, Gamma;
        MatrixXd Q1;
        MatrixXd Q2V;
        VectorXd lambda_k;
    };

    std::shared_ptr<const Core> core_;
    int k_ = 0;
    MatrixXd columns_;
    VectorXd penalty_;

    void set_rank(int k);

    friend TpsBasis build_basis(const LocationSet& locs, int m);
    friend TpsBasis truncate_basis(const TpsBasis& basis, int k);
};

TpsBasis build_basis(const LocationSet& locs, int m);
TpsBasis truncate_basis(const TpsBasis& basis, int k);

}  // namespace spatialplus
