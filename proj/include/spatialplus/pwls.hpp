#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace spatialplus {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Penalized weighted least squares
//
//   min ||sqrt(W) (z - Xu a - Bp c)||^2 + lambda c^T diag(pen) c
//
// with an unpenalized block Xu (possibly rank deficient) and a penalized
// block Bp with strictly positive penalty weights. The unpenalized block is
// profiled out and the penalized part is solved as a ridge problem through
// the SVD of sqrt(W)(I - P_u) Bp diag(pen)^{-1/2}, so every lambda on a grid
// costs O(k) once the factorization is in place.
class PenalizedWLS {
public:
    // The first `identified` columns of Xu must be estimable: removing them has
    // to drop the rank by exactly that many, otherwise SingularDesign.
    PenalizedWLS(const MatrixXd& Xu, const MatrixXd& Bp, const VectorXd& pen, const VectorXd& w,
                 int identified = 0);

    void set_response(const VectorXd& z);

    int n() const { return static_cast<int>(sw_.size()); }
    int unpenalized_rank() const { return ru_; }
    int penalized_cols() const { return static_cast<int>(pen_.size()); }

    double edf(double lambda) const;
    // Weighted residual sum of squares at lambda.
    double rss(double lambda) const;
    std::optional<double> gcv(double lambda) const;
    double select_lambda(const std::vector<double>& grid) const;

    struct Solution {
        VectorXd a;    // unpenalized coefficients (minimum norm if Xu is rank deficient)
        VectorXd c;    // penalized coefficients
        VectorXd eta;  // Xu a + Bp c
        double edf = 0.0;
        double rss = 0.0;
        double penalty = 0.0;  // c^T diag(pen) c
    };
    Solution solve(double lambda) const;

    // Linear maps z -> a and z -> c at a given lambda.
    struct Operators {
        MatrixXd A;
        MatrixXd C;
    };
    Operators operators(double lambda) const;

private:
    MatrixXd Xu_, Bp_;
    VectorXd pen_, sw_;
    // Unpenalized block: sqrt(W) Xu = Uu diag(su) Vu^T restricted to its rank.
    MatrixXd Uu_, Vu_;
    VectorXd su_;
    int ru_ = 0;
    // Profiled penalized block.
    MatrixXd Ug_, Vg_;
    VectorXd sg_;
    // Response dependent pieces.
    VectorXd zt_, zu_, g_;
    double rperp2_ = 0.0;
    bool has_response_ = false;

    VectorXd unpenalized_coef(const VectorXd& target) const;
};

}  // namespace spatialplus
