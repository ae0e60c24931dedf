#pragma once

#include "spatialplus/basis.hpp"

#include <vector>

namespace spatialplus {

// S_lambda = Phi diag(1/(1 + lambda mu)) Phi^T, with mu the eigenvalues of
// n*Gamma (or the induced penalty of a truncated basis).
class SmootherOperator {
public:
    SmootherOperator() = default;
    explicit SmootherOperator(TpsBasis basis);

    const TpsBasis& basis() const { return basis_; }
    const MatrixXd& Phi() const { return basis_.columns(); }
    const VectorXd& mu() const { return basis_.penalty(); }
    int n() const { return basis_.n(); }
    int rank() const { return basis_.rank(); }
    int nullspace_dim() const { return basis_.nullspace_dim(); }

    // Diagonal of S_lambda in the Phi coordinates. lambda = 0 gives the
    // projection onto the column space.
    VectorXd filter(double lambda) const;
    double trace(double lambda) const;
    VectorXd apply(const VectorXd& y, double lambda) const;
    MatrixXd apply(const MatrixXd& Y, double lambda) const;
    MatrixXd dense(double lambda) const;

    // Smallest positive penalty eigenvalue, the natural scale for lambda.
    double lambda_scale() const;

private:
    TpsBasis basis_;
};

struct SmoothFitDiagnostics {
    double edf = 0.0;
    double gcv = 0.0;
    double rss = 0.0;
    double sigma_hat = 0.0;
};

SmootherOperator spectral_decompose(const TpsBasis& basis);

VectorXd apply_smoother(const SmootherOperator& op, const VectorXd& y, double lambda);

// Smoother-only GCV, n ||(I - S) y||^2 / (n - tr S)^2.
double gcv_score(const SmootherOperator& op, const VectorXd& y, double lambda);

// Generic form used by every model: n rss / (n - edf)^2. Throws
// DegenerateDenominator when n - edf is not safely positive.
double gcv_value(double rss, double edf, int n);
bool gcv_degenerate(double edf, int n);

// 30 log-spaced values lambda = 10^t / mu_{M+1}, t in [-8, 4].
std::vector<double> default_lambda_grid(const SmootherOperator& op, int points = 30);
std::vector<double> default_lambda_grid(const VectorXd& penalty, int points = 30);

// Minimizes score(lambda) over the grid; ties go to the larger lambda and
// degenerate grid points are skipped.
template <class Score>
double argmin_on_grid(const std::vector<double>& grid, Score&& score, double* best_score = nullptr);

double select_lambda(const SmootherOperator& op, const VectorXd& y, const std::vector<double>& grid);
double select_lambda(const SmootherOperator& op, const VectorXd& y);

SmoothFitDiagnostics smooth_diagnostics(const SmootherOperator& op, const VectorXd& y, double lambda);

struct AmseComponents {
    double B2 = 0.0;
    double V = 0.0;
    double amse() const { return B2 + V; }
};

// f_hat = F y with E y = mean_y and Var y = sigma^2 I.
AmseComponents amse_components(const MatrixXd& F, const VectorXd& mean_y, const VectorXd& f_true,
                               double sigma);
// Smoother-only fit of y = f + eps.
AmseComponents amse_components(const SmootherOperator& op, const VectorXd& f_true, double lambda,
                               double sigma);

}  // namespace spatialplus

#include "spatialplus/detail/grid_search.hpp"
