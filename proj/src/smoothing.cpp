#include "spatialplus/smoothing.hpp"

#include "spatialplus/errors.hpp"

#include <cmath>

namespace spatialplus {

SmootherOperator::SmootherOperator(TpsBasis basis) : basis_(std::move(basis)) {}

VectorXd SmootherOperator::filter(double lambda) const {
    return (1.0 + lambda * mu().array()).inverse().matrix();
}

double SmootherOperator::trace(double lambda) const { return filter(lambda).sum(); }

VectorXd SmootherOperator::apply(const VectorXd& y, double lambda) const {
    return Phi() * filter(lambda).cwiseProduct(Phi().transpose() * y);
}

MatrixXd SmootherOperator::apply(const MatrixXd& Y, double lambda) const {
    return Phi() * (filter(lambda).asDiagonal() * (Phi().transpose() * Y));
}

MatrixXd SmootherOperator::dense(double lambda) const {
    return Phi() * filter(lambda).asDiagonal() * Phi().transpose();
}

double SmootherOperator::lambda_scale() const {
    const int M = nullspace_dim();
    return rank() > M ? mu()[M] : 1.0;
}

SmootherOperator spectral_decompose(const TpsBasis& basis) {
    const VectorXd& mu = basis.penalty();
    for (int j = 0; j < mu.size(); ++j) {
        if (!std::isfinite(mu[j])) throw EigenFailure("non-finite penalty eigenvalue");
    }
    return SmootherOperator(basis);
}

VectorXd apply_smoother(const SmootherOperator& op, const VectorXd& y, double lambda) {
    if (!(lambda > 0.0)) throw NonPositiveLambda("lambda must be > 0");
    if (y.size() != op.n()) throw InvalidInput("apply_smoother: length mismatch");
    return op.apply(y, lambda);
}

bool gcv_degenerate(double edf, int n) { return !(n - edf > 1e-8 * n); }

double gcv_value(double rss, double edf, int n) {
    if (gcv_degenerate(edf, n)) throw DegenerateDenominator("edf >= n");
    const double den = n - edf;
    return n * rss / (den * den);
}

double gcv_score(const SmootherOperator& op, const VectorXd& y, double lambda) {
    if (!(lambda > 0.0)) throw NonPositiveLambda("lambda must be > 0");
    VectorXd r = y - op.apply(y, lambda);
    return gcv_value(r.squaredNorm(), op.trace(lambda), op.n());
}

std::vector<double> default_lambda_grid(const VectorXd& penalty, int points) {
    double scale = 1.0;
    for (int j = 0; j < penalty.size(); ++j) {
        if (penalty[j] > 0.0) {
            scale = penalty[j];
            break;
        }
    }
    std::vector<double> grid;
    grid.reserve(points);
    for (int i = 0; i < points; ++i) {
        double t = points == 1 ? 0.0 : -8.0 + 12.0 * i / (points - 1);
        grid.push_back(std::pow(10.0, t) / scale);
    }
    return grid;
}

std::vector<double> default_lambda_grid(const SmootherOperator& op, int points) {
    return default_lambda_grid(op.mu(), points);
}

double select_lambda(const SmootherOperator& op, const VectorXd& y, const std::vector<double>& grid) {
    const VectorXd coef = op.Phi().transpose() * y;
    const double outside = (y - op.Phi() * coef).squaredNorm();
    return argmin_on_grid(grid, [&](double lambda) -> std::optional<double> {
        if (!(lambda > 0.0)) throw NonPositiveLambda("grid contains a non-positive lambda");
        VectorXd s = op.filter(lambda);
        double edf = s.sum();
        if (gcv_degenerate(edf, op.n())) return std::nullopt;
        double rss = outside + ((1.0 - s.array()) * coef.array()).square().sum();
        return gcv_value(rss, edf, op.n());
    });
}

double select_lambda(const SmootherOperator& op, const VectorXd& y) {
    return select_lambda(op, y, default_lambda_grid(op));
}

SmoothFitDiagnostics smooth_diagnostics(const SmootherOperator& op, const VectorXd& y, double lambda) {
    SmoothFitDiagnostics out;
    VectorXd r = y - op.apply(y, lambda);
    out.rss = r.squaredNorm();
    out.edf = op.trace(lambda);
    out.gcv = gcv_value(out.rss, out.edf, op.n());
    out.sigma_hat = std::sqrt(out.rss / (op.n() - out.edf));
    return out;
}

AmseComponents amse_components(const MatrixXd& F, const VectorXd& mean_y, const VectorXd& f_true,
                               double sigma) {
    const double n = static_cast<double>(f_true.size());
    AmseComponents out;
    out.B2 = (F * mean_y - f_true).squaredNorm() / n;
    out.V = sigma * sigma * F.squaredNorm() / n;
    return out;
}

AmseComponents amse_components(const SmootherOperator& op, const VectorXd& f_true, double lambda,
                               double sigma) {
    const double n = static_cast<double>(op.n());
    AmseComponents out;
    out.B2 = (f_true - op.apply(f_true, lambda)).squaredNorm() / n;
    out.V = sigma * sigma * op.filter(lambda).squaredNorm() / n;
    return out;
}

}  // namespace spatialplus
