#pragma once

#include "spatialplus/estimators.hpp"
#include "spatialplus/pwls.hpp"

#include <random>
#include <string>

namespace spatialplus {

enum class FamilyKind { gaussian, poisson, exponential, binomial };

// Binomial responses are counts out of n_bin trials and the mean lives on the
// count scale, so the logit link is log(mu / (n_bin - mu)).
struct ExponentialFamily {
    FamilyKind kind = FamilyKind::gaussian;
    int n_bin = 10;

    static ExponentialFamily gaussian() { return {FamilyKind::gaussian}; }
    static ExponentialFamily poisson() { return {FamilyKind::poisson}; }
    static ExponentialFamily exponential() { return {FamilyKind::exponential}; }
    static ExponentialFamily binomial(int size = 10) { return {FamilyKind::binomial, size}; }
    static ExponentialFamily from_name(const std::string& name);

    std::string name() const;

    double link(double mu) const;
    double linkinv(double eta) const;
    double link_deriv(double mu) const;
    double variance(double mu) const;
    bool valid_mu(double mu) const;
    bool valid_response(double y) const;
    // PIRLS weight 1 / (g'(mu)^2 V(mu)).
    double weight(double mu) const;
    double unit_deviance(double y, double mu) const;
    double initial_mu(double y) const;
    bool estimates_dispersion() const;
    // Log-likelihood (dispersion only enters the Gaussian case).
    double log_likelihood(const VectorXd& y, const VectorXd& mu, double phi) const;

    double deviance(const VectorXd& y, const VectorXd& mu) const;
    void check_response(const VectorXd& y) const;
};

struct PirlsOptions {
    // Fisher scoring with a non-canonical link converges only linearly.
    int max_iterations = 400;
    // Convergence needs both the relative change in penalized deviance and
    // the largest change in the linear predictor (relative to 1 + max|eta|)
    // below their tolerances. The deviance is quadratic near the optimum, so
    // it alone lets slowly converging non-canonical fits stop early.
    double tolerance = 1e-9;
    double eta_tolerance = 1e-9;
    int max_halvings = 10;
    // Lambda is re-selected by working GCV while it keeps moving, and frozen
    // once it has been stable for this many iterations or after freeze_after.
    int stable_iterations = 2;
    int freeze_after = 20;
};

// Generic penalized IRLS over an unpenalized block Xu and penalized block Bp.
struct PirlsProblem {
    MatrixXd Xu;
    MatrixXd Bp;
    VectorXd pen;
    int identified = 0;
    std::optional<double> lambda;
    std::vector<double> grid;
};

struct PirlsResult {
    VectorXd a, c;
    VectorXd eta, mu, w, z;
    double lambda = 0.0;
    double edf = 0.0;
    double deviance = 0.0;
    double penalty = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<PirlsStep> trace;
    PenalizedWLS::Operators ops;
};

PirlsResult pirls(const ExponentialFamily& family, const VectorXd& y, const PirlsProblem& problem,
                  const PirlsOptions& options = {}, const VectorXd* eta_start = nullptr);

FitResult fit_glm_null(const RegressionProblem& prob, const ExponentialFamily& family);
FitResult fit_glm_spatial(const RegressionProblem& prob, const ExponentialFamily& family);
FitResult fit_glm_spatial_plus(const RegressionProblem& prob, const ExponentialFamily& family);
FitResult fit_glm_rsr(const RegressionProblem& prob, const ExponentialFamily& family);

// Supported kinds: null, spatial, rsr, spatial_plus (gSEM has no GLM form).
FitResult fit_glm_model(const RegressionProblem& prob, const ModelTag& tag, const ExponentialFamily& family);

// W-weighted thin plate regression of x on space and its residual.
struct WeightedResidual {
    VectorXd residual;
    VectorXd fitted;
    VectorXd coef;  // on basis.columns()
    double lambda = 0.0;
};
WeightedResidual weighted_spatial_residual(const TpsBasis& basis, const VectorXd& x, const VectorXd& w,
                                           bool penalized, std::optional<double> lambda = {},
                                           const std::vector<double>& grid = {});

// (I - X (X^T W X)^{-1} X^T W) B.
MatrixXd weighted_orthogonalize(const MatrixXd& X, const VectorXd& w, const MatrixXd& B);

VectorXd simulate_glm_response(const VectorXd& eta, const ExponentialFamily& family, std::mt19937_64& rng,
                               double gaussian_sd = 1.0);

}  // namespace spatialplus
