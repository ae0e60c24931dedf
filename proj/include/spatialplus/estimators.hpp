#pragma once

#include "spatialplus/basis.hpp"
#include "spatialplus/smoothing.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace spatialplus {

enum class ModelKind { null_model, spatial, rsr, gsem, spatial_plus, partial_residual };

struct ModelTag {
    ModelKind kind = ModelKind::spatial;
    bool penalized = true;

    // "null", "spatial", "spatial_fx", "rsr", "gsem_fx", "spatial_plus", ...
    std::string name() const;
    bool operator==(const ModelTag&) const = default;
};

ModelTag parse_model_tag(const std::string& name);
std::string kind_name(ModelKind kind);

struct RegressionProblem {
    VectorXd y;
    // Covariates only; the intercept is controlled by the flag.
    MatrixXd X;
    std::vector<std::string> names;
    bool intercept = true;
    TpsBasis basis;
    bool penalized = true;
    // Fixed smoothing parameters; selected by GCV when absent.
    std::optional<double> lambda;
    std::vector<double> lambda_x;
    // Empty means the default grid of the basis.
    std::vector<double> grid;

    int n() const { return static_cast<int>(y.size()); }
    int p() const { return static_cast<int>(X.cols()); }
    void validate() const;
    std::vector<double> lambda_grid() const;
    // [1 | X] with an intercept, X otherwise.
    MatrixXd full_design() const;
    std::vector<std::string> coefficient_names() const;
};

struct PirlsStep {
    int iteration = 0;
    double lambda = 0.0;
    double penalized_deviance_before = 0.0;
    double penalized_deviance_after = 0.0;
    int halvings = 0;
    bool lambda_fixed = false;
};

struct FitResult {
    ModelTag tag;
    std::string family = "gaussian";

    // Reported coefficients; "(Intercept)" first when the problem has one.
    std::vector<std::string> names;
    VectorXd beta_hat;
    VectorXd se_beta;
    VectorXd p_values;
    // Column j holds w_j with beta_hat_j = w_j^T y (Gaussian) or w_j^T z at
    // the final working response (GLM).
    MatrixXd beta_weights;

    // Spatial effect at the sites. Centered when an intercept is reported.
    VectorXd f_hat;
    // Fitted mean on the response scale and the linear predictor.
    VectorXd fitted;
    VectorXd linear_predictor;

    double edf = 0.0;
    double sigma_hat = 0.0;
    double gcv = std::numeric_limits<double>::quiet_NaN();
    double aic = 0.0;
    double deviance = 0.0;
    double null_deviance = 0.0;
    double deviance_explained = 0.0;
    double phi = 1.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> lambda_x;
    // Response-scale diagnostics of gSEM are not comparable to the other models.
    bool comparable = true;

    // Working weights at convergence (all ones for Gaussian fits).
    VectorXd weights;

    int iterations = 0;
    bool converged = true;
    std::vector<PirlsStep> trace;

    int index_of(const std::string& name) const;
    double coef(const std::string& name) const { return beta_hat[index_of(name)]; }
};

FitResult fit_null(const RegressionProblem& prob);
FitResult fit_spatial(const RegressionProblem& prob);
FitResult fit_rsr(const RegressionProblem& prob);
FitResult fit_gsem(const RegressionProblem& prob);
FitResult fit_spatial_plus(const RegressionProblem& prob);
// Uses common_lambda, else prob.lambda, else GCV on the estimator's own
// influence matrix.
FitResult fit_partial_residual(const RegressionProblem& prob, std::optional<double> common_lambda = {});

// Dispatch on the tag; tag.penalized overrides prob.penalized.
FitResult fit_model(const RegressionProblem& prob, const ModelTag& tag);

// ||fitted - truth||^2 on the response scale.
double mse_fitted(const FitResult& fit, const VectorXd& truth);

// True when x is numerically spatial: its spatial residual, or for a
// truncated basis its component outside span(B), is below 1e-6 ||x||.
bool covariate_is_spatial(const TpsBasis& basis, const VectorXd& x, const VectorXd& residual);

// Two-sided normal tail probability for a Wald statistic.
double wald_p_value(double estimate, double se);

}  // namespace spatialplus
