#include "spatialplus/estimators.hpp"

#include "spatialplus/errors.hpp"
#include "spatialplus/pwls.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace spatialplus {

namespace {

constexpr double kCollinearTol = 1e-10;

// Z and y in the eigen-coordinates of the smoother, plus the inner products of
// their components outside span(Phi) (nonzero only for truncated bases).
struct Projected {
    MatrixXd Zc;
    VectorXd yc;
    MatrixXd ZoZo;
    VectorXd Zoyo;
    double yoyo = 0.0;
    MatrixXd ZtZ;
};

Projected project(const SmootherOperator& op, const MatrixXd& Z, const VectorXd& y) {
    const MatrixXd& Phi = op.Phi();
    Projected p;
    p.Zc = Phi.transpose() * Z;
    p.yc = Phi.transpose() * y;
    const Eigen::Index q = Z.cols();
    if (op.rank() < op.n()) {
        MatrixXd Zo = Z - Phi * p.Zc;
        VectorXd yo = y - Phi * p.yc;
        p.ZoZo = Zo.transpose() * Zo;
        p.Zoyo = Zo.transpose() * yo;
        p.yoyo = yo.squaredNorm();
    } else {
        p.ZoZo = MatrixXd::Zero(q, q);
        p.Zoyo = VectorXd::Zero(q);
    }
    p.ZtZ = Z.transpose() * Z;
    return p;
}

// Smallest eigenvalue of G after scaling to unit diagonal of Z^T Z.
double relative_min_eigen(const MatrixXd& G, const MatrixXd& ZtZ) {
    VectorXd d = ZtZ.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    MatrixXd Gs = d.asDiagonal() * G * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Gs, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

bool in_polynomial_span(const SmootherOperator& op, const Projected& p) {
    // Residual Gram of Z after removing the M polynomial directions.
    const int M = op.nullspace_dim();
    MatrixXd Zc_rest = p.Zc.bottomRows(op.rank() - M);
    MatrixXd G = Zc_rest.transpose() * Zc_rest + p.ZoZo;
    return relative_min_eigen(G, p.ZtZ) < kCollinearTol;
}

// Partial spline family beta = (Z^T H^q Z)^{-1} Z^T H^q y with H = I - S_lambda.
// q = 1 is the joint penalized fit, q = 2 the partial residual estimator.
struct SplineEval {
    VectorXd beta;
    MatrixXd Ginv;
    double rss = 0.0;
    double edf = 0.0;
};

// Rejects covariates that no smoothing parameter can separate from the smooth.
void check_identifiable(const SmootherOperator& op, const Projected& p, bool penalized) {
    if (in_polynomial_span(op, p))
        throw CollinearCovariateWithNullspace("covariate is (numerically) in the span of the polynomial block");
    if (!penalized && relative_min_eigen(p.ZoZo, p.ZtZ) < kCollinearTol)
        throw SingularDesign("covariate lies in the column space of the spatial basis");
}

std::optional<SplineEval> evaluate(const SmootherOperator& op, const Projected& p, double lambda, int q) {
    VectorXd s = op.filter(lambda);
    VectorXd h = VectorXd::Ones(s.size()) - s;
    auto gram = [&](int power) {
        VectorXd hp = h.array().pow(power).matrix();
        return MatrixXd(p.Zc.transpose() * hp.asDiagonal() * p.Zc + p.ZoZo);
    };
    MatrixXd G = gram(q);
    // Near-interpolating lambdas leave almost nothing of Z; such grid points
    // are as unusable as a vanishing GCV denominator.
    if (relative_min_eigen(G, p.ZtZ) < 1e-14) return std::nullopt;
    VectorXd hq = h.array().pow(q).matrix();
    VectorXd b = p.Zc.transpose() * hq.cwiseProduct(p.yc) + p.Zoyo;
    Eigen::LDLT<MatrixXd> ldlt(G);
    SplineEval ev;
    ev.beta = ldlt.solve(b);
    ev.Ginv = ldlt.solve(MatrixXd::Identity(G.rows(), G.cols()));
    VectorXd uc = p.yc - p.Zc * ev.beta;
    double out = p.yoyo - 2.0 * ev.beta.dot(p.Zoyo) + ev.beta.dot(p.ZoZo * ev.beta);
    ev.rss = (h.cwiseProduct(uc)).squaredNorm() + std::max(out, 0.0);
    ev.edf = s.sum() + (ev.Ginv * gram(q + 1)).trace();
    return ev;
}

struct CoreFit {
    VectorXd beta;
    MatrixXd L;  // beta = L^T y
    VectorXd fitted;
    double rss = 0.0;
    double edf = 0.0;
    double lambda = 0.0;
};

CoreFit partial_spline(const SmootherOperator& op, const MatrixXd& Z, const VectorXd& y, bool penalized,
                       std::optional<double> lambda, const std::vector<double>& grid, int q) {
    Projected p = project(op, Z, y);
    check_identifiable(op, p, penalized);
    double lam = 0.0;
    if (penalized) {
        if (lambda) {
            if (!(*lambda > 0.0)) throw NonPositiveLambda("lambda must be > 0");
            lam = *lambda;
        } else {
            lam = argmin_on_grid(grid, [&](double l) -> std::optional<double> {
                auto ev = evaluate(op, p, l, q);
                if (!ev || gcv_degenerate(ev->edf, op.n())) return std::nullopt;
                return gcv_value(ev->rss, ev->edf, op.n());
            });
        }
    }
    auto maybe = evaluate(op, p, lam, q);
    if (!maybe) throw SingularDesign("covariate block is numerically singular at this lambda");
    const SplineEval& ev = *maybe;
    CoreFit fit;
    fit.lambda = lam;
    fit.beta = ev.beta;
    fit.rss = ev.rss;
    fit.edf = ev.edf;
    MatrixXd HZ = Z - op.apply(Z, lam);
    for (int k = 1; k < q; ++k) HZ -= op.apply(HZ, lam);
    fit.L = HZ * ev.Ginv;
    VectorXd u = y - Z * fit.beta;
    fit.fitted = y - (u - op.apply(u, lam));
    return fit;
}

double total_ss(const RegressionProblem& prob) {
    if (prob.intercept) return (prob.y.array() - prob.y.mean()).square().sum();
    return prob.y.squaredNorm();
}

// Shared bookkeeping once beta (over the full design), its weights, the fitted
// values, rss and edf are known.
FitResult assemble(const RegressionProblem& prob, ModelTag tag, VectorXd beta, MatrixXd W, VectorXd fitted,
                   double rss, double edf) {
    const int n = prob.n();
    FitResult r;
    r.tag = tag;
    r.names = prob.coefficient_names();
    r.beta_hat = std::move(beta);
    r.beta_weights = std::move(W);
    r.fitted = std::move(fitted);
    r.linear_predictor = r.fitted;
    r.weights = VectorXd::Ones(n);
    r.f_hat = r.fitted - prob.full_design() * r.beta_hat;
    r.edf = edf;
    r.deviance = rss;
    r.null_deviance = total_ss(prob);
    r.deviance_explained =
        r.null_deviance > 0.0 ? std::clamp(1.0 - rss / r.null_deviance, 0.0, 1.0) : 0.0;
    const double resid_df = n - edf;
    r.sigma_hat = resid_df > 0.0 ? std::sqrt(rss / resid_df) : std::numeric_limits<double>::quiet_NaN();
    r.phi = r.sigma_hat * r.sigma_hat;
    if (!gcv_degenerate(edf, n)) r.gcv = gcv_value(rss, edf, n);
    double loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * std::max(rss, 1e-300) / n) + 1.0);
    r.aic = 2.0 * edf - 2.0 * loglik;
    const Eigen::Index p = r.beta_hat.size();
    r.se_beta.resize(p);
    r.p_values.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        r.se_beta[j] = r.sigma_hat * r.beta_weights.col(j).norm();
        r.p_values[j] = wald_p_value(r.beta_hat[j], r.se_beta[j]);
    }
    return r;
}

// Adds the intercept implied by a smooth containing the constants: the
// residuals of these fits sum to zero, so alpha = mean(fitted) - xbar^T beta.
void prepend_intercept(const RegressionProblem& prob, VectorXd& beta, MatrixXd& L) {
    if (!prob.intercept) return;
    const int n = prob.n();
    VectorXd xbar = prob.X.colwise().mean().transpose();
    VectorXd a = VectorXd::Constant(n, 1.0 / n) - L * xbar;
    VectorXd b(beta.size() + 1);
    b << 0.0, beta;
    MatrixXd W(n, L.cols() + 1);
    W.col(0) = a;
    W.rightCols(L.cols()) = L;
    b[0] = a.dot(prob.y);
    beta = std::move(b);
    L = std::move(W);
}

FitResult finish_smooth(const RegressionProblem& prob, ModelTag tag, CoreFit core) {
    prepend_intercept(prob, core.beta, core.L);
    FitResult r = assemble(prob, tag, core.beta, core.L, core.fitted, core.rss, core.edf);
    if (tag.penalized) r.lambda = core.lambda;
    return r;
}

// (I - S_{lambda_x}) x_j column by column, with lambda_x chosen on each
// covariate alone unless fixed.
MatrixXd spatial_residuals(const RegressionProblem& prob, const SmootherOperator& op, std::vector<double>& lx) {
    const bool pen = prob.penalized;
    auto grid = prob.lambda_grid();
    MatrixXd R(prob.n(), prob.p());
    lx.assign(prob.p(), 0.0);
    for (int j = 0; j < prob.p(); ++j) {
        VectorXd x = prob.X.col(j);
        double lam = 0.0;
        if (pen) {
            if (j < static_cast<int>(prob.lambda_x.size())) {
                lam = prob.lambda_x[j];
                if (!(lam > 0.0)) throw NonPositiveLambda("lambda_x must be > 0");
            } else {
                lam = select_lambda(op, x, grid);
            }
        }
        lx[j] = lam;
        R.col(j) = x - op.apply(x, lam);
        if (covariate_is_spatial(prob.basis, x, R.col(j)))
            throw DegenerateResiduals("covariate " + std::to_string(j + 1) + " is numerically spatial");
    }
    return R;
}

}  // namespace

std::string kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::null_model: return "null";
        case ModelKind::spatial: return "spatial";
        case ModelKind::rsr: return "rsr";
        case ModelKind::gsem: return "gsem";
        case ModelKind::spatial_plus: return "spatial_plus";
        case ModelKind::partial_residual: return "partial_residual";
    }
    return "unknown";
}

std::string ModelTag::name() const {
    std::string s = kind_name(kind);
    if (!penalized && kind != ModelKind::null_model) s += "_fx";
    return s;
}

ModelTag parse_model_tag(const std::string& name) {
    std::string base = name;
    bool pen = true;
    if (base.size() > 3 && base.substr(base.size() - 3) == "_fx") {
        base = base.substr(0, base.size() - 3);
        pen = false;
    }
    for (ModelKind k : {ModelKind::null_model, ModelKind::spatial, ModelKind::rsr, ModelKind::gsem,
                        ModelKind::spatial_plus, ModelKind::partial_residual}) {
        if (kind_name(k) == base) return {k, k == ModelKind::null_model ? true : pen};
    }
    if (base == "spatial+") return {ModelKind::spatial_plus, pen};
    if (base == "pr") return {ModelKind::partial_residual, pen};
    throw InvalidInput("unknown model '" + name + "'");
}

void RegressionProblem::validate() const {
    const int n = this->n();
    if (n == 0) throw InvalidInput("empty response");
    if (X.rows() != n) throw InvalidInput("X and y have different lengths");
    if (X.cols() < 1) throw InvalidInput("at least one covariate is required");
    if (!y.allFinite() || !X.allFinite()) throw InvalidResponse("non-finite values in y or X");
    if (basis.n() != n) throw InvalidInput("basis and response have different lengths");
    MatrixXd Xf = full_design();
    Eigen::ColPivHouseholderQR<MatrixXd> qr(Xf);
    qr.setThreshold(1e-10);
    if (qr.rank() < Xf.cols()) throw SingularDesign("covariate matrix is not of full column rank");
}

MatrixXd RegressionProblem::full_design() const {
    if (!intercept) return X;
    MatrixXd Xf(n(), p() + 1);
    Xf.col(0).setOnes();
    Xf.rightCols(p()) = X;
    return Xf;
}

std::vector<std::string> RegressionProblem::coefficient_names() const {
    std::vector<std::string> out;
    if (intercept) out.push_back("(Intercept)");
    for (int j = 0; j < p(); ++j)
        out.push_back(j < static_cast<int>(names.size()) ? names[j] : "x" + std::to_string(j + 1));
    return out;
}

std::vector<double> RegressionProblem::lambda_grid() const {
    return grid.empty() ? default_lambda_grid(basis.penalty()) : grid;
}

int FitResult::index_of(const std::string& name) const {
    for (size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return static_cast<int>(j);
    throw InvalidInput("no coefficient named '" + name + "'");
}

bool covariate_is_spatial(const TpsBasis& basis, const VectorXd& x, const VectorXd& residual) {
    const double tol = 1e-6 * x.norm();
    if (residual.norm() < tol) return true;
    if (!basis.truncated()) return false;
    const MatrixXd& B = basis.columns();
    return (x - B * (B.transpose() * x)).norm() < tol;
}

double wald_p_value(double estimate, double se) {
    if (!(se > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::erfc(std::abs(estimate / se) / std::sqrt(2.0));
}

FitResult fit_null(const RegressionProblem& prob) {
    prob.validate();
    MatrixXd Xf = prob.full_design();
    PenalizedWLS eng(Xf, MatrixXd(prob.n(), 0), VectorXd(0), VectorXd::Ones(prob.n()),
                     static_cast<int>(Xf.cols()));
    eng.set_response(prob.y);
    auto sol = eng.solve(0.0);
    auto ops = eng.operators(0.0);
    FitResult r = assemble(prob, {ModelKind::null_model, true}, sol.a, ops.A.transpose(), sol.eta, sol.rss, sol.edf);
    r.f_hat.setZero();
    return r;
}

FitResult fit_spatial(const RegressionProblem& prob) {
    prob.validate();
    SmootherOperator op(prob.basis);
    const bool pen = prob.penalized;
    CoreFit core = partial_spline(op, prob.X, prob.y, pen, prob.lambda, prob.lambda_grid(), 1);
    return finish_smooth(prob, {ModelKind::spatial, pen}, std::move(core));
}

FitResult fit_partial_residual(const RegressionProblem& prob, std::optional<double> common_lambda) {
    prob.validate();
    SmootherOperator op(prob.basis);
    const bool pen = prob.penalized;
    std::optional<double> lam = common_lambda ? common_lambda : prob.lambda;
    CoreFit core = partial_spline(op, prob.X, prob.y, pen, lam, prob.lambda_grid(), 2);
    return finish_smooth(prob, {ModelKind::partial_residual, pen}, std::move(core));
}

FitResult fit_spatial_plus(const RegressionProblem& prob) {
    prob.validate();
    SmootherOperator op(prob.basis);
    const bool pen = prob.penalized;
    std::vector<double> lx;
    MatrixXd R = spatial_residuals(prob, op, lx);
    CoreFit core = partial_spline(op, R, prob.y, pen, prob.lambda, prob.lambda_grid(), 1);
    // fitted = R beta + S(y - R beta) = X beta + f_hat with
    // f_hat = S(y - R beta) - sum_j beta_j S_xj x_j, which assemble recovers.
    FitResult r = finish_smooth(prob, {ModelKind::spatial_plus, pen}, std::move(core));
    if (pen) r.lambda_x = lx;
    return r;
}

FitResult fit_gsem(const RegressionProblem& prob) {
    prob.validate();
    SmootherOperator op(prob.basis);
    const bool pen = prob.penalized;
    const int p = prob.p();
    std::vector<double> lx;
    MatrixXd R = spatial_residuals(prob, op, lx);
    double ly = 0.0;
    if (pen) {
        if (prob.lambda) {
            if (!(*prob.lambda > 0.0)) throw NonPositiveLambda("lambda must be > 0");
            ly = *prob.lambda;
        } else {
            ly = select_lambda(op, prob.y, prob.lambda_grid());
        }
    }
    VectorXd sy = op.apply(prob.y, ly);
    VectorXd ry = prob.y - sy;
    MatrixXd RtR = R.transpose() * R;
    Eigen::LDLT<MatrixXd> ldlt(RtR);
    CoreFit core;
    core.lambda = ly;
    core.beta = ldlt.solve(R.transpose() * ry);
    MatrixXd IR = R - op.apply(R, ly);
    core.L = IR * ldlt.solve(MatrixXd::Identity(p, p));
    core.fitted = sy + R * core.beta;
    core.rss = (ry - R * core.beta).squaredNorm();
    core.edf = op.trace(ly) + p;
    FitResult r = finish_smooth(prob, {ModelKind::gsem, pen}, std::move(core));
    if (pen) r.lambda_x = lx;
    r.comparable = false;
    return r;
}

FitResult fit_rsr(const RegressionProblem& prob) {
    prob.validate();
    const bool pen = prob.penalized;
    const int n = prob.n();
    const TpsBasis& basis = prob.basis;
    const int M = basis.nullspace_dim(), k = basis.rank();
    MatrixXd Xf = prob.full_design();
    const int pf = static_cast<int>(Xf.cols());
    Eigen::HouseholderQR<MatrixXd> qr(Xf);
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, pf);
    const MatrixXd& B = basis.columns();
    MatrixXd Bt = B - Q * (Q.transpose() * B);

    const int nu = pen ? M : k;
    MatrixXd Xu(n, pf + nu);
    Xu.leftCols(pf) = Xf;
    Xu.rightCols(nu) = Bt.leftCols(nu);
    MatrixXd Bp = Bt.rightCols(k - nu);
    VectorXd pen_w = basis.penalty().tail(k - nu);
    PenalizedWLS eng(Xu, Bp, pen_w, VectorXd::Ones(n), pf);
    eng.set_response(prob.y);
    double lam = 0.0;
    if (pen && k > M) {
        if (prob.lambda) {
            if (!(*prob.lambda > 0.0)) throw NonPositiveLambda("lambda must be > 0");
            lam = *prob.lambda;
        } else {
            lam = eng.select_lambda(prob.lambda_grid());
        }
    }
    auto sol = eng.solve(lam);
    auto ops = eng.operators(lam);
    FitResult r = assemble(prob, {ModelKind::rsr, pen}, sol.a.head(pf), ops.A.topRows(pf).transpose(), sol.eta,
                           sol.rss, sol.edf);
    if (pen) r.lambda = lam;
    return r;
}

FitResult fit_model(const RegressionProblem& prob, const ModelTag& tag) {
    RegressionProblem local = prob;
    local.penalized = tag.penalized;
    switch (tag.kind) {
        case ModelKind::null_model: return fit_null(local);
        case ModelKind::spatial: return fit_spatial(local);
        case ModelKind::rsr: return fit_rsr(local);
        case ModelKind::gsem: return fit_gsem(local);
        case ModelKind::spatial_plus: return fit_spatial_plus(local);
        case ModelKind::partial_residual: return fit_partial_residual(local);
    }
    throw InvalidInput("unknown model kind");
}

double mse_fitted(const FitResult& fit, const VectorXd& truth) {
    if (fit.fitted.size() != truth.size()) throw InvalidInput("mse_fitted: length mismatch");
    return (fit.fitted - truth).squaredNorm();
}

}  // namespace spatialplus
