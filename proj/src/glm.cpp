#include "spatialplus/glm.hpp"

#include "spatialplus/errors.hpp"

#include <cmath>
#include <numbers>

namespace spatialplus {

namespace {

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

constexpr double kWeightFloor = 1e-12;

}  // namespace

ExponentialFamily ExponentialFamily::from_name(const std::string& name) {
    if (name == "gaussian") return gaussian();
    if (name == "poisson") return poisson();
    if (name == "exponential") return exponential();
    if (name == "binomial") return binomial();
    throw InvalidInput("unknown family '" + name + "'");
}

std::string ExponentialFamily::name() const {
    switch (kind) {
        case FamilyKind::gaussian: return "gaussian";
        case FamilyKind::poisson: return "poisson";
        case FamilyKind::exponential: return "exponential";
        case FamilyKind::binomial: return "binomial";
    }
    return "unknown";
}

double ExponentialFamily::link(double mu) const {
    switch (kind) {
        case FamilyKind::gaussian: return mu;
        case FamilyKind::binomial: return std::log(mu / (n_bin - mu));
        default: return std::log(mu);
    }
}

double ExponentialFamily::linkinv(double eta) const {
    switch (kind) {
        case FamilyKind::gaussian: return eta;
        case FamilyKind::binomial: return n_bin / (1.0 + std::exp(-eta));
        default: return std::exp(eta);
    }
}

double ExponentialFamily::link_deriv(double mu) const {
    switch (kind) {
        case FamilyKind::gaussian: return 1.0;
        case FamilyKind::binomial: return n_bin / (mu * (n_bin - mu));
        default: return 1.0 / mu;
    }
}

double ExponentialFamily::variance(double mu) const {
    switch (kind) {
        case FamilyKind::gaussian: return 1.0;
        case FamilyKind::poisson: return mu;
        case FamilyKind::exponential: return mu * mu;
        case FamilyKind::binomial: return mu * (n_bin - mu) / n_bin;
    }
    return 1.0;
}

bool ExponentialFamily::valid_mu(double mu) const {
    if (!std::isfinite(mu)) return false;
    switch (kind) {
        case FamilyKind::gaussian: return true;
        case FamilyKind::binomial: return mu > 0.0 && mu < n_bin;
        default: return mu > 0.0;
    }
}

bool ExponentialFamily::valid_response(double y) const {
    if (!std::isfinite(y)) return false;
    switch (kind) {
        case FamilyKind::gaussian: return true;
        case FamilyKind::poisson: return y >= 0.0 && y == std::floor(y);
        case FamilyKind::exponential: return y > 0.0;
        case FamilyKind::binomial: return y >= 0.0 && y <= n_bin && y == std::floor(y);
    }
    return false;
}

double ExponentialFamily::weight(double mu) const {
    double g = link_deriv(mu);
    return 1.0 / (g * g * variance(mu));
}

double ExponentialFamily::unit_deviance(double y, double mu) const {
    switch (kind) {
        case FamilyKind::gaussian: return (y - mu) * (y - mu);
        case FamilyKind::poisson: return 2.0 * (xlogy(y, y / mu) - (y - mu));
        case FamilyKind::exponential: return 2.0 * (-std::log(y / mu) + (y - mu) / mu);
        case FamilyKind::binomial:
            return 2.0 * (xlogy(y, y / mu) + xlogy(n_bin - y, (n_bin - y) / (n_bin - mu)));
    }
    return 0.0;
}

double ExponentialFamily::initial_mu(double y) const {
    switch (kind) {
        case FamilyKind::poisson: return y == 0.0 ? y + 0.1 : y;
        case FamilyKind::binomial: return std::clamp(y, 0.01 * n_bin, 0.99 * n_bin);
        default: return y;
    }
}

bool ExponentialFamily::estimates_dispersion() const {
    return kind == FamilyKind::gaussian || kind == FamilyKind::exponential;
}

double ExponentialFamily::log_likelihood(const VectorXd& y, const VectorXd& mu, double phi) const {
    double ll = 0.0;
    const Eigen::Index n = y.size();
    switch (kind) {
        case FamilyKind::gaussian: {
            // Profile likelihood at the MLE of the variance, as for the Gaussian estimators.
            double rss = (y - mu).squaredNorm();
            (void)phi;
            return -0.5 * n * (std::log(2.0 * std::numbers::pi * std::max(rss, 1e-300) / n) + 1.0);
        }
        case FamilyKind::poisson:
            for (Eigen::Index i = 0; i < n; ++i) ll += xlogy(y[i], mu[i]) - mu[i] - std::lgamma(y[i] + 1.0);
            return ll;
        case FamilyKind::exponential:
            for (Eigen::Index i = 0; i < n; ++i) ll += -std::log(mu[i]) - y[i] / mu[i];
            return ll;
        case FamilyKind::binomial:
            for (Eigen::Index i = 0; i < n; ++i) {
                double p = mu[i] / n_bin;
                ll += std::lgamma(n_bin + 1.0) - std::lgamma(y[i] + 1.0) - std::lgamma(n_bin - y[i] + 1.0) +
                      xlogy(y[i], p) + xlogy(n_bin - y[i], 1.0 - p);
            }
            return ll;
    }
    return ll;
}

double ExponentialFamily::deviance(const VectorXd& y, const VectorXd& mu) const {
    double d = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) d += unit_deviance(y[i], mu[i]);
    return d;
}

void ExponentialFamily::check_response(const VectorXd& y) const {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!valid_response(y[i]))
            throw InvalidResponse("y[" + std::to_string(i) + "] = " + std::to_string(y[i]) + " is outside the " +
                                  name() + " support");
    }
}

namespace {

std::optional<VectorXd> mean_of(const ExponentialFamily& fam, const VectorXd& eta) {
    VectorXd mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        mu[i] = fam.linkinv(eta[i]);
        if (!fam.valid_mu(mu[i])) return std::nullopt;
    }
    return mu;
}

VectorXd working_weights(const ExponentialFamily& fam, const VectorXd& mu) {
    VectorXd w(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) w[i] = fam.weight(mu[i]);
    double floor = kWeightFloor * std::max(w.maxCoeff(), 1e-300);
    return w.cwiseMax(floor);
}

VectorXd working_response(const ExponentialFamily& fam, const VectorXd& y, const VectorXd& mu, const VectorXd& eta) {
    VectorXd z(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) z[i] = eta[i] + fam.link_deriv(mu[i]) * (y[i] - mu[i]);
    return z;
}

double quad_penalty(const VectorXd& c, const VectorXd& pen) { return c.dot(pen.cwiseProduct(c)); }

}  // namespace

PirlsResult pirls(const ExponentialFamily& fam, const VectorXd& y, const PirlsProblem& pb, const PirlsOptions& opt,
                  const VectorXd* eta_start) {
    fam.check_response(y);
    const Eigen::Index n = y.size();
    const bool penalized = pb.Bp.cols() > 0;

    VectorXd mu(n), eta(n);
    if (eta_start) {
        eta = *eta_start;
        auto m = mean_of(fam, eta);
        if (!m) throw MeanOutOfRange("starting linear predictor gives an invalid mean");
        mu = *m;
    } else {
        for (Eigen::Index i = 0; i < n; ++i) mu[i] = fam.initial_mu(y[i]);
        for (Eigen::Index i = 0; i < n; ++i) eta[i] = fam.link(mu[i]);
    }

    double lam = 0.0;
    bool frozen = !penalized;
    if (penalized && pb.lambda) {
        if (!(*pb.lambda > 0.0)) throw NonPositiveLambda("lambda must be > 0");
        lam = *pb.lambda;
        frozen = true;
    }
    const std::vector<double> grid = pb.grid.empty() ? default_lambda_grid(pb.pen) : pb.grid;

    PirlsResult out;
    VectorXd a_old, c_old;
    bool have_coef = false;
    int stable = 0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        VectorXd w = working_weights(fam, mu);
        VectorXd z = working_response(fam, y, mu, eta);
        if (!z.allFinite()) throw PirlsDivergence("non-finite working response");
        PenalizedWLS eng(pb.Xu, pb.Bp, pb.pen, w, pb.identified);
        eng.set_response(z);

        bool lambda_moved = false;
        if (!frozen) {
            double next = eng.select_lambda(grid);
            lambda_moved = it > 1 && next != lam;
            stable = (it > 1 && !lambda_moved) ? stable + 1 : 0;
            lam = next;
            if (stable >= opt.stable_iterations || it >= opt.freeze_after) frozen = true;
        }

        auto sol = eng.solve(lam);
        VectorXd a_new = sol.a, c_new = sol.c, eta_new = sol.eta;
        // Measured before any halving: the damped step shrinks by itself.
        const double eta_step = (eta_new - eta).lpNorm<Eigen::Infinity>();
        auto pd_at = [&](const VectorXd& e, const VectorXd& c) -> std::optional<double> {
            auto m = mean_of(fam, e);
            if (!m) return std::nullopt;
            return fam.deviance(y, *m) + lam * quad_penalty(c, pb.pen);
        };
        const double pd_before = fam.deviance(y, mu) + (have_coef ? lam * quad_penalty(c_old, pb.pen) : 0.0);
        std::optional<double> pd_after = pd_at(eta_new, c_new);
        int halvings = 0;
        auto worse = [&] {
            // Strict: near the optimum a non-canonical Fisher step can raise the
            // deviance by a few ulps per iteration and drift away.
            return !pd_after || (have_coef && *pd_after > pd_before);
        };
        while (worse()) {
            if (halvings == opt.max_halvings) {
                if (pd_after && *pd_after <= pd_before + 1e-8 * (std::abs(pd_before) + 1.0)) break;
                if (!have_coef) throw PirlsDivergence("initial step leaves the valid mean range");
                throw StepHalvingExhausted("penalized deviance increased after " + std::to_string(halvings) +
                                           " halvings");
            }
            ++halvings;
            eta_new = 0.5 * (eta + eta_new);
            if (have_coef) {
                a_new = 0.5 * (a_old + a_new);
                c_new = 0.5 * (c_old + c_new);
            }
            pd_after = pd_at(eta_new, c_new);
        }
        out.trace.push_back({it, lam, pd_before, *pd_after, halvings, frozen});
        const bool settled = have_coef && !lambda_moved &&
                             std::abs(pd_before - *pd_after) <= opt.tolerance * (std::abs(*pd_after) + 0.1) &&
                             eta_step <= opt.eta_tolerance * (1.0 + eta_new.lpNorm<Eigen::Infinity>());

        eta = eta_new;
        mu = *mean_of(fam, eta);
        a_old = a_new;
        c_old = c_new;
        have_coef = true;
        out.iterations = it;
        if (settled) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged)
        throw PirlsDivergence("no convergence within " + std::to_string(opt.max_iterations) + " iterations");

    out.a = a_old;
    out.c = c_old;
    out.eta = eta;
    out.mu = mu;
    out.w = working_weights(fam, mu);
    out.z = working_response(fam, y, mu, eta);
    out.lambda = lam;
    out.deviance = fam.deviance(y, mu);
    out.penalty = quad_penalty(out.c, pb.pen);
    PenalizedWLS eng(pb.Xu, pb.Bp, pb.pen, out.w, pb.identified);
    out.edf = eng.edf(lam);
    out.ops = eng.operators(lam);
    return out;
}

namespace {

void check_glm_problem(const RegressionProblem& prob, const ExponentialFamily& fam) {
    prob.validate();
    fam.check_response(prob.y);
}

double null_deviance(const RegressionProblem& prob, const ExponentialFamily& fam) {
    const Eigen::Index n = prob.n();
    double m = prob.intercept ? prob.y.mean() : fam.linkinv(0.0);
    if (!fam.valid_mu(m)) return std::numeric_limits<double>::quiet_NaN();
    return fam.deviance(prob.y, VectorXd::Constant(n, m));
}

// beta columns are the first `pb` columns of Xu.
FitResult assemble_glm(const RegressionProblem& prob, const ExponentialFamily& fam, ModelTag tag,
                       const PirlsProblem& problem, const PirlsResult& pr, int pb, bool smooth_intercept) {
    const int n = prob.n();
    FitResult r;
    r.tag = tag;
    r.family = fam.name();
    r.names = prob.coefficient_names();

    VectorXd beta = pr.a.head(pb);
    MatrixXd Wt = pr.ops.A.topRows(pb).transpose();
    if (smooth_intercept && prob.intercept) {
        VectorXd xbar = prob.X.colwise().mean().transpose();
        // eta = H z with H = Xu A + Bp C.
        VectorXd Ht1 = pr.ops.A.transpose() * (problem.Xu.transpose() * VectorXd::Ones(n));
        if (problem.Bp.cols() > 0) Ht1 += pr.ops.C.transpose() * (problem.Bp.transpose() * VectorXd::Ones(n));
        VectorXd wa = Ht1 / n - Wt * xbar;
        VectorXd b(pb + 1);
        b << pr.eta.mean() - xbar.dot(beta), beta;
        MatrixXd W2(n, pb + 1);
        W2.col(0) = wa;
        W2.rightCols(pb) = Wt;
        beta = b;
        Wt = W2;
    }
    r.beta_hat = beta;
    r.beta_weights = Wt;
    r.linear_predictor = pr.eta;
    r.fitted = pr.mu;
    r.weights = pr.w;
    r.f_hat = pr.eta - prob.full_design() * r.beta_hat;
    r.edf = pr.edf;
    r.deviance = pr.deviance;
    r.null_deviance = null_deviance(prob, fam);
    r.deviance_explained = r.null_deviance > 0.0 ? std::clamp(1.0 - r.deviance / r.null_deviance, 0.0, 1.0) : 0.0;
    const double resid_df = n - r.edf;
    if (fam.estimates_dispersion()) {
        double pearson = 0.0;
        for (int i = 0; i < n; ++i) pearson += (prob.y[i] - pr.mu[i]) * (prob.y[i] - pr.mu[i]) / fam.variance(pr.mu[i]);
        r.phi = resid_df > 0.0 ? pearson / resid_df : std::numeric_limits<double>::quiet_NaN();
    } else {
        r.phi = 1.0;
    }
    r.sigma_hat = std::sqrt(r.phi);
    if (!gcv_degenerate(r.edf, n)) r.gcv = gcv_value(r.deviance, r.edf, n);
    r.aic = 2.0 * r.edf - 2.0 * fam.log_likelihood(prob.y, pr.mu, r.phi);
    r.se_beta.resize(r.beta_hat.size());
    r.p_values.resize(r.beta_hat.size());
    VectorXd winv = pr.w.cwiseInverse();
    for (Eigen::Index j = 0; j < r.beta_hat.size(); ++j) {
        r.se_beta[j] = std::sqrt(r.phi * Wt.col(j).cwiseAbs2().dot(winv));
        r.p_values[j] = wald_p_value(r.beta_hat[j], r.se_beta[j]);
    }
    if (tag.penalized && problem.Bp.cols() > 0) r.lambda = pr.lambda;
    r.iterations = pr.iterations;
    r.converged = pr.converged;
    r.trace = pr.trace;
    return r;
}

// [Z | B_null] + B_pen when penalized, [Z | B] otherwise.
PirlsProblem smooth_problem(const MatrixXd& Z, const MatrixXd& B, const VectorXd& penalty, int M, bool penalized,
                            const RegressionProblem& prob) {
    const Eigen::Index n = Z.rows(), k = B.cols(), q = Z.cols();
    const Eigen::Index nu = penalized ? M : k;
    PirlsProblem pb;
    pb.Xu.resize(n, q + nu);
    pb.Xu.leftCols(q) = Z;
    pb.Xu.rightCols(nu) = B.leftCols(nu);
    pb.Bp = B.rightCols(k - nu);
    pb.pen = penalty.tail(k - nu);
    pb.identified = static_cast<int>(q);
    pb.lambda = prob.lambda;
    pb.grid = prob.lambda_grid();
    return pb;
}

}  // namespace

FitResult fit_glm_null(const RegressionProblem& prob, const ExponentialFamily& fam) {
    check_glm_problem(prob, fam);
    PirlsProblem pb;
    pb.Xu = prob.full_design();
    pb.Bp.resize(prob.n(), 0);
    pb.pen.resize(0);
    pb.identified = static_cast<int>(pb.Xu.cols());
    PirlsResult pr = pirls(fam, prob.y, pb);
    FitResult r = assemble_glm(prob, fam, {ModelKind::null_model, true}, pb, pr, pb.identified, false);
    r.f_hat.setZero();
    return r;
}

FitResult fit_glm_spatial(const RegressionProblem& prob, const ExponentialFamily& fam) {
    check_glm_problem(prob, fam);
    const TpsBasis& b = prob.basis;
    PirlsProblem pb = smooth_problem(prob.X, b.columns(), b.penalty(), b.nullspace_dim(), prob.penalized, prob);
    PirlsResult pr = pirls(fam, prob.y, pb);
    return assemble_glm(prob, fam, {ModelKind::spatial, prob.penalized}, pb, pr, prob.p(), true);
}

WeightedResidual weighted_spatial_residual(const TpsBasis& basis, const VectorXd& x, const VectorXd& w,
                                           bool penalized, std::optional<double> lambda,
                                           const std::vector<double>& grid) {
    const int M = basis.nullspace_dim(), k = basis.rank();
    const MatrixXd& B = basis.columns();
    const int nu = penalized ? M : k;
    PenalizedWLS eng(B.leftCols(nu), B.rightCols(k - nu), basis.penalty().tail(k - nu), w);
    eng.set_response(x);
    WeightedResidual out;
    if (k > nu) {
        if (lambda) {
            if (!(*lambda > 0.0)) throw NonPositiveLambda("lambda_x must be > 0");
            out.lambda = *lambda;
        } else {
            out.lambda = eng.select_lambda(grid.empty() ? default_lambda_grid(basis.penalty()) : grid);
        }
    }
    auto sol = eng.solve(out.lambda);
    out.fitted = sol.eta;
    out.residual = x - sol.eta;
    out.coef.resize(k);
    out.coef << sol.a, sol.c;
    return out;
}

FitResult fit_glm_spatial_plus(const RegressionProblem& prob, const ExponentialFamily& fam) {
    check_glm_problem(prob, fam);
    FitResult spatial = fit_glm_spatial(prob, fam);
    const TpsBasis& b = prob.basis;
    const int p = prob.p();
    MatrixXd R(prob.n(), p);
    std::vector<double> lx(p, 0.0);
    for (int j = 0; j < p; ++j) {
        std::optional<double> fixed;
        if (j < static_cast<int>(prob.lambda_x.size())) fixed = prob.lambda_x[j];
        VectorXd x = prob.X.col(j);
        auto res = weighted_spatial_residual(b, x, spatial.weights, prob.penalized, fixed, prob.lambda_grid());
        if (covariate_is_spatial(b, x, res.residual))
            throw DegenerateResiduals("covariate " + std::to_string(j + 1) + " is numerically spatial");
        R.col(j) = res.residual;
        lx[j] = res.lambda;
    }
    PirlsProblem pb = smooth_problem(R, b.columns(), b.penalty(), b.nullspace_dim(), prob.penalized, prob);
    PirlsResult pr = pirls(fam, prob.y, pb);
    FitResult r = assemble_glm(prob, fam, {ModelKind::spatial_plus, prob.penalized}, pb, pr, p, true);
    if (prob.penalized) r.lambda_x = lx;
    return r;
}

MatrixXd weighted_orthogonalize(const MatrixXd& X, const VectorXd& w, const MatrixXd& B) {
    VectorXd sw = w.cwiseSqrt();
    MatrixXd coef = (sw.asDiagonal() * X).colPivHouseholderQr().solve(sw.asDiagonal() * B);
    return B - X * coef;
}

FitResult fit_glm_rsr(const RegressionProblem& prob, const ExponentialFamily& fam) {
    check_glm_problem(prob, fam);
    const TpsBasis& b = prob.basis;
    MatrixXd Xf = prob.full_design();
    const int pf = static_cast<int>(Xf.cols()), n = prob.n();

    // The projection depends on the weights it produces, so iterate until the
    // weights used to build it reproduce themselves.
    VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = fam.weight(fam.initial_mu(prob.y[i]));
    VectorXd eta_prev, beta_prev;
    PirlsProblem pb;
    PirlsResult pr;
    bool done = false;
    for (int outer = 0; outer < 100 && !done; ++outer) {
        MatrixXd Bt = weighted_orthogonalize(Xf, w, b.columns());
        pb = smooth_problem(Xf, Bt, b.penalty(), b.nullspace_dim(), prob.penalized, prob);
        pr = pirls(fam, prob.y, pb, {}, outer > 0 ? &eta_prev : nullptr);
        VectorXd beta = pr.a.head(pf);
        double dw = (pr.w - w).cwiseAbs().maxCoeff() / w.cwiseAbs().maxCoeff();
        if (outer > 0) {
            double db = (beta - beta_prev).norm() / std::max(beta.norm(), 1e-12);
            done = dw < 1e-10 && db < 1e-10;
        }
        if (fam.kind == FamilyKind::gaussian) done = true;
        if (!done) w = pr.w;
        eta_prev = pr.eta;
        beta_prev = beta;
    }
    if (!done) throw PirlsDivergence("RSR reweighting did not settle");
    FitResult r = assemble_glm(prob, fam, {ModelKind::rsr, prob.penalized}, pb, pr, pf, false);
    // Report the weights the basis was orthogonalized with.
    r.weights = w;
    return r;
}

FitResult fit_glm_model(const RegressionProblem& prob, const ModelTag& tag, const ExponentialFamily& fam) {
    RegressionProblem local = prob;
    local.penalized = tag.penalized;
    switch (tag.kind) {
        case ModelKind::null_model: return fit_glm_null(local, fam);
        case ModelKind::spatial: return fit_glm_spatial(local, fam);
        case ModelKind::spatial_plus: return fit_glm_spatial_plus(local, fam);
        case ModelKind::rsr: return fit_glm_rsr(local, fam);
        default: break;
    }
    throw InvalidInput("model '" + tag.name() + "' has no generalized form");
}

VectorXd simulate_glm_response(const VectorXd& eta, const ExponentialFamily& fam, std::mt19937_64& rng,
                               double gaussian_sd) {
    VectorXd y(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        double mu = fam.linkinv(eta[i]);
        if (!std::isfinite(eta[i]) || !fam.valid_mu(mu))
            throw MeanOutOfRange("mean " + std::to_string(mu) + " outside the " + fam.name() + " range");
        switch (fam.kind) {
            case FamilyKind::gaussian: y[i] = std::normal_distribution<double>(mu, gaussian_sd)(rng); break;
            case FamilyKind::poisson: y[i] = static_cast<double>(std::poisson_distribution<long>(mu)(rng)); break;
            case FamilyKind::exponential: y[i] = std::exponential_distribution<double>(1.0 / mu)(rng); break;
            case FamilyKind::binomial:
                y[i] = static_cast<double>(std::binomial_distribution<int>(fam.n_bin, mu / fam.n_bin)(rng));
                break;
        }
    }
    return y;
}

}  // namespace spatialplus
