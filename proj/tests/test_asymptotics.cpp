#include <doctest.h>

#include "oracles.hpp"
#include "spatialplus/asymptotics.hpp"
#include "spatialplus/errors.hpp"
#include "spatialplus/random_fields.hpp"

#include <sstream>

using namespace spatialplus;

namespace {

struct Fixture {
    LabScenario sc = LabScenario::confounded();
    MatrixXd sites;
    TpsBasis basis;
    SmootherOperator op;
    VectorXd x, mean;
    double lam, lamx;

    explicit Fixture(int n) {
        sites = lab_sites(n, 1, sc.extent);
        basis = build_basis(LocationSet(sites), 2);
        op = SmootherOperator(basis);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> N(0.0, 1.0);
        VectorXd fx = lab_fx(sc, sites);
        x = fx;
        for (int i = 0; i < n; ++i) x[i] += sc.sigma_x * N(rng);
        mean = sc.beta * x + sc.f_scale * fx;
        lam = std::pow(n, -0.8);
        lamx = 0.5 * lam;
    }

    RegressionProblem problem(const VectorXd& y) const {
        RegressionProblem p;
        p.y = y;
        p.X = x;
        p.intercept = false;
        p.basis = basis;
        p.lambda = lam;
        p.lambda_x = {lamx};
        return p;
    }
};

FitResult fit_kind(ModelKind k, const RegressionProblem& p) {
    switch (k) {
        case ModelKind::spatial: return fit_spatial(p);
        case ModelKind::spatial_plus: return fit_spatial_plus(p);
        default: return fit_partial_residual(p);
    }
}

}  // namespace

TEST_CASE("linear forms reproduce the library estimators at fixed smoothing parameters") {
    Fixture fx(60);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> N(0.0, 1.0);
    VectorXd y = fx.mean;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += N(rng);
    for (ModelKind k : {ModelKind::spatial, ModelKind::spatial_plus, ModelKind::partial_residual}) {
        LinearForm lf = estimator_linear_form(k, fx.op, fx.x, fx.lam, fx.lamx);
        FitResult fit = fit_kind(k, fx.problem(y));
        CHECK(oracle::rel_err(VectorXd(fit.beta_weights.col(0)), lf.L) < 1e-8);
        CHECK(fit.beta_hat[0] == doctest::Approx(lf.L.dot(y)).epsilon(1e-10));
        VectorXd fhat = fx.op.apply(y, fx.lam) - lf.g * fit.beta_hat[0];
        CHECK(oracle::rel_err(fit.f_hat, fhat) < 1e-8);
    }
}

TEST_CASE("analytic mean and variance of beta_hat match 2000 Monte Carlo fits") {
    Fixture fx(60);
    const int R = 2000;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N(0.0, 1.0);
    for (ModelKind k : {ModelKind::spatial, ModelKind::spatial_plus, ModelKind::partial_residual}) {
        LinearForm lf = estimator_linear_form(k, fx.op, fx.x, fx.lam, fx.lamx);
        const double mean_a = lf.L.dot(fx.mean);
        const double var_a = fx.sc.sigma * fx.sc.sigma * lf.L.squaredNorm();
        std::vector<double> b(R);
        for (int r = 0; r < R; ++r) {
            VectorXd y = fx.mean;
            for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += fx.sc.sigma * N(rng);
            b[r] = fit_kind(k, fx.problem(y)).beta_hat[0];
        }
        double m = 0.0, v = 0.0;
        for (double bi : b) m += bi / R;
        for (double bi : b) v += (bi - m) * (bi - m) / (R - 1);
        CAPTURE(kind_name(k));
        CHECK(std::abs(m - mean_a) <= 3.0 * std::sqrt(var_a / R));
        CHECK(std::abs(v - var_a) <= 3.0 * var_a * std::sqrt(2.0 / (R - 1)));
    }
}

TEST_CASE("eigenvalue growth rates on regular designs") {
    RateReport d1 = eigen_rate_check(1, 2, {100, 125, 150});
    CHECK(d1.passed());
    for (const auto& row : d1.rows) CHECK(row.get("zero_eigenvalues") == 2.0);
    RateReport d2 = eigen_rate_check(2, 2, {100, 225, 400});
    CHECK(d2.passed());
    CHECK(d2.rows.back().get("slope") == doctest::Approx(2.0).epsilon(0.2));
    CHECK(d2.rows.front().get("M") == 3.0);
    CHECK_THROWS_AS(eigen_rate_check(2, 2, {99}), InvalidInput);
}

TEST_CASE("trace boundedness across the ladder") {
    RateReport t = trace_rate_check(2, 2, {100, 225, 400}, 0.5);
    CHECK(t.verdict("trace_bounded").passed);
    CHECK(t.verdict("trace_limits").passed);
    for (const auto& row : t.rows) {
        CHECK(row.get("trace") > 3.0);
        CHECK(row.get("trace") < row.n);
    }
    CHECK_THROWS_AS(trace_rate_check(2, 2, {100, 225}, 1.0), InvalidInput);
}

TEST_CASE("without confounding the spatial estimator is unbiased and the spatial+ bias is o(n^-1/2)") {
    LabScenario sc;
    sc.fx_amplitude = 0.0;
    sc.f_scale = 0.0;
    RateSpec spec = RateSpec::optimal(2, 1, {60, 120, 240});
    spec.replicates = 200;
    RateReport r = bias_sd_separation(sc, spec, {ModelKind::spatial, ModelKind::spatial_plus});
    std::vector<double> root_n_bias;
    for (const auto& row : r.rows) {
        CAPTURE(row.series);
        CAPTURE(row.n);
        if (row.series == "spatial") {
            // L^T x = 1, so E(beta_hat | x) = beta exactly.
            CHECK(std::abs(row.get("bias")) <= 1e-10);
        } else {
            // Smoothing leaves part of beta S_x x in the response residual,
            // which correlates with r^x; the effect shrinks like 1/n.
            CHECK(row.get("ratio") < 0.1);
            root_n_bias.push_back(std::sqrt(row.n) * std::abs(row.get("bias")));
        }
    }
    REQUIRE(root_n_bias.size() == 3);
    CHECK(root_n_bias[1] < root_n_bias[0]);
    CHECK(root_n_bias[2] < root_n_bias[1]);
}

TEST_CASE("separation report structure and determinism") {
    RateSpec spec = RateSpec::optimal(2, 1, {60, 120});
    spec.replicates = 10;
    RateReport a = bias_sd_separation(LabScenario::confounded(), spec);
    RateReport b = bias_sd_separation(LabScenario::confounded(), spec);
    std::ostringstream sa, sb;
    write_rate_csv(sa, a);
    write_rate_csv(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(a.rows.size() == 6);
    CHECK(a.slopes.size() == 3);
    CHECK(!a.hard);
    CHECK_NOTHROW(a.verdict("separation_spatial"));
    CHECK_NOTHROW(a.verdict("separation_spatial_plus"));
    CHECK_NOTHROW(a.verdict("n_var_limit"));
    CHECK(sa.str().rfind("series,n,lambda,lambda_x,bias,bias_se,sd,ratio,ratio_se,n_var\n", 0) == 0);

    spec.seed += 1;
    std::ostringstream sc;
    write_rate_csv(sc, bias_sd_separation(LabScenario::confounded(), spec));
    CHECK(sc.str() != sa.str());

    RateSpec d2 = RateSpec::optimal(2, 2, {64, 144});
    d2.replicates = 5;
    CHECK_NOTHROW(bias_sd_separation(LabScenario::confounded(), d2));
    d2.n_ladder = {64, 150};
    CHECK_THROWS_AS(bias_sd_separation(LabScenario::confounded(), d2), InvalidInput);
}

TEST_CASE("variance rate of f_hat at the optimal lambda") {
    RateSpec spec = RateSpec::optimal(2, 1, {100, 200, 400});
    spec.replicates = 20;
    RateReport r = amse_rate_check(LabScenario::smooth(), spec);
    CHECK(r.verdict("amse_V_spatial").passed);
    CHECK(r.verdict("amse_V_spatial_plus").passed);
    for (const auto& row : r.rows) CHECK(row.get("amse") == doctest::Approx(row.get("B2") + row.get("V")));

    // No covariate signal and a vanishing lambda: the smooth interpolates.
    SmootherOperator op(build_basis(LocationSet(lab_sites(50, 1, 10.0)), 2));
    VectorXd f = lab_fx(LabScenario::smooth(), lab_sites(50, 1, 10.0));
    CHECK(amse_components(op, f, 1e-10 / op.mu().maxCoeff(), 1.0).B2 < 1e-12);
}

TEST_CASE("coefficient assumptions for iid covariate noise") {
    RateSpec spec = RateSpec::optimal(2, 1, {250, 500, 1000});
    spec.replicates = 5;
    RateReport r = coefficient_assumption_check(LabScenario::smooth(), spec);
    CHECK(!r.hard);
    CHECK(r.verdict("assumption_A1").passed);
    CHECK(r.verdict("assumption_A2").passed);
    CHECK(r.verdict("assumption_A3").passed);
    CHECK(r.rows.back().get("A2_mean_xi2") == doctest::Approx(0.01).epsilon(0.1));
    CHECK(r.rows.back().get("mean_c2") == doctest::Approx(0.5).epsilon(0.01));

    LabScenario quiet = LabScenario::smooth();
    quiet.sigma_x = 0.0;
    RateReport q = coefficient_assumption_check(quiet, spec);
    for (const auto& row : q.rows) {
        CHECK(row.get("A1_mean_xi") == 0.0);
        CHECK(row.get("A2_mean_xi2") == 0.0);
        CHECK(row.get("A3_sup_xi_over_log_n") == 0.0);
    }
}

TEST_CASE("rate specification contracts") {
    RateSpec s = RateSpec::optimal(2, 1, {100, 200});
    CHECK(s.delta == doctest::Approx(0.8));
    s.delta = 1.0;
    CHECK_THROWS_AS(s.validate(), InvalidInput);
    s.delta = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidInput);
    s = RateSpec::optimal(1, 2, {100, 225});
    CHECK_THROWS_AS(s.validate(), OrderTooSmall);
    s = RateSpec::optimal(2, 1, {200, 100});
    CHECK_THROWS_AS(s.validate(), InvalidInput);

    Slope sl = loglog_slope("a", {1, 2, 4, 8}, {3, 12, 48, 192});
    CHECK(sl.value == doctest::Approx(2.0));
    CHECK(sl.se == doctest::Approx(0.0).scale(1.0));
}
