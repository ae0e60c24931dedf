#include "spatialplus/asymptotics.hpp"

#include "spatialplus/basis.hpp"
#include "spatialplus/errors.hpp"
#include "spatialplus/random_fields.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace spatialplus {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

int square_side(int n) {
    int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (s * s != n) throw InvalidInput("d = 2 ladders need perfect-square n, got " + std::to_string(n));
    return s;
}

MatrixXd grid_on(int n, int d, double extent) {
    if (d == 1) {
        MatrixXd p(n, 1);
        for (int i = 0; i < n; ++i) p(i, 0) = extent * i / (n - 1);
        return p;
    }
    if (d == 2) {
        int s = square_side(n);
        MatrixXd p(n, 2);
        for (int i = 0; i < n; ++i) p.row(i) << extent * (i % s) / (s - 1), extent * (i / s) / (s - 1);
        return p;
    }
    throw InvalidInput("lab designs support d = 1 or d = 2");
}

SmootherOperator full_operator(const MatrixXd& sites, int m) {
    return SmootherOperator(build_basis(LocationSet(sites), m));
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
}

double sd_of(const std::vector<double>& v) {
    double mu = mean_of(v), ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
}

// Monte Carlo per-draw quantities for one estimator at one rung.
struct Draws {
    std::vector<double> bias, var, b2, v;
};

// Independent draws per rung, shared by every estimator at that rung.
std::mt19937_64 rung_stream(std::uint64_t seed, int n, int rep) {
    return substream(seed ^ splitmix64(static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(rep));
}

VectorXd draw_x(const VectorXd& fx, double sigma_x, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    VectorXd x(fx.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = fx[i] + sigma_x * N(rng);
    return x;
}

void check_kinds(const std::vector<ModelKind>& kinds) {
    if (kinds.empty()) throw InvalidInput("no estimators requested");
    for (ModelKind k : kinds)
        if (k != ModelKind::spatial && k != ModelKind::spatial_plus && k != ModelKind::partial_residual)
            throw InvalidInput("lab estimators are spatial, spatial_plus and partial_residual");
}

// Stepwise comparison of consecutive rungs in units of their combined MC error.
bool no_decrease(const std::vector<double>& r, const std::vector<double>& se) {
    for (size_t i = 1; i < r.size(); ++i)
        if (r[i] < r[i - 1] - 2.0 * std::hypot(se[i], se[i - 1])) return false;
    return true;
}

bool no_increase(const std::vector<double>& r, const std::vector<double>& se) {
    for (size_t i = 1; i < r.size(); ++i)
        if (r[i] > r[i - 1] + 2.0 * std::hypot(se[i], se[i - 1])) return false;
    return true;
}

}  // namespace

RateSpec RateSpec::optimal(int m, int d, std::vector<int> ladder) {
    RateSpec s;
    s.m = m;
    s.d = d;
    s.n_ladder = std::move(ladder);
    s.delta = s.delta_x = s.optimal_delta();
    return s;
}

void RateSpec::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
    if (!(delta_x > 0.0 && delta_x < 1.0)) throw InvalidInput("delta_x must lie in (0, 1)");
    if (d < 1 || d > 2) throw InvalidInput("d must be 1 or 2");
    if (m < d) throw OrderTooSmall("the rate results assume m >= d");
    if (2 * m <= d) throw OrderTooSmall("need 2m > d");
    if (n_ladder.size() < 2) throw InvalidInput("ladder needs at least two rungs");
    for (size_t i = 1; i < n_ladder.size(); ++i)
        if (n_ladder[i] <= n_ladder[i - 1]) throw InvalidInput("ladder must be increasing");
    if (n_ladder.front() <= nullspace_dim(m, d) + 2) throw InvalidInput("smallest rung too small");
    if (replicates < 2) throw InvalidInput("replicates must be >= 2");
}

void LabScenario::validate() const {
    if (!(extent > 0.0)) throw InvalidInput("extent must be > 0");
    if (!(sigma > 0.0)) throw InvalidInput("sigma must be > 0");
    if (!(sigma_x >= 0.0)) throw InvalidInput("sigma_x must be >= 0");
    if (!std::isfinite(frequency) || !std::isfinite(fx_amplitude) || !std::isfinite(f_scale) || !std::isfinite(beta))
        throw InvalidInput("scenario parameters must be finite");
}

MatrixXd lab_sites(int n, int d, double extent) { return grid_on(n, d, extent); }

MatrixXd unit_grid(int n, int d) { return grid_on(n, d, 1.0); }

VectorXd lab_fx(const LabScenario& sc, const MatrixXd& sites) {
    VectorXd f(sites.rows());
    const double w = 2.0 * std::numbers::pi * sc.frequency / sc.extent;
    for (Eigen::Index i = 0; i < sites.rows(); ++i) {
        double v = sc.fx_amplitude;
        for (Eigen::Index j = 0; j < sites.cols(); ++j) v *= std::cos(w * sites(i, j));
        f[i] = v;
    }
    return f;
}

LinearForm estimator_linear_form(ModelKind kind, const SmootherOperator& op, const VectorXd& x, double lambda,
                                 double lambda_x) {
    if (!(lambda > 0.0)) throw NonPositiveLambda("lambda must be > 0");
    LinearForm out;
    VectorXd Sx = op.apply(x, lambda);
    switch (kind) {
        case ModelKind::spatial: {
            VectorXd Hx = x - Sx;
            out.L = Hx / x.dot(Hx);
            out.g = Sx;
            break;
        }
        case ModelKind::spatial_plus: {
            if (!(lambda_x > 0.0)) throw NonPositiveLambda("lambda_x must be > 0");
            VectorXd Sxx = op.apply(x, lambda_x);
            VectorXd r = x - Sxx;
            if (covariate_is_spatial(op.basis(), x, r)) throw DegenerateResiduals("covariate is numerically spatial");
            VectorXd Sr = op.apply(r, lambda);
            VectorXd Hr = r - Sr;
            out.L = Hr / r.dot(Hr);
            out.g = Sr + Sxx;
            break;
        }
        case ModelKind::partial_residual: {
            VectorXd Hx = x - Sx;
            VectorXd H2x = Hx - op.apply(Hx, lambda);
            out.L = H2x / x.dot(H2x);
            out.g = Sx;
            break;
        }
        default: throw InvalidInput("no fixed-lambda linear form for " + kind_name(kind));
    }
    if (!out.L.allFinite()) throw SingularDesign("covariate has no component outside the smoother's span");
    return out;
}

Slope loglog_slope(const std::string& name, const std::vector<double>& x, const std::vector<double>& y) {
    Slope s;
    s.name = name;
    const size_t k = x.size();
    if (k < 2 || y.size() != k) {
        s.value = s.se = nan_v;
        return s;
    }
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(k), ly(k);
    for (size_t i = 0; i < k; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        mx += lx[i] / k;
        my += ly[i] / k;
    }
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    s.value = sxy / sxx;
    if (k < 3) {
        s.se = nan_v;
        return s;
    }
    double rss = 0.0;
    for (size_t i = 0; i < k; ++i) {
        double e = ly[i] - my - s.value * (lx[i] - mx);
        rss += e * e;
    }
    s.se = std::sqrt(rss / (k - 2) / sxx);
    return s;
}

double RateRow::get(const std::string& key) const {
    for (const auto& [k, v] : values)
        if (k == key) return v;
    throw InvalidInput("no column '" + key + "' in rate row");
}

const AcceptanceCheck& RateReport::verdict(const std::string& id) const {
    for (const auto& v : verdicts)
        if (v.id == id) return v;
    throw InvalidInput("no verdict '" + id + "' in " + check + " report");
}

const Slope& RateReport::slope(const std::string& name) const {
    for (const auto& s : slopes)
        if (s.name == name) return s;
    throw InvalidInput("no slope '" + name + "' in " + check + " report");
}

RateReport eigen_rate_check(int d, int m, const std::vector<int>& n_ladder) {
    if (n_ladder.empty()) throw InvalidInput("empty ladder");
    RateReport rep;
    rep.check = "eigen";
    const int M = nullspace_dim(m, d);
    const double target = 2.0 * m / d;
    bool slopes_ok = true, zeros_ok = true;
    std::string detail;
    for (int n : n_ladder) {
        if (n / 2 < 2 * M + 2) throw InvalidInput("rung n = " + std::to_string(n) + " is too small for a slope fit");
        SmootherOperator op = full_operator(unit_grid(n, d), m);
        const VectorXd& mu = op.mu();
        std::vector<double> k, v;
        for (int j = 2 * M; j <= n / 2; ++j) {
            k.push_back(j);
            v.push_back(mu[j - 1]);
        }
        Slope s = loglog_slope("n=" + std::to_string(n), k, v);
        const double mu_max = mu.maxCoeff();
        int zeros = 0;
        for (Eigen::Index j = 0; j < mu.size(); ++j)
            if (mu[j] <= 1e-8 * mu_max) ++zeros;
        bool ok = std::abs(s.value - target) <= 0.2 * target;
        slopes_ok = slopes_ok && ok;
        zeros_ok = zeros_ok && zeros == M;
        rep.rows.push_back({"eigen", n, {{"slope", s.value}, {"slope_se", s.se}, {"target", target},
                                         {"zero_eigenvalues", static_cast<double>(zeros)}, {"M", static_cast<double>(M)},
                                         {"mu_min_positive_rel", mu[M] / mu_max}}});
        rep.slopes.push_back(s);
        detail += (detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " slope " + fmt(s.value) +
                  " zeros " + std::to_string(zeros);
    }
    rep.verdicts.push_back({"eigen_slope", "log mu_k slope within 2m/d +- 20% at every rung", slopes_ok,
                            detail + " (target " + fmt(target) + ")"});
    rep.verdicts.push_back({"eigen_zeros", "exactly M eigenvalues below 1e-8 mu_max at every rung", zeros_ok,
                            "M = " + std::to_string(M)});
    return rep;
}

RateReport trace_rate_check(int d, int m, const std::vector<int>& n_ladder, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
    if (n_ladder.size() < 2) throw InvalidInput("ladder needs at least two rungs");
    RateReport rep;
    rep.check = "trace";
    const int M = nullspace_dim(m, d);
    std::vector<double> stat;
    bool limits_ok = true;
    for (int n : n_ladder) {
        SmootherOperator op = full_operator(unit_grid(n, d), m);
        const double lam = std::pow(static_cast<double>(n), -delta);
        const double tr = op.trace(lam);
        const double c = (tr - M) * std::pow(lam, d / (2.0 * m));
        stat.push_back(c);
        const double s = op.lambda_scale();
        const double tr_hi = op.trace(1e12 / s), tr_lo = op.trace(1e-9 / op.mu().maxCoeff());
        limits_ok = limits_ok && std::abs(tr_hi - M) < 1e-6 * n && std::abs(tr_lo - op.rank()) < 1e-6 * n;
        rep.rows.push_back({"trace", n, {{"lambda", lam}, {"trace", tr}, {"statistic", c},
                                         {"trace_lambda_large", tr_hi}, {"trace_lambda_small", tr_lo}}});
    }
    const double ratio = *std::max_element(stat.begin(), stat.end()) / *std::min_element(stat.begin(), stat.end());
    std::vector<double> ns(n_ladder.begin(), n_ladder.end()), tr_minus_m;
    for (const auto& r : rep.rows) tr_minus_m.push_back(r.get("trace") - M);
    rep.slopes.push_back(loglog_slope("trace_minus_M_vs_n", ns, tr_minus_m));
    rep.verdicts.push_back({"trace_bounded", "(Tr S - M) lambda^{d/2m} max/min ratio below 4", ratio < 4.0,
                            "ratio " + fmt(ratio)});
    rep.verdicts.push_back({"trace_limits", "Tr S tends to M as lambda grows and to n as lambda vanishes", limits_ok,
                            ""});
    return rep;
}

namespace {

// Shared driver for the separation and AMSE checks: for each rung, draws x
// replicates and evaluates the estimators' linear forms on each draw.
template <class PerDraw>
void run_ladder(const LabScenario& sc, const RateSpec& spec, const std::vector<ModelKind>& kinds, PerDraw&& per_draw) {
    sc.validate();
    spec.validate();
    check_kinds(kinds);
    for (int n : spec.n_ladder) {
        MatrixXd sites = lab_sites(n, spec.d, sc.extent);
        SmootherOperator op = full_operator(sites, spec.m);
        VectorXd fx = lab_fx(sc, sites);
        VectorXd f = sc.f_scale * fx;
        const double lam = std::pow(static_cast<double>(n), -spec.delta);
        const double lamx = std::pow(static_cast<double>(n), -spec.delta_x);
        std::vector<Draws> draws(kinds.size());
        for (int rep = 0; rep < spec.replicates; ++rep) {
            std::mt19937_64 rng = rung_stream(spec.seed, n, rep);
            VectorXd x = draw_x(fx, sc.sigma_x, rng);
            VectorXd mean = sc.beta * x + f;
            for (size_t e = 0; e < kinds.size(); ++e) {
                LinearForm lf = estimator_linear_form(kinds[e], op, x, lam, lamx);
                per_draw(op, lam, lf, x, mean, f, draws[e]);
            }
        }
        per_draw.rung(n, lam, lamx, draws);
    }
}

}  // namespace

RateReport bias_sd_separation(const LabScenario& sc, const RateSpec& spec, const std::vector<ModelKind>& kinds) {
    RateReport rep;
    rep.check = "separation";
    rep.hard = false;
    std::vector<std::vector<double>> ratio(kinds.size()), ratio_se(kinds.size());
    std::vector<double> ns;

    struct Acc {
        const LabScenario& sc;
        const std::vector<ModelKind>& kinds;
        RateReport& rep;
        std::vector<std::vector<double>>& ratio;
        std::vector<std::vector<double>>& ratio_se;
        std::vector<double>& ns;
        void operator()(const SmootherOperator&, double, const LinearForm& lf, const VectorXd&, const VectorXd& mean,
                        const VectorXd&, Draws& d) const {
            d.bias.push_back(lf.L.dot(mean) - sc.beta);
            d.var.push_back(sc.sigma * sc.sigma * lf.L.squaredNorm());
        }
        void rung(int n, double lam, double lamx, const std::vector<Draws>& draws) const {
            ns.push_back(n);
            for (size_t e = 0; e < kinds.size(); ++e) {
                const Draws& d = draws[e];
                double bias = mean_of(d.bias);
                double bias_se = sd_of(d.bias) / std::sqrt(static_cast<double>(d.bias.size()));
                double sd = std::sqrt(mean_of(d.var));
                double r = std::abs(bias) / sd, r_se = bias_se / sd;
                ratio[e].push_back(r);
                ratio_se[e].push_back(r_se);
                rep.rows.push_back({kind_name(kinds[e]), n,
                                    {{"lambda", lam}, {"lambda_x", lamx}, {"bias", bias}, {"bias_se", bias_se},
                                     {"sd", sd}, {"ratio", r}, {"ratio_se", r_se}, {"n_var", n * sd * sd}}});
            }
        }
    } acc{sc, kinds, rep, ratio, ratio_se, ns};
    run_ladder(sc, spec, kinds, acc);

    const double limit = sc.sigma_x > 0.0 ? sc.sigma * sc.sigma / (sc.sigma_x * sc.sigma_x) : nan_v;
    for (size_t e = 0; e < kinds.size(); ++e) {
        const std::string name = kind_name(kinds[e]);
        rep.slopes.push_back(loglog_slope(name + "_ratio_vs_n", ns, ratio[e]));
        const auto& r = ratio[e];
        const auto& se = ratio_se[e];
        if (kinds[e] == ModelKind::spatial) {
            bool away = r.back() > 2.0 * se.back();
            rep.verdicts.push_back({"separation_spatial",
                                    "spatial |bias|/sd shows no decrease beyond MC error and stays away from 0",
                                    no_decrease(r, se) && away,
                                    "ratios " + fmt(r.front()) + " -> " + fmt(r.back()) + " (se " + fmt(se.back()) + ")"});
            double nv = rep.rows[rep.rows.size() - kinds.size() + e].get("n_var");
            rep.verdicts.push_back({"n_var_limit", "n Var(beta_hat) of the spatial estimator within 20% of sigma^2/sigma_x^2 at the largest rung",
                                    std::abs(nv - limit) <= 0.2 * limit,
                                    "n Var " + fmt(nv) + " vs " + fmt(limit)});
        } else {
            bool drop = r.back() < r.front() - 2.0 * std::hypot(se.front(), se.back());
            rep.verdicts.push_back({"separation_" + name, name + " |bias|/sd decreases toward 0 across the ladder",
                                    no_increase(r, se) && drop,
                                    "ratios " + fmt(r.front()) + " -> " + fmt(r.back()) + " (se " + fmt(se.back()) + ")"});
        }
    }
    return rep;
}

RateReport amse_rate_check(const LabScenario& sc, const RateSpec& spec, const std::vector<ModelKind>& kinds) {
    RateReport rep;
    rep.check = "amse";
    rep.hard = false;
    std::vector<std::vector<double>> B2(kinds.size()), V(kinds.size());
    std::vector<double> ns, lams;

    struct Acc {
        const LabScenario& sc;
        const std::vector<ModelKind>& kinds;
        RateReport& rep;
        std::vector<std::vector<double>>& B2;
        std::vector<std::vector<double>>& V;
        std::vector<double>& ns;
        std::vector<double>& lams;
        void operator()(const SmootherOperator& op, double lam, const LinearForm& lf, const VectorXd&,
                        const VectorXd& mean, const VectorXd& f, Draws& d) const {
            // f_hat = F y with F = S - g L^T.
            const double n = static_cast<double>(f.size());
            VectorXd Ef = op.apply(mean, lam) - lf.g * lf.L.dot(mean);
            d.b2.push_back((Ef - f).squaredNorm() / n);
            VectorXd s = op.filter(lam);
            double trS2 = s.squaredNorm();
            VectorXd SL = op.apply(lf.L, lam);
            double fro = trS2 - 2.0 * SL.dot(lf.g) + lf.g.squaredNorm() * lf.L.squaredNorm();
            d.v.push_back(sc.sigma * sc.sigma * fro / n);
        }
        void rung(int n, double lam, double lamx, const std::vector<Draws>& draws) const {
            ns.push_back(n);
            lams.push_back(lam);
            for (size_t e = 0; e < kinds.size(); ++e) {
                const Draws& d = draws[e];
                double b2 = mean_of(d.b2), v = mean_of(d.v);
                double k = std::sqrt(static_cast<double>(d.b2.size()));
                B2[e].push_back(b2);
                V[e].push_back(v);
                rep.rows.push_back({kind_name(kinds[e]), n,
                                    {{"lambda", lam}, {"lambda_x", lamx}, {"B2", b2}, {"B2_se", sd_of(d.b2) / k},
                                     {"V", v}, {"V_se", sd_of(d.v) / k}, {"amse", b2 + v}}});
            }
        }
    } acc{sc, kinds, rep, B2, V, ns, lams};
    run_ladder(sc, spec, kinds, acc);

    const double v_target = -spec.optimal_delta();
    // At lambda = n^-delta, V = O(n^-1 lambda^{-d/2m}) = n^{-1 + delta d/2m}.
    const double v_rate = -1.0 + spec.delta * spec.d / (2.0 * spec.m);
    std::vector<Slope> vs;
    for (size_t e = 0; e < kinds.size(); ++e) {
        const std::string name = kind_name(kinds[e]);
        Slope b = loglog_slope(name + "_B2_vs_lambda", lams, B2[e]);
        Slope v = loglog_slope(name + "_V_vs_n", ns, V[e]);
        rep.slopes.push_back(b);
        rep.slopes.push_back(v);
        vs.push_back(v);
        rep.verdicts.push_back({"amse_B2_" + name, name + " log B^2 on log lambda slope within 1 +- 0.3",
                                std::abs(b.value - 1.0) <= 0.3, "slope " + fmt(b.value) + " (se " + fmt(b.se) + ")"});
        rep.verdicts.push_back({"amse_V_" + name, name + " log V on log n slope within -1 + delta d/2m +- 30%",
                                std::abs(v.value - v_rate) <= 0.3 * std::abs(v_rate),
                                "slope " + fmt(v.value) + " (se " + fmt(v.se) + "), rate " + fmt(v_rate) +
                                    ", optimal-lambda rate " + fmt(v_target)});
    }
    for (size_t e = 1; e < kinds.size(); ++e) {
        double gap = std::abs(vs[e].value - vs[0].value);
        double tol = 2.0 * std::hypot(vs[e].se, vs[0].se);
        // Deterministic series can give a zero residual error; allow 0.02 then.
        tol = std::max(tol, 0.02);
        rep.verdicts.push_back({"amse_V_match_" + kind_name(kinds[e]),
                                kind_name(kinds[e]) + " V slope matches the " + kind_name(kinds[0]) + " V slope",
                                gap <= tol, "gap " + fmt(gap) + " (tolerance " + fmt(tol) + ")"});
    }
    return rep;
}

RateReport coefficient_assumption_check(const LabScenario& sc, const RateSpec& spec) {
    sc.validate();
    spec.validate();
    RateReport rep;
    rep.check = "assumptions";
    rep.hard = false;
    std::vector<double> a3;
    bool a1_ok = true;
    double a2_last = nan_v;
    for (int n : spec.n_ladder) {
        MatrixXd sites = lab_sites(n, spec.d, sc.extent);
        SmootherOperator op = full_operator(sites, spec.m);
        const MatrixXd& Phi = op.Phi();
        VectorXd fx = lab_fx(sc, sites);
        VectorXd c = Phi.transpose() * fx;
        double s1 = 0.0, s2 = 0.0, s3 = 0.0;
        for (int rep_i = 0; rep_i < spec.replicates; ++rep_i) {
            std::mt19937_64 rng = rung_stream(spec.seed, n, rep_i);
            VectorXd eps = draw_x(VectorXd::Zero(n), sc.sigma_x, rng);
            VectorXd xi = Phi.transpose() * eps;
            s1 += xi.sum() / n;
            s2 += xi.squaredNorm() / n;
            s3 += xi.cwiseAbs().maxCoeff() / std::log(static_cast<double>(n));
        }
        const double R = spec.replicates;
        s1 /= R;
        s2 /= R;
        s3 /= R;
        a3.push_back(s3);
        a2_last = s2;
        // Averaged over R draws the A1 mean has sd sigma_x / sqrt(n R).
        a1_ok = a1_ok && std::abs(s1) <= 4.0 * sc.sigma_x / std::sqrt(n * R) + 1e-15;
        rep.rows.push_back({"assumptions", n, {{"A1_mean_xi", s1}, {"A2_mean_xi2", s2}, {"A3_sup_xi_over_log_n", s3},
                                               {"mean_c2", c.squaredNorm() / n}}});
    }
    const double s2x = sc.sigma_x * sc.sigma_x;
    double a3_ratio = nan_v;
    if (sc.sigma_x > 0.0) a3_ratio = *std::max_element(a3.begin(), a3.end()) / *std::min_element(a3.begin(), a3.end());
    rep.verdicts.push_back({"assumption_A1", "n^-1 sum xi_k within 4 MC s.e. of 0 at every rung", a1_ok, ""});
    rep.verdicts.push_back({"assumption_A2", "n^-1 sum xi_k^2 within 10% of sigma_x^2 at the largest rung",
                            sc.sigma_x > 0.0 ? std::abs(a2_last - s2x) <= 0.1 * s2x : a2_last == 0.0,
                            fmt(a2_last) + " vs " + fmt(s2x)});
    rep.verdicts.push_back({"assumption_A3", "sup |xi_k| / log n max/min ratio below 5 across the ladder",
                            sc.sigma_x > 0.0 ? a3_ratio < 5.0 : true, "ratio " + fmt(a3_ratio)});
    // n^-1 sum (c_k^x)^2 = n^-1 ||f^x||^2 tends to the mean square of f^x for a
    // fixed bounded f^x; it is reported, not required to vanish.
    rep.verdicts.push_back({"fx_energy", "n^-1 sum (c_k^x)^2 stays bounded across the ladder",
                            rep.rows.back().get("mean_c2") <= 2.0 * rep.rows.front().get("mean_c2") + 1e-12,
                            fmt(rep.rows.front().get("mean_c2")) + " -> " + fmt(rep.rows.back().get("mean_c2"))});
    return rep;
}

void write_rate_csv(std::ostream& out, const RateReport& report) {
    std::vector<std::string> cols;
    for (const auto& r : report.rows)
        for (const auto& [k, v] : r.values)
            if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    out << "series,n";
    for (const auto& c : cols) out << ',' << c;
    out << '\n';
    out.precision(12);
    for (const auto& r : report.rows) {
        out << r.series << ',' << r.n;
        for (const auto& c : cols) {
            out << ',';
            for (const auto& [k, v] : r.values)
                if (k == c) out << v;
        }
        out << '\n';
    }
}

void write_rate_json(std::ostream& out, const RateReport& report) {
    using nlohmann::json;
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["schema_version"] = 1;
    j["kind"] = "rate_report";
    j["check"] = report.check;
    j["hard"] = report.hard;
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row{{"series", r.series}, {"n", r.n}};
        for (const auto& [k, v] : r.values) row[k] = num(v);
        rows.push_back(row);
    }
    j["rows"] = rows;
    json slopes = json::array();
    for (const auto& s : report.slopes) slopes.push_back({{"name", s.name}, {"value", num(s.value)}, {"se", num(s.se)}});
    j["slopes"] = slopes;
    json verdicts = json::array();
    for (const auto& v : report.verdicts)
        verdicts.push_back({{"id", v.id}, {"description", v.description}, {"passed", v.passed}, {"detail", v.detail}});
    j["verdicts"] = verdicts;
    j["passed"] = report.passed();
    out << j.dump(2) << '\n';
}

}  // namespace spatialplus
