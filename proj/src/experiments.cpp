#include "spatialplus/experiments.hpp"

#include "spatialplus/errors.hpp"
#include "spatialplus/smoothing.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace spatialplus {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InvalidInput("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    double d = to_double(key, v);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw InvalidInput("config key '" + key + "': expected an integer");
    return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidInput("config key '" + key + "': expected true/false");
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

double relative_gap(const VectorXd& a, const VectorXd& b) { return (a - b).norm() / std::max(1.0, a.norm()); }

// Type-7 sample quantile of a sorted vector.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return nan_v;
    double h = q * (sorted.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile(v, 0.5);
}

bool trace_monotone(const std::vector<PirlsStep>& trace) {
    for (size_t i = 1; i < trace.size(); ++i) {
        const auto& s = trace[i];
        if (s.penalized_deviance_after > s.penalized_deviance_before + 1e-8 * (std::abs(s.penalized_deviance_before) + 1.0))
            return false;
    }
    return true;
}

struct ReplicateOutcome {
    std::vector<CellResult> cells;
    ReplicateIdentities ids;
};

CellResult cell_from_fit(int r, const ModelTag& tag, const FitResult& fit, const VectorXd& truth) {
    CellResult c;
    c.replicate = r;
    c.model = tag.name();
    c.ok = true;
    int j = fit.index_of("x");
    c.beta = fit.beta_hat[j];
    c.se = fit.se_beta[j];
    c.mse = mse_fitted(fit, truth);
    c.log_mse = std::log(c.mse);
    c.lambda = tag.penalized && tag.kind != ModelKind::null_model ? fit.lambda : nan_v;
    c.lambda_x = fit.lambda_x.empty() || !tag.penalized ? nan_v : fit.lambda_x[0];
    c.edf = fit.edf;
    c.iterations = fit.iterations;
    c.monotone = trace_monotone(fit.trace);
    return c;
}

CellResult failed_cell(int r, const ModelTag& tag, const std::string& what) {
    CellResult c;
    c.replicate = r;
    c.model = tag.name();
    c.ok = false;
    c.error = what;
    c.beta = c.se = c.mse = c.log_mse = c.lambda = c.lambda_x = c.edf = nan_v;
    return c;
}

ReplicateOutcome run_replicate(const ExperimentConfig& cfg, const std::vector<ModelTag>& models, int r) {
    const bool gaussian = cfg.scenario.family.kind == FamilyKind::gaussian;
    ReplicateOutcome out;
    out.ids.replicate = r;
    Replicate rep;
    try {
        rep = generate_replicate(cfg.scenario, r);
    } catch (const Error& e) {
        for (const auto& t : models) out.cells.push_back(failed_cell(r, t, e.what()));
        out.ids.fx_beta_gap = out.ids.fx_fitted_gap = out.ids.rsr_null_gap = nan_v;
        return out;
    }
    RegressionProblem prob = problem_from_replicate(rep);
    if (gaussian) {
        // gSEM and spatial+ share the GCV smooth of x.
        try {
            SmootherOperator op(prob.basis);
            prob.lambda_x = {select_lambda(op, prob.X.col(0), prob.lambda_grid())};
        } catch (const Error&) {
            prob.lambda_x.clear();
        }
    }

    std::map<std::string, FitResult> fits;
    for (const auto& tag : models) {
        try {
            FitResult f = gaussian ? fit_model(prob, tag) : fit_glm_model(prob, tag, cfg.scenario.family);
            out.cells.push_back(cell_from_fit(r, tag, f, rep.mean));
            fits.emplace(tag.name(), std::move(f));
        } catch (const Error& e) {
            out.cells.push_back(failed_cell(r, tag, e.what()));
        }
    }

    auto beta = [&](const std::string& m) { return fits.at(m).coef("x"); };
    auto has = [&](const std::string& m) { return fits.count(m) > 0; };
    out.ids.fx_beta_gap = out.ids.fx_fitted_gap = out.ids.rsr_null_gap = nan_v;
    if (has("spatial_fx") && has("spatial_plus_fx")) {
        double bg = relative_gap(beta("spatial_fx"), beta("spatial_plus_fx"));
        double fg = relative_gap(fits.at("spatial_fx").fitted, fits.at("spatial_plus_fx").fitted);
        if (has("gsem_fx")) {
            bg = std::max({bg, relative_gap(beta("spatial_fx"), beta("gsem_fx"))});
            fg = std::max({fg, relative_gap(fits.at("spatial_fx").fitted, fits.at("gsem_fx").fitted)});
        }
        out.ids.fx_beta_gap = bg;
        out.ids.fx_fitted_gap = fg;
    }
    if (has("rsr") && has("null")) out.ids.rsr_null_gap = relative_gap(beta("rsr"), beta("null"));
    return out;
}

void for_each_replicate(int count, int threads, const std::function<void(int)>& job) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int r = 0; r < count; ++r) job(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int r = next++; r < count; r = next++) job(r);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

const ModelSummary* find(const std::vector<ModelSummary>& s, const std::string& name) {
    for (const auto& m : s)
        if (m.model == name) return &m;
    return nullptr;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void gaussian_checks(ExperimentReport& rep) {
    const auto& S = rep.summary;
    const double beta = rep.config.scenario.beta;
    auto bias = [&](const ModelSummary* m) { return std::abs(m->beta_mean - beta); };

    {
        double bg = 0.0, fg = 0.0;
        bool any = false;
        for (const auto& id : rep.identities) {
            if (std::isnan(id.fx_beta_gap)) continue;
            any = true;
            bg = std::max(bg, id.fx_beta_gap);
            fg = std::max(fg, id.fx_fitted_gap);
        }
        if (any)
            rep.checks.push_back({"fx_identity", "unpenalized spatial, gSEM and spatial+ agree to 1e-8",
                                  bg <= 1e-8 && fg <= 1e-8, "max beta gap " + fmt(bg) + ", max fitted gap " + fmt(fg)});
    }
    {
        double g = 0.0;
        bool any = false;
        for (const auto& id : rep.identities) {
            if (std::isnan(id.rsr_null_gap)) continue;
            any = true;
            g = std::max(g, id.rsr_null_gap);
        }
        const ModelSummary* rsr = find(S, "rsr");
        const ModelSummary* sp = find(S, "spatial");
        if (any && rsr && sp) {
            double ratio = rsr->mse_median / sp->mse_median;
            rep.checks.push_back({"rsr_identity", "RSR beta equals null beta to 1e-10; RSR median MSE within 10% of spatial",
                                  g <= 1e-10 && std::abs(ratio - 1.0) <= 0.10,
                                  "max gap " + fmt(g) + ", MSE ratio " + fmt(ratio)});
        }
    }
    const ModelSummary* plus = find(S, "spatial_plus");
    const ModelSummary* null_m = find(S, "null");
    const ModelSummary* rsr = find(S, "rsr");
    const ModelSummary* sp = find(S, "spatial");
    const ModelSummary* gsem = find(S, "gsem");
    if (plus && null_m && rsr) {
        double b = bias(plus);
        rep.checks.push_back({"bias_null_rsr", "null and RSR bias exceed 5x spatial+ bias",
                              bias(null_m) > 5 * b && bias(rsr) > 5 * b,
                              "null " + fmt(bias(null_m)) + ", rsr " + fmt(bias(rsr)) + ", spatial+ " + fmt(b)});
    }
    if (plus && sp)
        rep.checks.push_back({"bias_spatial", "penalized spatial bias exceeds 3x spatial+ bias",
                              bias(sp) > 3 * bias(plus), "spatial " + fmt(bias(sp)) + ", spatial+ " + fmt(bias(plus))});
    if (plus && gsem) {
        bool ok = bias(plus) <= 2 * plus->beta_mc_se && bias(gsem) <= 2 * gsem->beta_mc_se;
        rep.checks.push_back({"unbiased_plus_gsem", "spatial+ and gSEM means within 2 MC s.e. of the truth", ok,
                              "spatial+ " + fmt(plus->beta_mean) + " (se " + fmt(plus->beta_mc_se) + "), gsem " +
                                  fmt(gsem->beta_mean) + " (se " + fmt(gsem->beta_mc_se) + ")"});
    }
    if (null_m) {
        bool ok = true, any = false;
        std::string detail;
        for (const char* name : {"spatial", "rsr", "gsem", "spatial_plus"}) {
            const ModelSummary* pen = find(S, name);
            const ModelSummary* fx = find(S, std::string(name) + "_fx");
            if (!pen || !fx) continue;
            any = true;
            ok = ok && pen->mse_median < fx->mse_median && pen->mse_median < null_m->mse_median;
            detail += std::string(detail.empty() ? "" : ", ") + name + " " + fmt(pen->mse_median) + " vs fx " +
                      fmt(fx->mse_median);
        }
        if (any)
            rep.checks.push_back({"mse_penalized", "penalized median MSE below unpenalized and null", ok,
                                  detail + ", null " + fmt(null_m->mse_median)});
    }
}

void glm_checks(ExperimentReport& rep) {
    const auto& S = rep.summary;
    const double beta = rep.config.scenario.beta;
    const ModelSummary* sp = find(S, "spatial");
    const ModelSummary* plus = find(S, "spatial_plus");
    if (sp)
        rep.checks.push_back({"bias_spatial", "penalized spatial mean differs from the truth by more than 3 MC s.e.",
                              std::abs(sp->beta_mean - beta) > 3 * sp->beta_mc_se,
                              "mean " + fmt(sp->beta_mean) + ", se " + fmt(sp->beta_mc_se)});
    if (plus) {
        if (rep.config.scenario.family.kind == FamilyKind::binomial)
            rep.checks.push_back({"unbiased_plus", "spatial+ mean within 5% of the truth",
                                  std::abs(plus->beta_mean - beta) <= 0.05 * std::abs(beta),
                                  "mean " + fmt(plus->beta_mean)});
        else
            rep.checks.push_back({"unbiased_plus", "spatial+ mean within 3 MC s.e. of the truth",
                                  std::abs(plus->beta_mean - beta) <= 3 * plus->beta_mc_se,
                                  "mean " + fmt(plus->beta_mean) + ", se " + fmt(plus->beta_mc_se)});
    }
    bool mono = true;
    int bad = 0;
    for (const auto& c : rep.cells)
        if (c.ok && !c.monotone) {
            mono = false;
            ++bad;
        }
    rep.checks.push_back({"pirls_monotone", "penalized deviance non-increasing within every PIRLS iteration", mono,
                          std::to_string(bad) + " non-monotone fits"});
}

ExperimentReport run(const ExperimentConfig& config) {
    config.validate();
    auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.config = config;
    const auto models = config.model_set();
    const int R = config.scenario.replicates;

    std::vector<ReplicateOutcome> outcomes(R);
    for_each_replicate(R, config.threads, [&](int r) { outcomes[r] = run_replicate(config, models, r); });

    int failed = 0;
    for (auto& o : outcomes) {
        for (auto& c : o.cells) {
            if (!c.ok) ++failed;
            rep.cells.push_back(std::move(c));
        }
        rep.identities.push_back(o.ids);
    }
    rep.failure_rate = rep.cells.empty() ? 0.0 : static_cast<double>(failed) / rep.cells.size();
    rep.run_failed = rep.failure_rate > config.max_failure_rate;
    rep.summary = summarize(rep.cells, models);
    if (config.check_acceptance) {
        if (config.scenario.family.kind == FamilyKind::gaussian)
            gaussian_checks(rep);
        else
            glm_checks(rep);
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!config.output_dir.empty()) write_outputs(rep);
    return rep;
}

}  // namespace

std::vector<ModelTag> default_gaussian_models() {
    std::vector<ModelTag> out{{ModelKind::null_model, true}};
    for (ModelKind k : {ModelKind::spatial, ModelKind::rsr, ModelKind::gsem, ModelKind::spatial_plus}) {
        out.push_back({k, true});
        out.push_back({k, false});
    }
    return out;
}

std::vector<ModelTag> default_glm_models() {
    return {{ModelKind::null_model, true},   {ModelKind::spatial, true},       {ModelKind::spatial, false},
            {ModelKind::spatial_plus, true}, {ModelKind::spatial_plus, false}, {ModelKind::rsr, true}};
}

ExperimentConfig ExperimentConfig::desk_scale(const ExponentialFamily& family) {
    ExperimentConfig c;
    c.scenario = SimScenario::desk_scale();
    c.scenario.family = family;
    return c;
}

ExperimentConfig ExperimentConfig::paper_scale(const ExponentialFamily& family) {
    ExperimentConfig c;
    c.scenario = SimScenario::paper_scale();
    c.scenario.family = family;
    return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& v) {
    SimScenario& s = scenario;
    if (key == "family") {
        int nb = s.family.n_bin;
        s.family = ExponentialFamily::from_name(v);
        s.family.n_bin = nb;
    } else if (key == "binomial_size") s.family.n_bin = to_int(key, v);
    else if (key == "n") s.n = to_int(key, v);
    else if (key == "k" || key == "rank") s.rank = to_int(key, v);
    else if (key == "m") s.m = to_int(key, v);
    else if (key == "grid_side") s.grid_side = to_int(key, v);
    else if (key == "extent") s.extent = to_double(key, v);
    else if (key == "beta") s.beta = to_double(key, v);
    else if (key == "sigma_x") s.sigma_x = to_double(key, v);
    else if (key == "sigma_y") s.sigma_y = to_double(key, v);
    else if (key == "z_range") s.cov_z.range = to_double(key, v);
    else if (key == "z_power") s.cov_z.power = to_double(key, v);
    else if (key == "zprime_range") s.cov_zp.range = to_double(key, v);
    else if (key == "project_fields") s.project_fields = to_bool(key, v);
    else if (key == "replicates") s.replicates = to_int(key, v);
    else if (key == "seed") {
        try {
            s.seed = std::stoull(v);
        } catch (const std::exception&) {
            throw InvalidInput("config key 'seed': expected a non-negative integer");
        }
    } else if (key == "models") {
        models.clear();
        std::stringstream ss(v);
        for (std::string t; std::getline(ss, t, ',');)
            if (!trim(t).empty()) models.push_back(parse_model_tag(trim(t)));
    } else if (key == "threads") threads = to_int(key, v);
    else if (key == "max_failure_rate") max_failure_rate = to_double(key, v);
    else if (key == "check_acceptance") check_acceptance = to_bool(key, v);
    else if (key == "output_dir") output_dir = v;
    else throw InvalidInput("unknown config key '" + key + "'");
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
    ExperimentConfig c;
    // A scale preset must come before other keys so that they override it.
    std::vector<std::pair<std::string, std::string>> kv;
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + ": expected key=value");
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    for (const auto& [k, v] : kv)
        if (k == "scale") {
            if (v == "paper") c.scenario = SimScenario::paper_scale();
            else if (v != "desk") throw InvalidInput("config key 'scale': expected desk or paper");
        }
    for (const auto& [k, v] : kv)
        if (k != "scale") c.set(k, v);
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open config file '" + path + "'");
    return parse(f);
}

std::vector<ModelTag> ExperimentConfig::model_set() const {
    if (!models.empty()) return models;
    return scenario.family.kind == FamilyKind::gaussian ? default_gaussian_models() : default_glm_models();
}

void ExperimentConfig::validate() const {
    scenario.validate();
    if (scenario.rank <= nullspace_dim(scenario.m, 2)) throw RankOutOfRange("basis size k must exceed M");
    if (threads < 1) throw InvalidInput("threads must be >= 1");
    if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) throw InvalidInput("max_failure_rate must lie in [0, 1]");
    std::vector<std::string> seen;
    for (const auto& t : model_set()) {
        if (scenario.family.kind != FamilyKind::gaussian &&
            (t.kind == ModelKind::gsem || t.kind == ModelKind::partial_residual))
            throw InvalidInput("model '" + t.name() + "' has no GLM form");
        if (std::find(seen.begin(), seen.end(), t.name()) != seen.end())
            throw InvalidInput("model '" + t.name() + "' listed twice");
        seen.push_back(t.name());
    }
}

RegressionProblem problem_from_replicate(const Replicate& rep) {
    RegressionProblem p;
    p.y = rep.y;
    p.X = rep.x;
    p.names = {"x"};
    p.basis = rep.basis;
    return p;
}

std::vector<ModelSummary> summarize(const std::vector<CellResult>& cells, const std::vector<ModelTag>& models) {
    std::vector<ModelSummary> out;
    for (const auto& t : models) {
        ModelSummary s;
        s.model = t.name();
        std::vector<double> b, mse, lmse, lam;
        double edf = 0.0;
        for (const auto& c : cells) {
            if (c.model != s.model) continue;
            if (!c.ok) {
                ++s.n_failed;
                continue;
            }
            ++s.n_ok;
            b.push_back(c.beta);
            mse.push_back(c.mse);
            lmse.push_back(c.log_mse);
            if (!std::isnan(c.lambda)) lam.push_back(c.lambda);
            edf += c.edf;
        }
        if (s.n_ok > 0) {
            double mean = 0.0;
            for (double v : b) mean += v;
            mean /= b.size();
            double ss = 0.0;
            for (double v : b) ss += (v - mean) * (v - mean);
            s.beta_mean = mean;
            s.beta_sd = b.size() > 1 ? std::sqrt(ss / (b.size() - 1)) : 0.0;
            s.beta_mc_se = s.beta_sd / std::sqrt(static_cast<double>(b.size()));
            std::sort(b.begin(), b.end());
            s.beta_q05 = quantile(b, 0.05);
            s.beta_q25 = quantile(b, 0.25);
            s.beta_median = quantile(b, 0.5);
            s.beta_q75 = quantile(b, 0.75);
            s.beta_q95 = quantile(b, 0.95);
            double msum = 0.0;
            for (double v : mse) msum += v;
            s.mse_mean = msum / mse.size();
            s.mse_median = median(mse);
            s.log_mse_median = median(lmse);
            s.lambda_median = lam.empty() ? nan_v : median(lam);
            s.edf_mean = edf / s.n_ok;
        } else {
            s.beta_mean = s.beta_sd = s.beta_mc_se = nan_v;
            s.beta_q05 = s.beta_q25 = s.beta_median = s.beta_q75 = s.beta_q95 = nan_v;
            s.mse_mean = s.mse_median = s.log_mse_median = s.lambda_median = s.edf_mean = nan_v;
        }
        out.push_back(s);
    }
    return out;
}

const ModelSummary& ExperimentReport::model(const std::string& name) const {
    const ModelSummary* m = find(summary, name);
    if (!m) throw InvalidInput("no model '" + name + "' in report");
    return *m;
}

bool ExperimentReport::acceptance_passed() const {
    if (run_failed) return false;
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

ExperimentReport run_gaussian_study(const ExperimentConfig& config) {
    if (config.scenario.family.kind != FamilyKind::gaussian) throw InvalidInput("run_gaussian_study needs a Gaussian scenario");
    return run(config);
}

ExperimentReport run_glm_study(const ExperimentConfig& config) {
    if (config.scenario.family.kind == FamilyKind::gaussian) throw InvalidInput("run_glm_study needs a non-Gaussian family");
    return run(config);
}

ExperimentReport run_study(const ExperimentConfig& config) { return run(config); }

void write_replicates_csv(std::ostream& out, const ExperimentReport& report) {
    out << "replicate,model,ok,beta,se,mse,log_mse,lambda,lambda_x,edf,iterations,monotone,error\n";
    out.precision(17);
    for (const auto& c : report.cells) {
        std::string err = c.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << c.replicate << ',' << c.model << ',' << (c.ok ? 1 : 0) << ',' << c.beta << ',' << c.se << ',' << c.mse
            << ',' << c.log_mse << ',' << c.lambda << ',' << c.lambda_x << ',' << c.edf << ',' << c.iterations << ','
            << (c.monotone ? 1 : 0) << ',' << err << '\n';
    }
}

void write_summary_csv(std::ostream& out, const ExperimentReport& report) {
    out << "model,n_ok,n_failed,beta_mean,beta_sd,beta_mc_se,beta_q05,beta_q25,beta_median,beta_q75,beta_q95,"
           "mse_mean,mse_median,log_mse_median,lambda_median,edf_mean\n";
    out.precision(10);
    for (const auto& s : report.summary) {
        out << s.model << ',' << s.n_ok << ',' << s.n_failed << ',' << s.beta_mean << ',' << s.beta_sd << ','
            << s.beta_mc_se << ',' << s.beta_q05 << ',' << s.beta_q25 << ',' << s.beta_median << ',' << s.beta_q75
            << ',' << s.beta_q95 << ',' << s.mse_mean << ',' << s.mse_median << ',' << s.log_mse_median << ','
            << s.lambda_median << ',' << s.edf_mean << '\n';
    }
}

void write_report_json(std::ostream& out, const ExperimentReport& report) {
    using nlohmann::json;
    const auto& sc = report.config.scenario;
    json j;
    j["schema_version"] = 1;
    j["kind"] = "simulation_study";
    j["config"] = {{"family", sc.family.name()},
                   {"binomial_size", sc.family.n_bin},
                   {"n", sc.n},
                   {"k", sc.rank},
                   {"m", sc.m},
                   {"grid_side", sc.grid_side},
                   {"extent", sc.extent},
                   {"beta", sc.beta},
                   {"sigma_x", sc.sigma_x},
                   {"sigma_y", sc.sigma_y},
                   {"z_range", sc.cov_z.range},
                   {"z_power", sc.cov_z.power},
                   {"zprime_range", sc.cov_zp.range},
                   {"project_fields", sc.project_fields},
                   {"replicates", sc.replicates},
                   {"seed", sc.seed},
                   {"max_failure_rate", report.config.max_failure_rate}};
    json models = json::array();
    for (const auto& t : report.config.model_set()) models.push_back(t.name());
    j["config"]["models"] = models;

    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json summary = json::array();
    for (const auto& s : report.summary)
        summary.push_back({{"model", s.model},
                           {"n_ok", s.n_ok},
                           {"n_failed", s.n_failed},
                           {"beta_mean", num(s.beta_mean)},
                           {"beta_sd", num(s.beta_sd)},
                           {"beta_mc_se", num(s.beta_mc_se)},
                           {"beta_quantiles",
                            {num(s.beta_q05), num(s.beta_q25), num(s.beta_median), num(s.beta_q75), num(s.beta_q95)}},
                           {"mse_mean", num(s.mse_mean)},
                           {"mse_median", num(s.mse_median)},
                           {"log_mse_median", num(s.log_mse_median)},
                           {"lambda_median", num(s.lambda_median)},
                           {"edf_mean", num(s.edf_mean)}});
    j["summary"] = summary;

    json failures = json::array();
    for (const auto& c : report.cells)
        if (!c.ok) failures.push_back({{"replicate", c.replicate}, {"model", c.model}, {"error", c.error}});
    j["failures"] = failures;
    j["failure_rate"] = report.failure_rate;
    j["run_failed"] = report.run_failed;

    json checks = json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"id", c.id}, {"description", c.description}, {"passed", c.passed}, {"detail", c.detail}});
    j["acceptance"] = checks;
    j["acceptance_passed"] = report.acceptance_passed();
    out << j.dump(2) << '\n';
}

void write_outputs(const ExperimentReport& report) {
    namespace fs = std::filesystem;
    fs::path dir(report.config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create output directory '" + dir.string() + "'");
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw InvalidInput("cannot write '" + (dir / name).string() + "'");
        return f;
    };
    {
        auto f = open("replicates.csv");
        write_replicates_csv(f, report);
    }
    {
        auto f = open("summary.csv");
        write_summary_csv(f, report);
    }
    {
        auto f = open("report.json");
        write_report_json(f, report);
    }
}

}  // namespace spatialplus
