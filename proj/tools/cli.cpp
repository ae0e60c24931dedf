#include "cli.hpp"

#include "spatialplus/asymptotics.hpp"
#include "spatialplus/errors.hpp"
#include "spatialplus/experiments.hpp"
#include "spatialplus/glm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace spatialplus::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    if (*b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    return ec == std::errc() && ptr == e && std::isfinite(v);
}

std::string num(double v, int width = 12, int prec = 4) {
    char buf[64];
    if (std::isnan(v)) std::snprintf(buf, sizeof buf, "%*s", width, "NA");
    else if (v != 0.0 && (std::abs(v) < 1e-3 || std::abs(v) >= 1e6))
        std::snprintf(buf, sizeof buf, "%*.*e", width, prec - 1, v);
    else
        std::snprintf(buf, sizeof buf, "%*.*f", width, prec, v);
    return buf;
}

std::string p_text(double p, int width = 12) {
    if (!std::isnan(p) && p < 1e-16) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%*s", width, "<1e-16");
        return buf;
    }
    return num(p, width, 4);
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot write '" + path + "'");
    return f;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
    std::string data;
    std::string model = "spatial_plus";
    std::string family = "gaussian";
    int binomial_size = 10;
    std::string response = "y";
    std::string covariates = "x";
    std::string coords = "t1,t2";
    int rank = 100;
    int m = 2;
    bool no_intercept = false;
    double lambda = 0.0;
    double lambda_x = 0.0;
    std::string out = ".";
};

void print_fit_table(std::ostream& out, const FitResult& fit, const RegressionProblem& prob) {
    out << fit.tag.name() << " model, family " << fit.family << ", n = " << prob.n() << ", basis rank "
        << prob.basis.rank() << ", m = " << prob.basis.m() << "\n\n";
    std::size_t w = 12;
    for (const auto& nm : fit.names) w = std::max(w, nm.size() + 2);
    char head[128];
    std::snprintf(head, sizeof head, "%-*s%12s%12s%12s\n", static_cast<int>(w), "", "estimate", "s.e.", "p-value");
    out << head;
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        char lbl[128];
        std::snprintf(lbl, sizeof lbl, "%-*s", static_cast<int>(w), fit.names[j].c_str());
        out << lbl << num(fit.beta_hat[j]) << num(fit.se_beta[j]) << p_text(fit.p_values[j]) << '\n';
    }
    out << '\n';
    out << "edf                 " << num(fit.edf) << '\n';
    out << "deviance explained  " << num(100.0 * fit.deviance_explained, 11, 2) << "%\n";
    out << "sigma               " << num(fit.sigma_hat) << '\n';
    out << "AIC                 " << num(fit.aic, 12, 2) << '\n';
    if (std::isfinite(fit.lambda)) out << "lambda              " << num(fit.lambda) << '\n';
    for (std::size_t j = 0; j < fit.lambda_x.size(); ++j)
        out << "lambda_x[" << j << "]         " << num(fit.lambda_x[j]) << '\n';
    if (fit.iterations > 0) out << "PIRLS iterations    " << std::setw(12) << fit.iterations << '\n';
    if (!fit.comparable)
        out << "\nnote: edf, deviance explained, sigma and AIC describe the residual-on-residual fit of this\n"
               "model and are not comparable with the other models.\n";
}

nlohmann::json fit_json(const FitResult& fit, const RegressionProblem& prob, const FitOptions& o,
                        unsigned long long seed) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = "fit";
    j["model"] = fit.tag.name();
    j["family"] = fit.family;
    if (fit.family == "binomial") j["binomial_size"] = o.binomial_size;
    j["data"] = o.data;
    j["n"] = prob.n();
    j["rank"] = prob.basis.rank();
    j["m"] = prob.basis.m();
    j["d"] = prob.basis.d();
    j["intercept"] = prob.intercept;
    j["seed"] = seed;
    nlohmann::json coefs = nlohmann::json::array();
    for (std::size_t i = 0; i < fit.names.size(); ++i)
        coefs.push_back({{"name", fit.names[i]},
                         {"estimate", finite_or_null(fit.beta_hat[i])},
                         {"se", finite_or_null(fit.se_beta[i])},
                         {"p_value", finite_or_null(fit.p_values[i])}});
    j["coefficients"] = coefs;
    j["edf"] = finite_or_null(fit.edf);
    j["sigma_hat"] = finite_or_null(fit.sigma_hat);
    j["aic"] = finite_or_null(fit.aic);
    j["gcv"] = finite_or_null(fit.gcv);
    j["deviance"] = finite_or_null(fit.deviance);
    j["null_deviance"] = finite_or_null(fit.null_deviance);
    j["deviance_explained"] = finite_or_null(fit.deviance_explained);
    j["phi"] = finite_or_null(fit.phi);
    j["lambda"] = finite_or_null(fit.lambda);
    nlohmann::json lx = nlohmann::json::array();
    for (double v : fit.lambda_x) lx.push_back(finite_or_null(v));
    j["lambda_x"] = lx;
    j["comparable"] = fit.comparable;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    return j;
}

int cmd_fit(const FitOptions& o, unsigned long long seed, std::ostream& out, std::ostream& err) {
    CsvTable table = CsvTable::read_file(o.data);
    const auto coord_names = split_list(o.coords);
    const auto cov_names = split_list(o.covariates);
    if (coord_names.empty()) throw InvalidInput("no coordinate columns given");
    MatrixXd coords = table.numeric(coord_names);
    VectorXd y = table.numeric({o.response}).col(0);
    MatrixXd X = cov_names.empty() ? MatrixXd(y.size(), 0) : table.numeric(cov_names);
    if (o.m < 1) throw InvalidInput("--m must be >= 1");
    if (o.rank < 1) throw InvalidInput("--k must be >= 1");

    ExponentialFamily family = ExponentialFamily::from_name(o.family);
    if (family.kind == FamilyKind::binomial) {
        if (o.binomial_size < 1) throw InvalidInput("--binomial-size must be >= 1");
        family.n_bin = o.binomial_size;
    }
    const ModelTag tag = parse_model_tag(o.model);

    TpsBasis full = build_basis(LocationSet(coords), o.m);
    RegressionProblem prob;
    prob.y = y;
    prob.X = X;
    prob.names = cov_names;
    prob.intercept = !o.no_intercept;
    prob.basis = o.rank < full.n() ? truncate_basis(full, o.rank) : full;
    if (o.lambda > 0.0) prob.lambda = o.lambda;
    if (o.lambda_x > 0.0) prob.lambda_x.assign(X.cols(), o.lambda_x);

    FitResult fit = family.kind == FamilyKind::gaussian ? fit_model(prob, tag) : fit_glm_model(prob, tag, family);

    print_fit_table(out, fit, prob);

    ensure_dir(o.out);
    const std::string base = o.out + "/";
    {
        auto f = open_out(base + "fit.json");
        f << fit_json(fit, prob, o, seed).dump(2) << '\n';
    }
    {
        auto f = open_out(base + "fhat.csv");
        f.precision(17);
        f << "site";
        for (const auto& c : coord_names) f << ',' << c;
        f << ",f_hat,fitted,linear_predictor\n";
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            f << i;
            for (Eigen::Index c = 0; c < coords.cols(); ++c) f << ',' << coords(i, c);
            f << ',' << fit.f_hat[i] << ',' << fit.fitted[i] << ',' << fit.linear_predictor[i] << '\n';
        }
    }
    out << "\nwrote " << base << "fit.json and " << base << "fhat.csv\n";
    if (!fit.converged) {
        err << "error: PIRLS did not converge in " << fit.iterations << " iterations\n";
        return exit_convergence;
    }
    return exit_ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string config;
    std::string family;
    bool paper_scale = false;
    int replicates = 0;
    int threads = 0;
    std::string models;
    std::vector<std::string> set;
    std::string out = "simulation";
    int export_data = 0;
    bool export_only = false;
};

void print_study(std::ostream& out, const ExperimentReport& r) {
    const auto& sc = r.config.scenario;
    out << "simulation study, family " << sc.family.name() << ", n = " << sc.n << ", k = " << sc.rank
        << ", replicates = " << sc.replicates << ", seed = " << sc.seed << "\n\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-18s%6s%8s%12s%12s%12s%14s\n", "model", "ok", "failed", "mean beta", "MC s.e.",
                  "sd beta", "median MSE");
    out << line;
    for (const auto& s : r.summary) {
        std::snprintf(line, sizeof line, "%-18s%6d%8d", s.model.c_str(), s.n_ok, s.n_failed);
        out << line << num(s.beta_mean) << num(s.beta_mc_se) << num(s.beta_sd) << num(s.mse_median, 14, 3) << '\n';
    }
    out << "\nfailure rate " << num(r.failure_rate, 0, 4) << (r.run_failed ? " (run failed)" : "") << '\n';
    if (!r.checks.empty()) {
        out << '\n';
        for (const auto& c : r.checks)
            out << (c.passed ? "PASS " : "FAIL ") << c.id << ": " << c.description << " [" << c.detail << "]\n";
    }
}

int cmd_simulate(const SimulateOptions& o, unsigned long long seed, bool seed_given, std::ostream& out,
                 std::ostream& err) {
    // Later entries win: preset, config file, then explicit flags.
    std::ostringstream kv;
    kv << "threads=" << std::max(1u, std::thread::hardware_concurrency()) << '\n';
    if (o.paper_scale) kv << "scale=paper\n";
    if (!o.config.empty()) {
        std::ifstream f(o.config);
        if (!f) throw InvalidInput("cannot open config file '" + o.config + "'");
        kv << f.rdbuf() << '\n';
    }
    if (!o.family.empty()) kv << "family=" << o.family << '\n';
    if (seed_given || o.config.empty()) kv << "seed=" << seed << '\n';
    if (o.replicates > 0) kv << "replicates=" << o.replicates << '\n';
    if (!o.models.empty()) kv << "models=" << o.models << '\n';
    for (const auto& s : o.set) {
        if (s.find('=') == std::string::npos) throw InvalidInput("--set expects key=value, got '" + s + "'");
        kv << s << '\n';
    }
    std::istringstream in(kv.str());
    ExperimentConfig cfg = ExperimentConfig::parse(in);
    if (o.threads > 0) cfg.threads = o.threads;
    cfg.output_dir = o.out;
    cfg.validate();

    if (o.export_data > 0) {
        ensure_dir(o.out);
        const int count = std::min(o.export_data, cfg.scenario.replicates);
        for (int r = 0; r < count; ++r) {
            const std::string path = o.out + "/replicate_" + std::to_string(r) + ".csv";
            auto f = open_out(path);
            write_replicate_csv(f, generate_replicate(cfg.scenario, r));
        }
        out << "exported " << count << " replicate dataset(s) to " << o.out << '\n';
    }
    if (o.export_only) return exit_ok;

    ExperimentReport report = run_study(cfg);
    print_study(out, report);
    out << "\nwrote " << o.out << "/replicates.csv, summary.csv and report.json\n";
    if (!report.acceptance_passed()) {
        err << "error: acceptance thresholds violated\n";
        return exit_acceptance;
    }
    return exit_ok;
}

// ---------------------------------------------------------------- asymptotics

struct AsymptoticsOptions {
    std::string check = "separation";
    int d = 1;
    int m = 2;
    double delta = std::numeric_limits<double>::quiet_NaN();
    double delta_x = std::numeric_limits<double>::quiet_NaN();
    std::string ladder;
    int replicates = 100;
    std::string scenario;
    std::string out = "asymptotics";
};

std::vector<int> parse_ladder(const std::string& s) {
    std::vector<int> v;
    for (const auto& t : split_list(s)) {
        int x = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
        if (ec != std::errc() || p != t.data() + t.size()) throw InvalidInput("--ladder: '" + t + "' is not an integer");
        v.push_back(x);
    }
    return v;
}

void print_rate_report(std::ostream& out, const RateReport& r) {
    out << r.check << " check (" << (r.hard ? "hard" : "diagnostic") << ")\n\n";
    write_rate_csv(out, r);
    if (!r.slopes.empty()) {
        out << '\n';
        for (const auto& s : r.slopes) out << "slope " << s.name << " = " << num(s.value, 0) << " (s.e. " << num(s.se, 0) << ")\n";
    }
    out << '\n';
    for (const auto& c : r.verdicts)
        out << (c.passed ? "PASS " : "FAIL ") << c.id << ": " << c.description << " [" << c.detail << "]\n";
}

int cmd_asymptotics(const AsymptoticsOptions& o, unsigned long long seed, std::ostream& out, std::ostream& err) {
    if (!std::isnan(o.delta) && !(o.delta > 0.0 && o.delta < 1.0)) throw InvalidInput("--delta must lie in (0, 1)");
    if (!std::isnan(o.delta_x) && !(o.delta_x > 0.0 && o.delta_x < 1.0))
        throw InvalidInput("--delta-x must lie in (0, 1)");
    std::vector<int> ladder = parse_ladder(o.ladder);

    LabScenario sc;
    if (o.scenario == "confounded") sc = LabScenario::confounded();
    else if (o.scenario == "smooth") sc = LabScenario::smooth();
    else if (!o.scenario.empty()) throw InvalidInput("--scenario must be confounded or smooth");

    auto rate_spec = [&](std::vector<int> def, LabScenario dflt_sc) {
        if (o.scenario.empty()) sc = dflt_sc;
        RateSpec spec = RateSpec::optimal(o.m, o.d, ladder.empty() ? def : ladder);
        if (!std::isnan(o.delta)) spec.delta = o.delta;
        if (!std::isnan(o.delta_x)) spec.delta_x = o.delta_x;
        spec.replicates = o.replicates;
        spec.seed = seed;
        spec.validate();
        return spec;
    };
    const bool d2 = o.d == 2;

    RateReport report;
    if (o.check == "eigen") {
        report = eigen_rate_check(o.d, o.m, ladder.empty() ? (d2 ? std::vector<int>{100, 225, 400}
                                                                 : std::vector<int>{100, 125, 150})
                                                           : ladder);
    } else if (o.check == "trace") {
        report = trace_rate_check(o.d, o.m, ladder.empty() ? std::vector<int>{100, 225, 400} : ladder,
                                  std::isnan(o.delta) ? 0.5 : o.delta);
    } else if (o.check == "separation") {
        RateSpec spec = rate_spec(d2 ? std::vector<int>{100, 196, 400, 784} : std::vector<int>{100, 200, 400, 800},
                                  LabScenario::confounded());
        report = bias_sd_separation(sc, spec);
    } else if (o.check == "amse") {
        RateSpec spec = rate_spec(d2 ? std::vector<int>{100, 196, 400} : std::vector<int>{100, 200, 400, 800},
                                  LabScenario::smooth());
        report = amse_rate_check(sc, spec);
    } else if (o.check == "assumptions") {
        RateSpec spec = rate_spec(d2 ? std::vector<int>{256, 484, 1024} : std::vector<int>{250, 500, 1000},
                                  LabScenario::smooth());
        report = coefficient_assumption_check(sc, spec);
    } else {
        throw InvalidInput("--check must be one of eigen, trace, separation, amse, assumptions");
    }

    print_rate_report(out, report);
    ensure_dir(o.out);
    {
        auto f = open_out(o.out + "/" + o.check + ".csv");
        write_rate_csv(f, report);
    }
    {
        auto f = open_out(o.out + "/" + o.check + ".json");
        write_rate_json(f, report);
    }
    out << "\nwrote " << o.out << "/" << o.check << ".csv and " << o.check << ".json\n";
    if (report.hard && !report.passed()) {
        err << "error: hard check '" << o.check << "' failed\n";
        return exit_acceptance;
    }
    return exit_ok;
}

}  // namespace

// ---------------------------------------------------------------- CSV

CsvTable CsvTable::read(std::istream& in, const std::string& source) {
    CsvTable t;
    t.source = source;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        if (t.header.empty()) {
            t.header = split_fields(line);
            for (std::size_t i = 0; i < t.header.size(); ++i) {
                if (t.header[i].empty()) throw InvalidInput(source + ": empty column name in header");
                for (std::size_t j = 0; j < i; ++j)
                    if (t.header[j] == t.header[i])
                        throw InvalidInput(source + ": duplicate column '" + t.header[i] + "'");
            }
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() != t.header.size())
            throw InvalidInput(source + " line " + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(lineno);
    }
    if (t.header.empty()) throw InvalidInput(source + ": no header row");
    if (t.rows.empty()) throw InvalidInput(source + ": no data rows");
    return t;
}

CsvTable CsvTable::read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open data file '" + path + "'");
    return read(f, path);
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

MatrixXd CsvTable::numeric(const std::vector<std::string>& names) const {
    std::vector<int> idx;
    for (const auto& nm : names) {
        const int c = column(nm);
        if (c < 0) throw InvalidInput(source + ": missing column '" + nm + "'");
        idx.push_back(c);
    }
    MatrixXd M(rows.size(), names.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < idx.size(); ++j) {
            double v = 0.0;
            if (!parse_double(rows[r][idx[j]], v))
                throw InvalidInput(source + " line " + std::to_string(line_numbers[r]) + ", column '" + names[j] +
                                   "': '" + rows[r][idx[j]] + "' is not a finite number");
            M(r, j) = v;
        }
    return M;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto& f : split_fields(s))
        if (!f.empty()) out.push_back(f);
    return out;
}

// ---------------------------------------------------------------- driver

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatial regression with thin plate splines: spatial+, gSEM, RSR and the spatial model"};
    app.name("spatialplus");
    app.require_subcommand(1);
    // Lets --seed follow the subcommand name.
    app.fallthrough();
    unsigned long long seed = default_seed;
    auto* seed_opt = app.add_option("--seed", seed, "Random seed for every stochastic step (default 20240601)");

    FitOptions fo;
    auto* fit = app.add_subcommand("fit", "Fit one model to a CSV dataset");
    fit->add_option("data", fo.data, "CSV file with a header row")->required();
    fit->add_option("--model", fo.model,
                    "null, spatial, rsr, gsem, spatial_plus or partial_residual; append _fx for no penalty")
        ->capture_default_str();
    fit->add_option("--family", fo.family, "gaussian, poisson, exponential or binomial")->capture_default_str();
    fit->add_option("--binomial-size", fo.binomial_size, "Trials per binomial observation")->capture_default_str();
    fit->add_option("--response", fo.response, "Response column")->capture_default_str();
    fit->add_option("--covariates", fo.covariates, "Comma-separated covariate columns")->capture_default_str();
    fit->add_option("--coords", fo.coords, "Comma-separated coordinate columns")->capture_default_str();
    fit->add_option("-k,--rank", fo.rank, "Basis rank (full rank when >= n)")->capture_default_str();
    fit->add_option("--m", fo.m, "Penalty order")->capture_default_str();
    fit->add_flag("--no-intercept", fo.no_intercept, "Drop the intercept");
    fit->add_option("--lambda", fo.lambda, "Fixed smoothing parameter of the response smooth (default GCV)");
    fit->add_option("--lambda-x", fo.lambda_x, "Fixed smoothing parameter of the covariate smooths (default GCV)");
    fit->add_option("-o,--out", fo.out, "Directory for fit.json and fhat.csv")->capture_default_str();

    SimulateOptions so;
    auto* sim = app.add_subcommand("simulate", "Run the Gaussian random field simulation study");
    sim->add_option("--config", so.config, "Plain-text key=value configuration file");
    sim->add_option("--family", so.family, "gaussian (default), poisson, exponential or binomial");
    sim->add_flag("--paper-scale", so.paper_scale, "n = 1000, k = 300, 100 replicates");
    sim->add_option("--replicates", so.replicates, "Number of replicates");
    sim->add_option("--threads", so.threads, "Worker threads (default: all cores)");
    sim->add_option("--models", so.models, "Comma-separated model list");
    sim->add_option("--set", so.set, "Extra configuration entry key=value (repeatable)");
    sim->add_option("-o,--out", so.out, "Output directory")->capture_default_str();
    sim->add_option("--export-data", so.export_data, "Also write the first N replicate datasets as CSV");
    sim->add_flag("--export-only", so.export_only, "Write the replicate datasets and skip the study");

    AsymptoticsOptions ao;
    auto* asy = app.add_subcommand("asymptotics", "Empirical checks of the rate results");
    asy->add_option("--check", ao.check, "eigen, trace, separation, amse or assumptions")->capture_default_str();
    asy->add_option("--d", ao.d, "Dimension of the design")->capture_default_str();
    asy->add_option("--m", ao.m, "Penalty order")->capture_default_str();
    asy->add_option("--delta", ao.delta, "lambda = n^-delta (default 2m/(2m+d); 0.5 for trace)");
    asy->add_option("--delta-x", ao.delta_x, "lambda_x = n^-delta_x (default 2m/(2m+d))");
    asy->add_option("--ladder", ao.ladder, "Comma-separated sample sizes");
    asy->add_option("--replicates", ao.replicates, "Covariate draws per rung")->capture_default_str();
    asy->add_option("--scenario", ao.scenario, "confounded or smooth (default depends on the check)");
    asy->add_option("-o,--out", ao.out, "Output directory")->capture_default_str();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_input;
    }

    try {
        if (*fit) return cmd_fit(fo, seed, out, err);
        if (*sim) return cmd_simulate(so, seed, seed_opt->count() > 0, out, err);
        if (*asy) return cmd_asymptotics(ao, seed, out, err);
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << '\n';
        return exit_model;
    } catch (const ConvergenceError& e) {
        err << "convergence error: " << e.what() << '\n';
        return exit_convergence;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return exit_internal;
    }
    return exit_internal;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace spatialplus::cli
