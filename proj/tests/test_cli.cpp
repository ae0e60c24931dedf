#include <doctest.h>

#include "cli.hpp"
#include "spatialplus/errors.hpp"
#include "spatialplus/experiments.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace spatialplus;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("spatialplus_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string write_replicate(const fs::path& dir, const Replicate& rep) {
    std::string path = (dir / "data.csv").string();
    std::ofstream f(path);
    write_replicate_csv(f, rep);
    return path;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream f(p);
    return nlohmann::json::parse(f);
}

std::vector<double> fhat_column(const fs::path& p) {
    cli::CsvTable t = cli::CsvTable::read_file(p.string());
    MatrixXd v = t.numeric({"f_hat"});
    return {v.data(), v.data() + v.size()};
}

double json_coef(const nlohmann::json& j, const std::string& name, const std::string& field = "estimate") {
    for (const auto& c : j["coefficients"])
        if (c["name"] == name) return c[field].get<double>();
    FAIL("coefficient " << name << " missing");
    return 0.0;
}

void check_round_trip(const nlohmann::json& j, const std::vector<double>& fhat, const FitResult& ref) {
    REQUIRE(j["coefficients"].size() == ref.names.size());
    for (std::size_t i = 0; i < ref.names.size(); ++i) {
        CAPTURE(ref.names[i]);
        CHECK(json_coef(j, ref.names[i]) == ref.beta_hat[i]);
        CHECK(json_coef(j, ref.names[i], "se") == ref.se_beta[i]);
    }
    CHECK(j["edf"].get<double>() == ref.edf);
    CHECK(j["aic"].get<double>() == ref.aic);
    if (std::isnan(ref.lambda)) CHECK(j["lambda"].is_null());
    else CHECK(j["lambda"].get<double>() == ref.lambda);
    REQUIRE(fhat.size() == static_cast<std::size_t>(ref.f_hat.size()));
    bool same = true;
    for (std::size_t i = 0; i < fhat.size(); ++i) same = same && fhat[i] == ref.f_hat[i];
    CHECK(same);
}

}  // namespace

TEST_CASE("fit on a dataset exported by simulate reproduces the in-process fit bit for bit") {
    fs::path dir = scratch("roundtrip");
    CliRun ex = run_cli({"simulate", "--export-only", "--export-data", "1", "-o", dir.string()});
    REQUIRE(ex.code == 0);
    const std::string data = (dir / "replicate_0.csv").string();

    Replicate rep = generate_replicate(SimScenario::desk_scale(), 0);
    for (const std::string model : {"spatial_plus", "spatial", "gsem", "spatial_fx"}) {
        CAPTURE(model);
        fs::path out = dir / model;
        CliRun r = run_cli({"fit", data, "--model", model, "-o", out.string()});
        REQUIRE(r.code == 0);
        FitResult ref = fit_model(problem_from_replicate(rep), parse_model_tag(model));
        check_round_trip(read_json(out / "fit.json"), fhat_column(out / "fhat.csv"), ref);
    }
}

TEST_CASE("Poisson fit round trip") {
    fs::path dir = scratch("roundtrip_poisson");
    SimScenario sc = SimScenario::desk_scale();
    sc.family = ExponentialFamily::poisson();
    Replicate rep = generate_replicate(sc, 1);
    const std::string data = write_replicate(dir, rep);
    CliRun r = run_cli({"fit", data, "--family", "poisson", "--model", "spatial_plus", "-o", dir.string()});
    REQUIRE(r.code == 0);
    FitResult ref = fit_glm_model(problem_from_replicate(rep), parse_model_tag("spatial_plus"), sc.family);
    nlohmann::json j = read_json(dir / "fit.json");
    check_round_trip(j, fhat_column(dir / "fhat.csv"), ref);
    CHECK(j["iterations"].get<int>() == ref.iterations);
    CHECK(r.out.find("PIRLS iterations") != std::string::npos);
}

TEST_CASE("spatial+ on a simulated replicate recovers the covariate effect") {
    fs::path dir = scratch("spatial_plus");
    const std::string data = write_replicate(dir, generate_replicate(SimScenario::desk_scale(), 0));
    CliRun r = run_cli({"fit", data, "--model", "spatial_plus", "-o", dir.string()});
    REQUIRE(r.code == 0);
    nlohmann::json j = read_json(dir / "fit.json");
    CHECK(j["schema_version"] == 1);
    CHECK(j["model"] == "spatial_plus");
    CHECK(j["comparable"] == true);
    const double b = json_coef(j, "x"), se = json_coef(j, "x", "se");
    CHECK(std::abs(b - 3.0) <= 2.0 * se);
    CHECK(r.out.find("deviance explained") != std::string::npos);
    CHECK(r.out.find("AIC") != std::string::npos);

    std::ifstream fh(dir / "fhat.csv");
    std::string header;
    std::getline(fh, header);
    CHECK(header == "site,t1,t2,f_hat,fitted,linear_predictor");
}

TEST_CASE("RSR and the null model report the same covariate coefficient") {
    fs::path dir = scratch("rsr");
    const std::string data = write_replicate(dir, generate_replicate(SimScenario::desk_scale(), 2));
    REQUIRE(run_cli({"fit", data, "--model", "rsr", "-o", (dir / "rsr").string()}).code == 0);
    REQUIRE(run_cli({"fit", data, "--model", "null", "-o", (dir / "null").string()}).code == 0);
    const double rsr = json_coef(read_json(dir / "rsr" / "fit.json"), "x");
    const double null = json_coef(read_json(dir / "null" / "fit.json"), "x");
    CHECK(std::abs(rsr - null) <= 1e-10 * std::abs(null));
}

TEST_CASE("gSEM output is flagged as not comparable") {
    fs::path dir = scratch("gsem");
    const std::string data = write_replicate(dir, generate_replicate(SimScenario::desk_scale(), 0));
    CliRun r = run_cli({"fit", data, "--model", "gsem", "-o", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(read_json(dir / "fit.json")["comparable"] == false);
    CHECK(r.out.find("not comparable") != std::string::npos);
}

TEST_CASE("input problems exit with code 2 and name the cause") {
    fs::path dir = scratch("errors");
    const std::string data = write_replicate(dir, generate_replicate(SimScenario::desk_scale(), 0));

    CliRun miss = run_cli({"fit", data, "--covariates", "x,elevation", "-o", dir.string()});
    CHECK(miss.code == 2);
    CHECK(miss.err.find("elevation") != std::string::npos);

    {
        std::ofstream f(dir / "bad.csv");
        f << "t1,t2,x,y\n0,0,1,2\n1,0,oops,3\n";
    }
    CliRun bad = run_cli({"fit", (dir / "bad.csv").string(), "-o", dir.string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("line 3") != std::string::npos);
    CHECK(bad.err.find("'x'") != std::string::npos);

    {
        std::ofstream f(dir / "ragged.csv");
        f << "t1,t2,x,y\n0,0,1,2\n1,0,3\n";
    }
    CHECK(run_cli({"fit", (dir / "ragged.csv").string(), "-o", dir.string()}).code == 2);
    CHECK(run_cli({"fit", (dir / "absent.csv").string()}).code == 2);
    CHECK(run_cli({"fit", data, "--model", "kriging"}).code == 2);
    CHECK(run_cli({"fit", data, "--family", "gamma"}).code == 2);
    CHECK(run_cli({"fit", data, "--bogus-flag"}).code == 2);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("the installed binary returns the documented exit codes") {
    fs::path dir = scratch("binary");
    const std::string data = write_replicate(dir, generate_replicate(SimScenario::desk_scale(), 0));
    const std::string bin = SPATIALPLUS_BIN;
    auto status = [&](const std::string& args) {
        int s = std::system((bin + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(status("fit " + data + " --covariates nope -o " + dir.string()) == 2);
    std::ifstream log(dir / "log.txt");
    std::string text((std::istreambuf_iterator<char>(log)), std::istreambuf_iterator<char>());
    CHECK(text.find("missing column 'nope'") != std::string::npos);
    CHECK(status("fit " + data + " -o " + dir.string()) == 0);
    CHECK(status("asymptotics --check trace --delta 0") == 2);
}

TEST_CASE("a spatial covariate is a model error with exit code 3") {
    // The projected field lies in the span of the rank-100 basis.
    fs::path dir = scratch("model_error");
    const std::string data = write_replicate(dir, generate_replicate(SimScenario::desk_scale(), 0));
    CliRun r = run_cli({"fit", data, "--covariates", "z", "--model", "spatial_plus", "-o", dir.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("DegenerateResiduals") != std::string::npos);
    CHECK(run_cli({"fit", data, "--covariates", "z", "--model", "spatial", "-o", dir.string()}).code == 0);
}

TEST_CASE("simulate presets, flags and the acceptance exit code") {
    fs::path dir = scratch("simulate");
    REQUIRE(run_cli({"simulate", "--export-only", "--export-data", "1", "-o", (dir / "desk").string()}).code == 0);
    REQUIRE(run_cli({"simulate", "--paper-scale", "--export-only", "--export-data", "1", "-o",
                     (dir / "paper").string()})
                .code == 0);
    CHECK(cli::CsvTable::read_file((dir / "desk" / "replicate_0.csv").string()).rows.size() == 400);
    CHECK(cli::CsvTable::read_file((dir / "paper" / "replicate_0.csv").string()).rows.size() == 1000);

    REQUIRE(run_cli({"simulate", "--family", "poisson", "--export-only", "--export-data", "1", "-o",
                     (dir / "pois").string()})
                .code == 0);
    MatrixXd y = cli::CsvTable::read_file((dir / "pois" / "replicate_0.csv").string()).numeric({"y"});
    CHECK((y.array() == y.array().round()).all());
    CHECK(y.minCoeff() >= 0.0);

    {
        std::ofstream cfg(dir / "small.cfg");
        cfg << "# reduced study\nn = 120\nk = 40\nreplicates = 2\ncheck_acceptance = false\n";
    }
    CliRun ok = run_cli({"simulate", "--config", (dir / "small.cfg").string(), "--models", "null,spatial,spatial_plus",
                         "--seed", "3", "-o", (dir / "small").string()});
    CHECK(ok.code == 0);
    CHECK(fs::exists(dir / "small" / "replicates.csv"));
    CHECK(fs::exists(dir / "small" / "summary.csv"));
    nlohmann::json rep = read_json(dir / "small" / "report.json");
    CHECK(rep["config"]["seed"] == 3);
    CHECK(rep["summary"].size() == 3);

    // Without covariate noise spatial+ cannot be formed and the failure rate is too high.
    CliRun bad = run_cli({"simulate", "--config", (dir / "small.cfg").string(), "--set", "sigma_x=0", "--models",
                          "null,spatial_plus", "-o", (dir / "bad").string()});
    CHECK(bad.code == 5);

    CHECK(run_cli({"simulate", "--config", (dir / "missing.cfg").string()}).code == 2);
    CHECK(run_cli({"simulate", "--set", "colour=blue", "--export-only"}).code == 2);
    CHECK(run_cli({"simulate", "--family", "poisson", "--models", "gsem", "--export-only"}).code == 2);
}

TEST_CASE("asymptotics subcommand writes reports and enforces hard checks") {
    fs::path dir = scratch("asymptotics");
    CliRun eig = run_cli({"asymptotics", "--check", "eigen", "--d", "2", "--m", "2", "-o", dir.string()});
    CHECK(eig.code == 0);
    CHECK(eig.out.find("PASS eigen_slope") != std::string::npos);
    CHECK(fs::exists(dir / "eigen.csv"));
    CHECK(read_json(dir / "eigen.json")["schema_version"] == 1);

    CliRun sep = run_cli({"asymptotics", "--check", "separation", "--ladder", "60,120", "--replicates", "5", "-o",
                          dir.string()});
    CHECK(sep.code == 0);
    cli::CsvTable t = cli::CsvTable::read_file((dir / "separation.csv").string());
    std::set<std::string> series;
    for (const auto& row : t.rows) series.insert(row[t.column("series")]);
    CHECK(series.count("spatial") == 1);
    CHECK(series.count("spatial_plus") == 1);

    CHECK(run_cli({"asymptotics", "--check", "separation", "--delta", "1.5"}).code == 2);
    CHECK(run_cli({"asymptotics", "--check", "amse", "--delta-x", "-0.1"}).code == 2);
    CHECK(run_cli({"asymptotics", "--check", "eigen", "--d", "2", "--ladder", "100,150"}).code == 2);
    CHECK(run_cli({"asymptotics", "--check", "spectra"}).code == 2);
    CHECK(run_cli({"asymptotics", "--check", "separation", "--d", "2", "--m", "1"}).code == 2);

    CliRun tr = run_cli({"asymptotics", "--check", "trace", "-o", dir.string()});
    CHECK(tr.code == 0);

    // For m = 3 on small planar grids the spectrum has not reached its
    // asymptotic slope yet; a failed hard check exits with 5.
    CliRun slow = run_cli({"asymptotics", "--check", "eigen", "--d", "2", "--m", "3", "-o", dir.string()});
    CHECK(slow.code == 5);
    CHECK(slow.out.find("FAIL eigen_slope") != std::string::npos);
}
