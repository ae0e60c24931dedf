#include <doctest.h>

#include "spatialplus/errors.hpp"
#include "spatialplus/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace spatialplus;

namespace {

ExperimentConfig small_config(int replicates = 4) {
    ExperimentConfig c;
    c.scenario.n = 120;
    c.scenario.rank = 40;
    c.scenario.replicates = replicates;
    c.scenario.seed = 7;
    c.check_acceptance = false;
    return c;
}

std::string csv(const ExperimentReport& r) {
    std::ostringstream os;
    write_replicates_csv(os, r);
    return os.str();
}

std::string json_text(const ExperimentReport& r) {
    std::ostringstream os;
    write_report_json(os, r);
    return os.str();
}

}  // namespace

TEST_CASE("default model sets follow the two studies") {
    std::vector<std::string> g, m;
    for (const auto& t : default_gaussian_models()) g.push_back(t.name());
    for (const auto& t : default_glm_models()) m.push_back(t.name());
    CHECK(g == std::vector<std::string>{"null", "spatial", "spatial_fx", "rsr", "rsr_fx", "gsem", "gsem_fx",
                                        "spatial_plus", "spatial_plus_fx"});
    CHECK(m == std::vector<std::string>{"null", "spatial", "spatial_fx", "spatial_plus", "spatial_plus_fx", "rsr"});
}

TEST_CASE("config parsing") {
    std::istringstream in(
        "# study\n"
        "family = poisson\n"
        "n=300\n"
        "k = 60   # basis size\n"
        "replicates=3\n"
        "seed=11\n"
        "models = null, spatial_fx ,spatial_plus\n"
        "threads=2\n");
    ExperimentConfig c = ExperimentConfig::parse(in);
    CHECK(c.scenario.family.kind == FamilyKind::poisson);
    CHECK(c.scenario.n == 300);
    CHECK(c.scenario.rank == 60);
    CHECK(c.scenario.replicates == 3);
    CHECK(c.scenario.seed == 11);
    CHECK(c.threads == 2);
    REQUIRE(c.models.size() == 3);
    CHECK(c.models[1] == ModelTag{ModelKind::spatial, false});

    std::istringstream paper("n=500\nscale=paper\n");
    ExperimentConfig p = ExperimentConfig::parse(paper);
    CHECK(p.scenario.n == 500);
    CHECK(p.scenario.rank == 300);
    CHECK(p.scenario.replicates == 100);

    std::istringstream bad("colour=blue\n");
    CHECK_THROWS_AS(ExperimentConfig::parse(bad), InvalidInput);
    std::istringstream bad2("n=abc\n");
    CHECK_THROWS_AS(ExperimentConfig::parse(bad2), InvalidInput);
    std::istringstream bad3("just text\n");
    CHECK_THROWS_AS(ExperimentConfig::parse(bad3), InvalidInput);

    ExperimentConfig g = small_config();
    g.scenario.family = ExponentialFamily::poisson();
    g.models = {parse_model_tag("gsem")};
    CHECK_THROWS_AS(g.validate(), InvalidInput);
    ExperimentConfig k = small_config();
    k.scenario.rank = 3;
    CHECK_THROWS_AS(k.validate(), RankOutOfRange);
}

TEST_CASE("unpenalized spatial, gSEM and spatial+ give one estimate on a replicate") {
    ExperimentConfig c = small_config(1);
    c.models = {parse_model_tag("spatial_fx"), parse_model_tag("gsem_fx"), parse_model_tag("spatial_plus_fx")};
    ExperimentReport r = run_gaussian_study(c);
    REQUIRE(r.cells.size() == 3);
    for (const auto& cell : r.cells) {
        CHECK(cell.ok);
        CHECK(std::abs(cell.beta - r.cells[0].beta) <= 1e-8 * std::abs(r.cells[0].beta));
    }
    CHECK(r.identities[0].fx_beta_gap <= 1e-8);
    CHECK(r.identities[0].fx_fitted_gap <= 1e-8);
}

TEST_CASE("study output is deterministic and independent of the thread count") {
    ExperimentConfig c = small_config(4);
    ExperimentReport a = run_gaussian_study(c);
    ExperimentReport b = run_gaussian_study(c);
    c.threads = 3;
    ExperimentReport t = run_gaussian_study(c);
    CHECK(csv(a) == csv(b));
    CHECK(csv(a) == csv(t));
    CHECK(json_text(a) == json_text(t));

    c.scenario.seed = 8;
    CHECK(csv(run_gaussian_study(c)) != csv(a));
}

TEST_CASE("every replicate and model cell is present") {
    ExperimentConfig c = small_config(3);
    ExperimentReport r = run_gaussian_study(c);
    CHECK(r.cells.size() == 3 * default_gaussian_models().size());
    for (const auto& s : r.summary) CHECK(s.n_ok + s.n_failed == 3);
    CHECK(r.model("rsr").beta_mean == doctest::Approx(r.model("null").beta_mean).epsilon(1e-10));
    CHECK(r.model("spatial").lambda_median > 0.0);
    CHECK(std::isnan(r.model("spatial_fx").lambda_median));
    CHECK(r.failure_rate == 0.0);
    CHECK(!r.run_failed);
}

TEST_CASE("failing fits are quarantined and a high failure rate fails the run") {
    // Without covariate noise x is spatial, so spatial+ and gSEM cannot be formed.
    ExperimentConfig c = small_config(2);
    c.scenario.sigma_x = 0.0;
    c.models = {parse_model_tag("null"), parse_model_tag("spatial"), parse_model_tag("spatial_plus")};
    ExperimentReport r = run_gaussian_study(c);
    REQUIRE(r.cells.size() == 6);
    for (const auto& cell : r.cells) {
        if (cell.model == "spatial_plus") {
            CHECK(!cell.ok);
            CHECK(cell.error.find("DegenerateResiduals") != std::string::npos);
            CHECK(std::isnan(cell.beta));
        } else {
            CHECK(cell.ok);
        }
    }
    CHECK(r.model("spatial_plus").n_failed == 2);
    CHECK(r.failure_rate == doctest::Approx(1.0 / 3.0));
    CHECK(r.run_failed);
    CHECK(!r.acceptance_passed());
    auto j = nlohmann::json::parse(json_text(r));
    CHECK(j["failures"].size() == 2);
}

TEST_CASE("GLM study runs the six models and records PIRLS monotonicity") {
    ExperimentConfig c = small_config(2);
    c.scenario.family = ExponentialFamily::poisson();
    c.check_acceptance = true;
    ExperimentReport r = run_glm_study(c);
    CHECK(r.cells.size() == 12);
    for (const auto& cell : r.cells) {
        CHECK(cell.ok);
        CHECK(cell.monotone);
        CHECK(cell.log_mse == doctest::Approx(std::log(cell.mse)));
    }
    bool found = false;
    for (const auto& chk : r.checks)
        if (chk.id == "pirls_monotone") found = chk.passed;
    CHECK(found);
    CHECK_THROWS_AS(run_gaussian_study(c), InvalidInput);
}

TEST_CASE("output files have stable headers and a versioned report") {
    ExperimentConfig c = small_config(2);
    c.models = {parse_model_tag("null"), parse_model_tag("spatial")};
    c.output_dir = (std::filesystem::temp_directory_path() / "spatialplus_test_study").string();
    std::filesystem::remove_all(c.output_dir);
    ExperimentReport r = run_gaussian_study(c);
    std::ifstream rep(c.output_dir + "/replicates.csv"), sum(c.output_dir + "/summary.csv"),
        js(c.output_dir + "/report.json");
    REQUIRE(rep);
    REQUIRE(sum);
    REQUIRE(js);
    std::string h;
    std::getline(rep, h);
    CHECK(h == "replicate,model,ok,beta,se,mse,log_mse,lambda,lambda_x,edf,iterations,monotone,error");
    std::getline(sum, h);
    CHECK(h.rfind("model,n_ok,n_failed,beta_mean", 0) == 0);
    auto j = nlohmann::json::parse(js);
    CHECK(j["schema_version"] == 1);
    CHECK(j["summary"].size() == 2);
    CHECK(j["config"]["seed"] == 7);
    std::filesystem::remove_all(c.output_dir);
}
