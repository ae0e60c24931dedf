#pragma once

#include "spatialplus/checks.hpp"
#include "spatialplus/estimators.hpp"
#include "spatialplus/glm.hpp"
#include "spatialplus/random_fields.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace spatialplus {

struct ExperimentConfig {
    SimScenario scenario;
    // Empty means the default model set of the family.
    std::vector<ModelTag> models;
    int threads = 1;
    double max_failure_rate = 0.05;
    bool check_acceptance = true;
    // Files are written only when set.
    std::string output_dir;

    static ExperimentConfig desk_scale(const ExponentialFamily& family = ExponentialFamily::gaussian());
    static ExperimentConfig paper_scale(const ExponentialFamily& family = ExponentialFamily::gaussian());

    // Plain-text key=value lines; '#' starts a comment. Unknown keys throw.
    static ExperimentConfig parse(std::istream& in);
    static ExperimentConfig from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    std::vector<ModelTag> model_set() const;
    void validate() const;
};

// The paper's model lists: nine Gaussian models and six GLM models.
std::vector<ModelTag> default_gaussian_models();
std::vector<ModelTag> default_glm_models();

RegressionProblem problem_from_replicate(const Replicate& rep);

// One (replicate, model) cell. Failed cells keep their error message and NaN
// statistics.
struct CellResult {
    int replicate = 0;
    std::string model;
    bool ok = false;
    std::string error;
    double beta = 0.0;
    double se = 0.0;
    double mse = 0.0;
    double log_mse = 0.0;
    double lambda = 0.0;
    double lambda_x = 0.0;
    double edf = 0.0;
    int iterations = 0;
    bool monotone = true;
};

// Within-replicate identities used by the acceptance checks.
struct ReplicateIdentities {
    int replicate = 0;
    double fx_beta_gap = 0.0;    // max relative gap among spatial_fx, gsem_fx, spatial_plus_fx
    double fx_fitted_gap = 0.0;  // same for fitted values
    double rsr_null_gap = 0.0;   // relative |beta_rsr - beta_null|
};

struct ModelSummary {
    std::string model;
    int n_ok = 0;
    int n_failed = 0;
    double beta_mean = 0.0;
    double beta_sd = 0.0;
    double beta_mc_se = 0.0;
    double beta_q05 = 0.0, beta_q25 = 0.0, beta_median = 0.0, beta_q75 = 0.0, beta_q95 = 0.0;
    double mse_mean = 0.0;
    double mse_median = 0.0;
    double log_mse_median = 0.0;
    double lambda_median = 0.0;
    double edf_mean = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<CellResult> cells;  // replicate-major, config model order
    std::vector<ReplicateIdentities> identities;
    std::vector<ModelSummary> summary;
    std::vector<AcceptanceCheck> checks;
    double failure_rate = 0.0;
    bool run_failed = false;
    double seconds = 0.0;

    const ModelSummary& model(const std::string& name) const;
    bool acceptance_passed() const;
};

ExperimentReport run_gaussian_study(const ExperimentConfig& config);
ExperimentReport run_glm_study(const ExperimentConfig& config);
// Dispatches on scenario.family.
ExperimentReport run_study(const ExperimentConfig& config);

std::vector<ModelSummary> summarize(const std::vector<CellResult>& cells, const std::vector<ModelTag>& models);

// replicates.csv: replicate,model,ok,beta,se,mse,log_mse,lambda,lambda_x,edf,iterations,monotone,error
void write_replicates_csv(std::ostream& out, const ExperimentReport& report);
// summary.csv: model,n_ok,n_failed,beta_mean,beta_sd,beta_mc_se,beta_q05,...,edf_mean
void write_summary_csv(std::ostream& out, const ExperimentReport& report);
void write_report_json(std::ostream& out, const ExperimentReport& report);
// Writes the three files into config.output_dir (created if missing).
void write_outputs(const ExperimentReport& report);

}  // namespace spatialplus
