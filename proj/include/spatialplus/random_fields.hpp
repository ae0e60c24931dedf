#pragma once

#include "spatialplus/basis.hpp"
#include "spatialplus/glm.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>

namespace spatialplus {

enum class CovarianceKind { exponential, spherical };

struct CovarianceSpec {
    CovarianceKind kind = CovarianceKind::exponential;
    double range = 1.0;
    double power = 1.0;  // exponential only

    static CovarianceSpec exponential(double range, double power = 1.0) {
        return {CovarianceKind::exponential, range, power};
    }
    static CovarianceSpec spherical(double range) { return {CovarianceKind::spherical, range, 1.0}; }

    double operator()(double h) const;
    void validate() const;
};

MatrixXd covariance_matrix(const MatrixXd& points, const CovarianceSpec& spec);

// SplitMix64 finalizer, used to derive independent substreams from (seed, stream).
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream);

// Cholesky factor of a covariance matrix with diagonal jitter escalated from
// 1e-10 to 1e-6 (relative to the variance) until the factorization succeeds.
class GrfSampler {
public:
    GrfSampler(const MatrixXd& points, const CovarianceSpec& spec);
    VectorXd sample(std::mt19937_64& rng) const;
    double jitter() const { return jitter_; }
    int n() const { return static_cast<int>(L_.rows()); }

private:
    MatrixXd L_;
    double jitter_ = 0.0;
};

VectorXd sample_grf(const MatrixXd& points, const CovarianceSpec& spec, std::mt19937_64& rng);

// Fitted values of the GCV-smoothed spline regression of the field on the
// basis, or at a fixed lambda when given.
VectorXd project_to_spline_span(const VectorXd& field, const TpsBasis& basis, std::optional<double> lambda = {},
                                double* lambda_used = nullptr);

struct SimScenario {
    int grid_side = 50;
    double extent = 10.0;
    int n = 400;
    int rank = 100;
    int m = 2;
    double beta = 3.0;
    double sigma_x = 0.1;
    double sigma_y = 1.0;
    CovarianceSpec cov_z = CovarianceSpec::exponential(5.0, 1.0);
    CovarianceSpec cov_zp = CovarianceSpec::spherical(1.0);
    bool project_fields = true;
    ExponentialFamily family = ExponentialFamily::gaussian();
    int replicates = 50;
    std::uint64_t seed = 20240601;

    static SimScenario desk_scale() { return {}; }
    static SimScenario paper_scale();
    void validate() const;
};

struct Replicate {
    int index = 0;
    std::vector<int> site_index;  // node ids on the grid
    MatrixXd coords;
    TpsBasis basis;  // rank-k basis on the sampled sites
    VectorXd z, zp;  // fields after projection
    VectorXd x, y, f;
    VectorXd eta;    // beta x + f
    VectorXd mean;   // true mean of y
};

// Replicate r draws from substream (seed, r), so it does not depend on how
// many replicates are generated or in which order.
Replicate generate_replicate(const SimScenario& sc, int r);

void write_replicate_csv(std::ostream& out, const Replicate& rep);

}  // namespace spatialplus
