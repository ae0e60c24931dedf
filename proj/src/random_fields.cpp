#include "spatialplus/random_fields.hpp"

#include "spatialplus/errors.hpp"
#include "spatialplus/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace spatialplus {

double CovarianceSpec::operator()(double h) const {
    switch (kind) {
        case CovarianceKind::exponential: return std::exp(-std::pow(h / range, power));
        case CovarianceKind::spherical: {
            if (h >= range) return 0.0;
            double u = h / range;
            return 1.0 - 1.5 * u + 0.5 * u * u * u;
        }
    }
    return 0.0;
}

void CovarianceSpec::validate() const {
    if (!(range > 0.0)) throw InvalidInput("covariance range must be > 0");
    if (kind == CovarianceKind::exponential && !(power > 0.0 && power <= 2.0))
        throw InvalidInput("exponential covariance power must lie in (0, 2]");
}

MatrixXd covariance_matrix(const MatrixXd& points, const CovarianceSpec& spec) {
    spec.validate();
    const Eigen::Index n = points.rows();
    MatrixXd C(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        C(i, i) = spec(0.0);
        for (Eigen::Index j = 0; j < i; ++j) C(i, j) = C(j, i) = spec((points.row(i) - points.row(j)).norm());
    }
    return C;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

GrfSampler::GrfSampler(const MatrixXd& points, const CovarianceSpec& spec) {
    MatrixXd C = covariance_matrix(points, spec);
    const Eigen::Index n = C.rows();
    Eigen::LLT<MatrixXd> llt(C);
    if (llt.info() == Eigen::Success) {
        L_ = llt.matrixL();
        return;
    }
    for (double j = 1e-10; j <= 1e-6 * (1 + 1e-9); j *= 10.0) {
        llt.compute(C + j * MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
            L_ = llt.matrixL();
            jitter_ = j;
            return;
        }
    }
    throw CovarianceNotPSD("Cholesky failed with jitter up to 1e-6");
}

VectorXd GrfSampler::sample(std::mt19937_64& rng) const {
    std::normal_distribution<double> N(0.0, 1.0);
    VectorXd e(L_.rows());
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = N(rng);
    return L_.triangularView<Eigen::Lower>() * e;
}

VectorXd sample_grf(const MatrixXd& points, const CovarianceSpec& spec, std::mt19937_64& rng) {
    return GrfSampler(points, spec).sample(rng);
}

VectorXd project_to_spline_span(const VectorXd& field, const TpsBasis& basis, std::optional<double> lambda,
                                double* lambda_used) {
    if (field.size() != basis.n()) throw InvalidInput("project_to_spline_span: length mismatch");
    SmootherOperator op(basis);
    double lam = lambda ? *lambda : select_lambda(op, field);
    if (lambda_used) *lambda_used = lam;
    return apply_smoother(op, field, lam);
}

SimScenario SimScenario::paper_scale() {
    SimScenario s;
    s.n = 1000;
    s.rank = 300;
    s.replicates = 100;
    return s;
}

void SimScenario::validate() const {
    if (grid_side < 2) throw InvalidInput("grid_side must be >= 2");
    if (n < 1 || n > grid_side * grid_side) throw InvalidInput("n must lie in [1, grid_side^2]");
    if (rank < nullspace_dim(m, 2) || rank > n) throw RankOutOfRange("basis rank must lie in [M, n]");
    if (!(sigma_x >= 0.0) || !(sigma_y >= 0.0)) throw InvalidInput("noise levels must be >= 0");
    if (replicates < 1) throw InvalidInput("replicates must be >= 1");
    cov_z.validate();
    cov_zp.validate();
}

Replicate generate_replicate(const SimScenario& sc, int r) {
    sc.validate();
    std::mt19937_64 rng = substream(sc.seed, static_cast<std::uint64_t>(r));
    Replicate rep;
    rep.index = r;

    const int nodes = sc.grid_side * sc.grid_side;
    std::vector<int> all(nodes);
    std::iota(all.begin(), all.end(), 0);
    // Partial Fisher-Yates: the first n entries are a uniform sample without replacement.
    for (int i = 0; i < sc.n; ++i) {
        std::uniform_int_distribution<int> pick(i, nodes - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    rep.site_index.assign(all.begin(), all.begin() + sc.n);
    rep.coords.resize(sc.n, 2);
    const double step = sc.extent / (sc.grid_side - 1);
    for (int i = 0; i < sc.n; ++i) {
        int id = rep.site_index[i];
        rep.coords(i, 0) = (id % sc.grid_side) * step;
        rep.coords(i, 1) = (id / sc.grid_side) * step;
    }

    TpsBasis full = build_basis(LocationSet(rep.coords), sc.m);
    rep.basis = sc.rank < sc.n ? truncate_basis(full, sc.rank) : full;

    rep.z = sample_grf(rep.coords, sc.cov_z, rng);
    rep.zp = sample_grf(rep.coords, sc.cov_zp, rng);
    if (sc.project_fields) {
        rep.z = project_to_spline_span(rep.z, rep.basis);
        rep.zp = project_to_spline_span(rep.zp, rep.basis);
    }

    std::normal_distribution<double> N(0.0, 1.0);
    rep.x.resize(sc.n);
    for (int i = 0; i < sc.n; ++i) rep.x[i] = 0.5 * rep.z[i] + sc.sigma_x * N(rng);
    rep.f = -rep.z - rep.zp;
    rep.eta = sc.beta * rep.x + rep.f;
    if (sc.family.kind == FamilyKind::gaussian) {
        rep.mean = rep.eta;
        rep.y.resize(sc.n);
        for (int i = 0; i < sc.n; ++i) rep.y[i] = rep.eta[i] + sc.sigma_y * N(rng);
    } else {
        rep.mean.resize(sc.n);
        for (int i = 0; i < sc.n; ++i) rep.mean[i] = sc.family.linkinv(rep.eta[i]);
        rep.y = simulate_glm_response(rep.eta, sc.family, rng);
    }
    return rep;
}

void write_replicate_csv(std::ostream& out, const Replicate& rep) {
    out << "site,t1,t2,x,y,f_true,z,z_prime\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < rep.x.size(); ++i) {
        out << rep.site_index[i] << ',' << rep.coords(i, 0) << ',' << rep.coords(i, 1) << ',' << rep.x[i] << ','
            << rep.y[i] << ',' << rep.f[i] << ',' << rep.z[i] << ',' << rep.zp[i] << '\n';
    }
}

}  // namespace spatialplus
