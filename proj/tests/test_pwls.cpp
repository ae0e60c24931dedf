#include <doctest.h>

#include "oracles.hpp"
#include "spatialplus/errors.hpp"
#include "spatialplus/pwls.hpp"

using namespace spatialplus;

namespace {

struct Dense {
    VectorXd a, c, eta;
    double edf, rss;
};

Dense dense_pwls(const MatrixXd& Xu, const MatrixXd& Bp, const VectorXd& pen, const VectorXd& w, const VectorXd& z,
                 double lambda) {
    const Eigen::Index pu = Xu.cols(), k = Bp.cols(), n = z.size();
    MatrixXd D(n, pu + k);
    D << Xu, Bp;
    MatrixXd H = D.transpose() * w.asDiagonal() * D;
    H.bottomRightCorner(k, k) += lambda * MatrixXd(pen.asDiagonal());
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(H);
    VectorXd th = cod.solve(D.transpose() * w.cwiseProduct(z));
    MatrixXd F = D * cod.pseudoInverse() * D.transpose() * w.asDiagonal();
    Dense out;
    out.a = th.head(pu);
    out.c = th.tail(k);
    out.eta = D * th;
    out.edf = F.trace();
    out.rss = (w.cwiseSqrt().cwiseProduct(z - out.eta)).squaredNorm();
    return out;
}

struct Instance {
    MatrixXd Xu, Bp;
    VectorXd pen, w, z;
};

Instance make_instance(int n, int pu, int k, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.2, 3.0);
    Instance in;
    in.Xu = MatrixXd(n, pu);
    for (int j = 0; j < pu; ++j) in.Xu.col(j) = oracle::normal_vector(n, rng);
    in.Bp = MatrixXd(n, k);
    for (int j = 0; j < k; ++j) in.Bp.col(j) = oracle::normal_vector(n, rng);
    in.pen.resize(k);
    for (int j = 0; j < k; ++j) in.pen[j] = std::pow(j + 1.0, 2.0);
    in.w.resize(n);
    for (int i = 0; i < n; ++i) in.w[i] = U(rng);
    in.z = oracle::normal_vector(n, rng);
    return in;
}

}  // namespace

TEST_CASE("penalized WLS matches the dense weighted normal equations") {
    Instance in = make_instance(50, 4, 12, 1);
    PenalizedWLS eng(in.Xu, in.Bp, in.pen, in.w, 4);
    eng.set_response(in.z);
    for (double lambda : {1e-3, 0.5, 20.0}) {
        auto s = eng.solve(lambda);
        Dense d = dense_pwls(in.Xu, in.Bp, in.pen, in.w, in.z, lambda);
        CHECK(oracle::rel_err(s.a, d.a) < 1e-9);
        CHECK(oracle::rel_err(s.c, d.c) < 1e-9);
        CHECK(oracle::rel_err(s.eta, d.eta) < 1e-9);
        CHECK(oracle::rel_err(s.edf, d.edf) < 1e-9);
        CHECK(oracle::rel_err(s.rss, d.rss) < 1e-9);
        CHECK(oracle::rel_err(s.penalty, s.c.dot(in.pen.cwiseProduct(s.c))) < 1e-10);

        auto ops = eng.operators(lambda);
        CHECK(oracle::rel_err(VectorXd(ops.A * in.z), s.a) < 1e-9);
        CHECK(oracle::rel_err(VectorXd(ops.C * in.z), s.c) < 1e-9);
    }
}

TEST_CASE("rank-deficient unpenalized block still gives the unique fitted values") {
    Instance in = make_instance(40, 3, 8, 2);
    MatrixXd Xu(40, 4);
    Xu << in.Xu.col(1), in.Xu.col(0), in.Xu.col(2), in.Xu.col(0) - 2.0 * in.Xu.col(2);
    PenalizedWLS eng(Xu, in.Bp, in.pen, in.w, 1);
    CHECK(eng.unpenalized_rank() == 3);
    eng.set_response(in.z);
    auto s = eng.solve(0.3);
    Dense d = dense_pwls(Xu, in.Bp, in.pen, in.w, in.z, 0.3);
    CHECK(oracle::rel_err(s.eta, d.eta) < 1e-8);
    CHECK(oracle::rel_err(VectorXd(Xu * s.a), VectorXd(Xu * d.a)) < 1e-8);
    CHECK(oracle::rel_err(s.c, d.c) < 1e-8);
    CHECK(oracle::rel_err(s.edf, d.edf) < 1e-8);
    // A column that is a combination of the others cannot be identified.
    CHECK_THROWS_AS(PenalizedWLS(Xu, in.Bp, in.pen, in.w, 2), SingularDesign);
}

TEST_CASE("without a penalized block the engine is weighted least squares") {
    Instance in = make_instance(30, 3, 0, 3);
    PenalizedWLS eng(in.Xu, MatrixXd(30, 0), VectorXd(0), in.w, 3);
    eng.set_response(in.z);
    auto s = eng.solve(0.0);
    MatrixXd Xw = in.w.cwiseSqrt().asDiagonal() * in.Xu;
    VectorXd ols = Xw.colPivHouseholderQr().solve(in.w.cwiseSqrt().cwiseProduct(in.z));
    CHECK(oracle::rel_err(s.a, ols) < 1e-10);
    CHECK(s.edf == doctest::Approx(3.0));
    CHECK(eng.select_lambda({1.0, 2.0}) == 0.0);
}

TEST_CASE("engine GCV agrees with the dense score and input checks") {
    Instance in = make_instance(60, 2, 15, 4);
    PenalizedWLS eng(in.Xu, in.Bp, in.pen, in.w);
    eng.set_response(in.z);
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.4 * i));
    double best = eng.select_lambda(grid);
    double best_dense = 0.0, score = 1e300;
    for (double l : grid) {
        Dense d = dense_pwls(in.Xu, in.Bp, in.pen, in.w, in.z, l);
        double g = 60.0 * d.rss / ((60.0 - d.edf) * (60.0 - d.edf));
        CHECK(oracle::rel_err(*eng.gcv(l), g) < 1e-8);
        if (g <= score) {
            score = g;
            best_dense = l;
        }
    }
    CHECK(best == best_dense);

    VectorXd bad = in.w;
    bad[0] = 0.0;
    CHECK_THROWS_AS(PenalizedWLS(in.Xu, in.Bp, in.pen, bad), InvalidInput);
    CHECK_THROWS_AS(eng.solve(0.0), NonPositiveLambda);
}
