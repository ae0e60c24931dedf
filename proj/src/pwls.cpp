#include "spatialplus/pwls.hpp"

#include "spatialplus/errors.hpp"
#include "spatialplus/smoothing.hpp"

#include <Eigen/SVD>

namespace spatialplus {

namespace {

constexpr double kRankTol = 1e-9;

int numerical_rank(const VectorXd& s) {
    if (s.size() == 0 || s[0] <= 0.0) return 0;
    int r = 0;
    while (r < s.size() && s[r] > kRankTol * s[0]) ++r;
    return r;
}

}  // namespace

PenalizedWLS::PenalizedWLS(const MatrixXd& Xu, const MatrixXd& Bp, const VectorXd& pen, const VectorXd& w,
                           int identified)
    : Xu_(Xu), Bp_(Bp), pen_(pen) {
    const Eigen::Index n = w.size();
    if (Xu.rows() != n || Bp.rows() != n || Bp.cols() != pen.size()) throw InvalidInput("PenalizedWLS: shape mismatch");
    if ((w.array() <= 0.0).any() || !w.allFinite()) throw InvalidInput("PenalizedWLS: weights must be positive");
    if ((pen.array() <= 0.0).any()) throw InvalidInput("PenalizedWLS: penalized columns need positive penalty");
    sw_ = w.cwiseSqrt();

    if (Xu.cols() > 0) {
        MatrixXd Au = sw_.asDiagonal() * Xu;
        Eigen::BDCSVD<MatrixXd> svd(Au, Eigen::ComputeThinU | Eigen::ComputeThinV);
        ru_ = numerical_rank(svd.singularValues());
        Uu_ = svd.matrixU().leftCols(ru_);
        Vu_ = svd.matrixV().leftCols(ru_);
        su_ = svd.singularValues().head(ru_);
        if (identified > 0) {
            int rest = 0;
            if (Xu.cols() > identified) {
                MatrixXd tail = Au.rightCols(Xu.cols() - identified);
                Eigen::BDCSVD<MatrixXd> s2(tail);
                VectorXd sv = s2.singularValues();
                // Same absolute cut-off as the full block.
                while (rest < sv.size() && sv[rest] > kRankTol * svd.singularValues()[0]) ++rest;
            }
            if (ru_ - rest < identified) throw SingularDesign("covariate columns are collinear with the unpenalized block");
        }
    } else {
        Uu_.resize(n, 0);
        Vu_.resize(0, 0);
        su_.resize(0);
    }

    const Eigen::Index kp = Bp.cols();
    if (kp > 0) {
        MatrixXd G = sw_.asDiagonal() * Bp;
        for (int pass = 0; pass < 2; ++pass) G -= Uu_ * (Uu_.transpose() * G);
        G = G * pen.cwiseSqrt().cwiseInverse().asDiagonal();
        Eigen::BDCSVD<MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Ug_ = svd.matrixU();
        Vg_ = svd.matrixV();
        sg_ = svd.singularValues();
    } else {
        Ug_.resize(n, 0);
        Vg_.resize(0, 0);
        sg_.resize(0);
    }
}

void PenalizedWLS::set_response(const VectorXd& z) {
    if (z.size() != n()) throw InvalidInput("PenalizedWLS: response length mismatch");
    zt_ = sw_.cwiseProduct(z);
    zu_ = Uu_ * (Uu_.transpose() * zt_);
    VectorXd r = zt_ - zu_;
    r -= Uu_ * (Uu_.transpose() * r);
    g_ = Ug_.transpose() * r;
    rperp2_ = (r - Ug_ * g_).squaredNorm();
    has_response_ = true;
}

double PenalizedWLS::edf(double lambda) const {
    double e = ru_;
    for (Eigen::Index j = 0; j < sg_.size(); ++j) {
        double s2 = sg_[j] * sg_[j];
        e += s2 / (s2 + lambda);
    }
    return e;
}

double PenalizedWLS::rss(double lambda) const {
    if (!has_response_) throw InvalidInput("PenalizedWLS: response not set");
    double r = rperp2_;
    for (Eigen::Index j = 0; j < sg_.size(); ++j) {
        double s2 = sg_[j] * sg_[j];
        double shrink = lambda / (s2 + lambda);
        r += shrink * shrink * g_[j] * g_[j];
    }
    return r;
}

std::optional<double> PenalizedWLS::gcv(double lambda) const {
    double e = edf(lambda);
    if (gcv_degenerate(e, n())) return std::nullopt;
    return gcv_value(rss(lambda), e, n());
}

double PenalizedWLS::select_lambda(const std::vector<double>& grid) const {
    if (penalized_cols() == 0) return 0.0;
    return argmin_on_grid(grid, [&](double lambda) { return gcv(lambda); });
}

VectorXd PenalizedWLS::unpenalized_coef(const VectorXd& target) const {
    if (ru_ == 0) return VectorXd::Zero(Xu_.cols());
    return Vu_ * (Uu_.transpose() * target).cwiseQuotient(su_);
}

PenalizedWLS::Solution PenalizedWLS::solve(double lambda) const {
    if (!has_response_) throw InvalidInput("PenalizedWLS: response not set");
    Solution out;
    const Eigen::Index kp = sg_.size();
    if (kp > 0) {
        if (!(lambda > 0.0)) throw NonPositiveLambda("penalized fit needs lambda > 0");
        VectorXd fg(kp);
        for (Eigen::Index j = 0; j < kp; ++j) fg[j] = sg_[j] / (sg_[j] * sg_[j] + lambda);
        VectorXd e = Vg_ * fg.cwiseProduct(g_);
        out.penalty = e.squaredNorm();
        out.c = e.cwiseQuotient(pen_.cwiseSqrt());
        out.a = unpenalized_coef(zt_ - sw_.cwiseProduct(Bp_ * out.c));
        out.eta = Xu_ * out.a + Bp_ * out.c;
    } else {
        out.c.resize(0);
        out.a = unpenalized_coef(zt_);
        out.eta = Xu_ * out.a;
    }
    out.edf = edf(lambda);
    out.rss = rss(lambda);
    return out;
}

PenalizedWLS::Operators PenalizedWLS::operators(double lambda) const {
    Operators op;
    const Eigen::Index kp = sg_.size();
    const Eigen::Index n = sw_.size();
    MatrixXd pinv_u = ru_ > 0 ? MatrixXd(Vu_ * su_.cwiseInverse().asDiagonal() * Uu_.transpose())
                              : MatrixXd::Zero(Xu_.cols(), n);
    if (kp > 0) {
        VectorXd fg(kp);
        for (Eigen::Index j = 0; j < kp; ++j) fg[j] = sg_[j] / (sg_[j] * sg_[j] + lambda);
        op.C = pen_.cwiseSqrt().cwiseInverse().asDiagonal() * Vg_ * fg.asDiagonal() *
               (Ug_.transpose() * sw_.asDiagonal());
        MatrixXd Bw = sw_.asDiagonal() * Bp_;
        op.A = pinv_u * sw_.asDiagonal() - (pinv_u * Bw) * op.C;
    } else {
        op.C.resize(0, n);
        op.A = pinv_u * sw_.asDiagonal();
    }
    return op;
}

}  // namespace spatialplus
