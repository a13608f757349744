#include "tiebreak/model.hpp"

#include <cmath>

namespace tiebreak {

namespace {

double pivot_threshold(const MatrixXd& M) {
    return 1e-12 * M.trace() / static_cast<double>(M.rows());
}

}  // namespace

DesignProblem::DesignProblem(MatrixXd X, VectorXd eta)
    : X_(std::move(X)), eta_(std::move(eta)) {
    if (X_.rows() < 1 || X_.cols() < 1) {
        throw InvalidArgument("DesignProblem: need n >= 1 and d >= 1");
    }
    if (!X_.allFinite()) {
        throw InvalidArgument("DesignProblem: X has non-finite entries");
    }
    if (eta_.size() != X_.cols()) {
        throw DimensionMismatch("DesignProblem: eta length must equal d");
    }
    if (!eta_.allFinite()) {
        throw InvalidArgument("DesignProblem: eta has non-finite entries");
    }
    Xt_.resize(X_.rows(), X_.cols() + 1);
    Xt_.col(0).setOnes();
    Xt_.rightCols(X_.cols()) = X_;
}

VectorXd DesignProblem::running() const {
    if (eta_.isZero(0.0)) {
        throw InvalidArgument("running variable requires eta != 0");
    }
    return X_ * eta_;
}

ProbabilityVector::ProbabilityVector(VectorXd p) : p_(std::move(p)) {
    for (Eigen::Index i = 0; i < p_.size(); ++i) {
        const double v = p_[i];
        if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
            throw InvalidArgument("ProbabilityVector: entry " + std::to_string(i) +
                                  " outside [0,1]");
        }
        p_[i] = std::min(1.0, std::max(0.0, v));
    }
}

InformationMatrix::InformationMatrix(MatrixXd M, InfoScale scale)
    : M_(std::move(M)), scale_(scale) {
    if (M_.rows() != M_.cols()) {
        throw DimensionMismatch("InformationMatrix: matrix must be square");
    }
    const double scale_norm = std::max(1.0, M_.cwiseAbs().maxCoeff());
    if ((M_ - M_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale_norm) {
        throw InvalidArgument("InformationMatrix: matrix not symmetric");
    }
    M_ = 0.5 * (M_ + M_.transpose().eval());
    Eigen::LDLT<MatrixXd> ldlt(M_);
    if (ldlt.vectorD().minCoeff() < -1e-10 * M_.trace()) {
        throw InvalidArgument("InformationMatrix: matrix not positive semi-definite");
    }
}

std::vector<AugmentedRow> augment_rows(const DesignProblem& problem) {
    const MatrixXd& Xt = problem.augmented();
    const int k = problem.d() + 1;
    std::vector<AugmentedRow> rows(problem.n());
    for (int i = 0; i < problem.n(); ++i) {
        VectorXd xt = Xt.row(i).transpose();
        rows[i].u_plus.resize(2 * k);
        rows[i].u_minus.resize(2 * k);
        rows[i].u_plus << xt, xt;
        rows[i].u_minus << xt, -xt;
    }
    return rows;
}

namespace {

MatrixXd assemble_blocks(const MatrixXd& Xt, const VectorXd& weights) {
    const int k = static_cast<int>(Xt.cols());
    MatrixXd A = Xt.transpose() * Xt;
    MatrixXd B = Xt.transpose() * weights.asDiagonal() * Xt;
    MatrixXd M(2 * k, 2 * k);
    M.topLeftCorner(k, k) = A;
    M.topRightCorner(k, k) = B;
    M.bottomLeftCorner(k, k) = B;
    M.bottomRightCorner(k, k) = A;
    return M;
}

}  // namespace

InformationMatrix expected_information(const DesignProblem& problem,
                                       const ProbabilityVector& p) {
    if (p.size() != problem.n()) {
        throw DimensionMismatch("expected_information: length(p) != n");
    }
    const VectorXd w = 2.0 * p.p().array() - 1.0;
    return InformationMatrix(assemble_blocks(problem.augmented(), w), InfoScale::Total);
}

InformationMatrix realized_information(const DesignProblem& problem, const VectorXi& z) {
    if (z.size() != problem.n()) {
        throw DimensionMismatch("realized_information: length(z) != n");
    }
    VectorXd w(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (z[i] != 1 && z[i] != -1) {
            throw InvalidArgument("realized_information: z entries must be +1 or -1");
        }
        w[i] = static_cast<double>(z[i]);
    }
    return InformationMatrix(assemble_blocks(problem.augmented(), w), InfoScale::Total);
}

double neg_log_det(const InformationMatrix& info) {
    const MatrixXd& M = info.M();
    Eigen::LDLT<MatrixXd> ldlt(M);
    const VectorXd pivots = ldlt.vectorD();
    const double threshold = pivot_threshold(M);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pivots.size(); ++i) {
        if (pivots[i] <= threshold) {
            throw SingularInformation("neg_log_det: Cholesky pivot below rank threshold");
        }
        sum += std::log(pivots[i]);
    }
    return -sum;
}

namespace {

Eigen::LDLT<MatrixXd> factor_expected(const DesignProblem& problem,
                                      const ProbabilityVector& p, double ridge) {
    MatrixXd M = expected_information(problem, p).M();
    if (ridge > 0.0) M.diagonal().array() += ridge;
    Eigen::LDLT<MatrixXd> ldlt(M);
    if (ldlt.vectorD().minCoeff() <= pivot_threshold(M)) {
        throw SingularInformation("expected information is singular");
    }
    return ldlt;
}

}  // namespace

VectorXd criterion_gradient(const DesignProblem& problem, const ProbabilityVector& p,
                            double ridge) {
    const auto ldlt = factor_expected(problem, p, ridge);
    const int k = problem.d() + 1;

    // u_{i+/-} share their first block, so the difference of quadratic forms
    // collapses to 4 x~_i^T Q x~_i with Q the off-diagonal block of M^{-1}.
    MatrixXd rhs = MatrixXd::Zero(2 * k, k);
    rhs.bottomRows(k).setIdentity();
    const MatrixXd Q = ldlt.solve(rhs).topRows(k);

    const MatrixXd& Xt = problem.augmented();
    return -4.0 * (Xt * Q).cwiseProduct(Xt).rowwise().sum();
}

double design_objective(const DesignProblem& problem, const ProbabilityVector& p,
                        double ridge) {
    const auto ldlt = factor_expected(problem, p, ridge);
    return -ldlt.vectorD().array().log().sum();
}

}  // namespace tiebreak
