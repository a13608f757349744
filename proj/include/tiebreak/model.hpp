#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tiebreak/errors.hpp"

namespace tiebreak {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// Immutable input bundle: covariates X (n x d) and scoring direction eta.
class DesignProblem {
public:
    DesignProblem(MatrixXd X, VectorXd eta);

    const MatrixXd& X() const { return X_; }
    const VectorXd& eta() const { return eta_; }
    int n() const { return static_cast<int>(X_.rows()); }
    int d() const { return static_cast<int>(X_.cols()); }

    /// [1 X], the intercept-augmented design.
    const MatrixXd& augmented() const { return Xt_; }

    /// Running variable s_i = x_i^T eta. Throws if eta = 0.
    VectorXd running() const;

private:
    MatrixXd X_;
    VectorXd eta_;
    MatrixXd Xt_;
};

/// Per-subject treatment probabilities, clamped to [0,1] on construction.
/// Entries outside the box by more than 1e-12 are rejected.
class ProbabilityVector {
public:
    explicit ProbabilityVector(VectorXd p);

    const VectorXd& p() const { return p_; }
    int size() const { return static_cast<int>(p_.size()); }
    double operator[](int i) const { return p_[i]; }

private:
    VectorXd p_;
};

struct AugmentedRow {
    VectorXd u_plus;   // (x~, x~)
    VectorXd u_minus;  // (x~, -x~)
};

enum class InfoScale { Total, PerObservation };

/// Symmetric PSD 2(d+1) x 2(d+1) information matrix.
/// Construction checks symmetry (1e-10 relative) and that pivoted Cholesky
/// reports no pivot below -1e-10 * trace.
class InformationMatrix {
public:
    InformationMatrix(MatrixXd M, InfoScale scale);

    const MatrixXd& M() const { return M_; }
    InfoScale scale() const { return scale_; }
    int dim() const { return static_cast<int>(M_.rows()); }

private:
    MatrixXd M_;
    InfoScale scale_;
};

std::vector<AugmentedRow> augment_rows(const DesignProblem& problem);

/// E(U^T U) = sum_i [p_i u_{i+} u_{i+}^T + (1-p_i) u_{i-} u_{i-}^T],
/// assembled as [[A, B], [B, A]] with A = X~^T X~, B = X~^T diag(2p-1) X~.
InformationMatrix expected_information(const DesignProblem& problem,
                                       const ProbabilityVector& p);

/// U^T U for a realized assignment z in {-1,+1}^n.
InformationMatrix realized_information(const DesignProblem& problem, const VectorXi& z);

/// -log det(M) via pivoted Cholesky. Throws SingularInformation if any
/// pivot <= 1e-12 * trace(M) / dim.
double neg_log_det(const InformationMatrix& info);

/// Exact gradient of neg_log_det(expected_information(p)) w.r.t. p:
/// g_i = -(u_{i+}^T M^{-1} u_{i+} - u_{i-}^T M^{-1} u_{i-}),
/// with M^{-1} applied through Cholesky solves. An optional ridge is added
/// to M before factorization (used by the solver's degenerate-case path).
VectorXd criterion_gradient(const DesignProblem& problem, const ProbabilityVector& p,
                            double ridge = 0.0);

/// neg_log_det of the expected information with an optional ridge; the
/// solver's objective. Shares the singularity policy of neg_log_det.
double design_objective(const DesignProblem& problem, const ProbabilityVector& p,
                        double ridge = 0.0);

}  // namespace tiebreak
