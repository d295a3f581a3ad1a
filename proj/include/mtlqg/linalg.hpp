// Dense linear-algebra helpers shared across modules.

#pragma once

#include <Eigen/Dense>

namespace mtlqg {

/// Relative cutoff below which eigenvalues count as zero.
inline constexpr double kPinvCutoff = 1e-10;

/// Relative cutoff on singular values for rank-revealing least squares.
inline constexpr double kRankCutoff = 1e-12;

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix; eigenvalues below
/// kPinvCutoff * lambda_max are dropped.
Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& m, double cutoff = kPinvCutoff);

/// Smallest eigenvalue of the symmetric part; +inf for empty matrices.
double min_eigenvalue(const Eigen::MatrixXd& m);

/// max |m - m^T|.
double asymmetry(const Eigen::MatrixXd& m);

/// Factor F with F F^T = m for symmetric PSD m; eigenvalues below `clip`
/// (absolute) are set to zero.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m, double clip = 1e-12);

/// Spectral norm (largest singular value); 0 for empty matrices.
double spectral_norm(const Eigen::MatrixXd& m);

/// Block-diagonal assembly.
Eigen::MatrixXd block_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace mtlqg
