#include "mtlqg/linalg.hpp"

#include <cmath>
#include <limits>

namespace mtlqg {

Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& m, double cutoff) {
  const Eigen::Index n = m.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double top = lambda.cwiseAbs().maxCoeff();
  if (top == 0.0) return Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd inv(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    inv(k) = lambda(k) > cutoff * top ? 1.0 / lambda(k) : 0.0;
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  return v * inv.asDiagonal() * v.transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()),
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double asymmetry(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m, double clip) {
  const Eigen::Index n = m.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  Eigen::VectorXd root = eig.eigenvalues();
  for (Eigen::Index k = 0; k < n; ++k) root(k) = root(k) > clip ? std::sqrt(root(k)) : 0.0;
  return eig.eigenvectors() * root.asDiagonal();
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace mtlqg
