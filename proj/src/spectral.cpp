#include "pivotal/spectral.hpp"

#include <cmath>
#include <string>

#include "pivotal/error.hpp"

namespace pivotal {

void require_symmetric(const Eigen::MatrixXd& a, const char* context) {
  if (a.rows() != a.cols()) {
    fail(ErrorCode::InvalidArgument, std::string(context) + ": matrix is not square");
  }
  if (!a.allFinite()) fail(ErrorCode::Numerical, std::string(context) + ": matrix has non-finite entries");
  const double scale = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  const double asym = a.size() ? (a - a.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-12 * scale) {
    fail(ErrorCode::InvalidArgument, std::string(context) + ": matrix is not symmetric");
  }
}

LaplacianMatrix laplacian(const Eigen::MatrixXd& similarity) {
  require_symmetric(similarity, "laplacian");
  LaplacianMatrix out;
  out.matrix = -similarity;
  out.matrix.diagonal() += similarity.rowwise().sum();
  return out;
}

void normalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double v = std::abs(vectors(r, c));
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (vectors.rows() > 0 && vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

EigenDecomposition sym_eig(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) fail(ErrorCode::InvalidArgument, "sym_eig: empty matrix");
  require_symmetric(a, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) fail(ErrorCode::Numerical, "sym_eig: eigensolver did not converge");
  EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  normalize_signs(out.eigenvectors);
  return out;
}

Eigen::MatrixXd smallest_k_eigenvectors(const Eigen::MatrixXd& a, std::size_t k) {
  if (k == 0 || k > static_cast<std::size_t>(a.rows())) {
    fail(ErrorCode::InvalidArgument, "smallest_k_eigenvectors: k=" + std::to_string(k) +
                                         " must be in [1, " + std::to_string(a.rows()) + "]");
  }
  return sym_eig(a).eigenvectors.leftCols(static_cast<Eigen::Index>(k));
}

}  // namespace pivotal
