#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace pivotal {

struct LaplacianMatrix {
  Eigen::MatrixXd matrix;
};

// Eigenvalues ascending; column j of `eigenvectors` pairs with eigenvalue j.
// Each column is sign-normalized so its largest-magnitude entry (lowest index
// on ties) is non-negative.
struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

// Throws unless max|A - A^T| <= 1e-12 * max|A|.
void require_symmetric(const Eigen::MatrixXd& a, const char* context);

// L = diag(row sums of S) - S. The degree sums include the diagonal entry.
LaplacianMatrix laplacian(const Eigen::MatrixXd& similarity);

EigenDecomposition sym_eig(const Eigen::MatrixXd& a);

// Columns: eigenvectors of the k smallest eigenvalues, ascending.
Eigen::MatrixXd smallest_k_eigenvectors(const Eigen::MatrixXd& a, std::size_t k);

// Applies the sign convention in place.
void normalize_signs(Eigen::MatrixXd& vectors);

}  // namespace pivotal
