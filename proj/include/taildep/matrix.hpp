#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "taildep/errors.hpp"

namespace taildep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric matrix with validation helpers. Construction enforces symmetry
// to 1e-12; positive definiteness is checked on demand (eigenvalue
// threshold 1e-10) because some call sites accept semidefinite inputs.
class SymMatrix {
  public:
    explicit SymMatrix(Matrix m);

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& mat() const { return m_; }

    double min_eigenvalue() const;
    // Throws NonPositiveDefinite if the smallest eigenvalue is <= threshold.
    void require_positive_definite(double threshold = 1e-10) const;
    bool has_unit_diagonal(double tol = 1e-12) const;

  private:
    Matrix m_;
};

// A correlation matrix is a SymMatrix with unit diagonal; the factory
// validates the diagonal so downstream code can rely on it.
using CorrelationMatrix = SymMatrix;

CorrelationMatrix make_correlation(Matrix m);
CorrelationMatrix correlation2(double rho);
SymMatrix sym_identity(std::size_t n);

} // namespace taildep
