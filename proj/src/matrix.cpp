#include "taildep/matrix.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>

namespace taildep {

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) {
        throw DomainError("SymMatrix: matrix must be square and nonempty");
    }
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if (((m_ - m_.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * scale) {
        throw DomainError("SymMatrix: matrix is not symmetric within 1e-12");
    }
    // symmetrize exactly so factorizations see a clean input
    m_ = ((m_ + m_.transpose()) / 2.0).eval();
}

double SymMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void SymMatrix::require_positive_definite(double threshold) const {
    if (min_eigenvalue() <= threshold) {
        throw NonPositiveDefinite("matrix is not positive definite (smallest eigenvalue <= " +
                                  std::to_string(threshold) + ")");
    }
}

bool SymMatrix::has_unit_diagonal(double tol) const {
    return (m_.diagonal().array() - 1.0).abs().maxCoeff() <= tol;
}

CorrelationMatrix make_correlation(Matrix m) {
    SymMatrix s(std::move(m));
    if (!s.has_unit_diagonal()) {
        throw DomainError("correlation matrix must have unit diagonal");
    }
    return s;
}

CorrelationMatrix correlation2(double rho) {
    Matrix m(2, 2);
    m << 1.0, rho, rho, 1.0;
    return make_correlation(std::move(m));
}

SymMatrix sym_identity(std::size_t n) {
    return SymMatrix(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

} // namespace taildep
