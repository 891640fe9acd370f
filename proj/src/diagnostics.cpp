#include "kocl/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>

namespace kocl {

CovarianceReport check_covariance(const PsdMatrix& cov, double sigmaw2,
                                  const CovarianceTolerances& tol) {
  CovarianceReport rep;
  const Matrix& a = cov.matrix();
  if (!a.allFinite()) {
    rep.violations.push_back({"finite", "covariance has non-finite entries"});
    return rep;
  }
  rep.asymmetry = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (rep.asymmetry > tol.symmetry) {
    std::ostringstream os;
    os << "max |A - A^T| = " << rep.asymmetry << " > " << tol.symmetry;
    rep.violations.push_back({"symmetry", os.str()});
  }
  // Eigenvalues of the symmetric part; asymmetry is reported separately.
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = eig.eigenvalues().minCoeff();
  rep.max_eigenvalue = eig.eigenvalues().maxCoeff();
  if (rep.min_eigenvalue < tol.min_eigen) {
    std::ostringstream os;
    os << "min eigenvalue " << rep.min_eigenvalue << " < " << tol.min_eigen;
    rep.violations.push_back({"psd", os.str()});
  }
  if (rep.max_eigenvalue > sigmaw2 + tol.max_eigen_slack) {
    std::ostringstream os;
    os << "max eigenvalue " << rep.max_eigenvalue << " > sigmaw2 + " << tol.max_eigen_slack;
    rep.violations.push_back({"variance_bound", os.str()});
  }
  return rep;
}

}  // namespace kocl
