#pragma once

#include <vector>

namespace lab {

// Eigenpairs of a symmetric tridiagonal matrix, vectors column-major
// (n_rows x energies.size()), each column unit in the plain euclidean sense.
struct TridiagEigen {
  std::vector<double> energies;
  std::vector<double> vectors;
  int n_rows = 0;
};

// Selected eigenpairs with eigenvalues in (vl, vu].
TridiagEigen tridiag_eigen_range(std::vector<double> diag,
                                 std::vector<double> offdiag, double vl,
                                 double vu);

// Full decomposition (dense vector matrix; keep n modest).
TridiagEigen tridiag_eigen_all(std::vector<double> diag,
                               std::vector<double> offdiag);

// Eigenvalues only.
std::vector<double> tridiag_eigenvalues(std::vector<double> diag,
                                        std::vector<double> offdiag);

}  // namespace lab
