#include "lab/tridiag.hpp"

#include <stdexcept>
#include <string>

#include "lab/errors.hpp"

// Fortran LAPACK entry points (the C wrapper layer is avoided on purpose; the
// system's LAPACKE dstemr binding returns wrong results, the Fortran symbol is
// fine).
extern "C" {
void dstemr_(const char* jobz, const char* range, const int* n, double* d,
             double* e, const double* vl, const double* vu, const int* il,
             const int* iu, int* m, double* w, double* z, const int* ldz,
             const int* nzc, int* isuppz, int* tryrac, double* work,
             const int* lwork, int* iwork, const int* liwork, int* info);
void dstevd_(const char* jobz, const int* n, double* d, double* e, double* z,
             const int* ldz, double* work, const int* lwork, int* iwork,
             const int* liwork, int* info);
void dstev_(const char* jobz, const int* n, double* d, double* e, double* z,
            const int* ldz, double* work, int* info);
}

namespace lab {

namespace {

void check_sizes(const std::vector<double>& diag,
                 const std::vector<double>& offdiag) {
  if (diag.empty()) throw ValidationError("tridiag: empty matrix");
  if (offdiag.size() + 1 != diag.size())
    throw ValidationError("tridiag: offdiagonal must have n-1 entries");
}

}  // namespace

TridiagEigen tridiag_eigen_range(std::vector<double> diag,
                                 std::vector<double> offdiag, double vl,
                                 double vu) {
  check_sizes(diag, offdiag);
  const int n = static_cast<int>(diag.size());
  offdiag.push_back(0.0);  // dstemr wants e of length n
  TridiagEigen out;
  out.n_rows = n;
  out.energies.resize(n);
  out.vectors.resize(static_cast<std::size_t>(n) * n);
  std::vector<int> isuppz(2 * std::max(1, n));
  int m = 0, tryrac = 1, info = 0;
  const int il = 0, iu = 0, ldz = n, nzc = n;
  double wk_query = 0.0;
  int iwk_query = 0;
  const int query = -1;
  dstemr_("V", "V", &n, diag.data(), offdiag.data(), &vl, &vu, &il, &iu, &m,
          out.energies.data(), out.vectors.data(), &ldz, &nzc, isuppz.data(),
          &tryrac, &wk_query, &query, &iwk_query, &query, &info);
  if (info != 0)
    throw NumericalError("dstemr workspace query failed, info=" +
                         std::to_string(info));
  const int lwork = static_cast<int>(wk_query);
  const int liwork = iwk_query;
  std::vector<double> work(std::max(1, lwork));
  std::vector<int> iwork(std::max(1, liwork));
  dstemr_("V", "V", &n, diag.data(), offdiag.data(), &vl, &vu, &il, &iu, &m,
          out.energies.data(), out.vectors.data(), &ldz, &nzc, isuppz.data(),
          &tryrac, work.data(), &lwork, iwork.data(), &liwork, &info);
  if (info != 0)
    throw NumericalError("dstemr failed, info=" + std::to_string(info));
  out.energies.resize(m);
  out.vectors.resize(static_cast<std::size_t>(n) * m);
  return out;
}

TridiagEigen tridiag_eigen_all(std::vector<double> diag,
                               std::vector<double> offdiag) {
  check_sizes(diag, offdiag);
  const int n = static_cast<int>(diag.size());
  TridiagEigen out;
  out.n_rows = n;
  out.vectors.resize(static_cast<std::size_t>(n) * n);
  int info = 0;
  const int ldz = n, query = -1;
  double wk_query = 0.0;
  int iwk_query = 0;
  dstevd_("V", &n, diag.data(), offdiag.data(), out.vectors.data(), &ldz,
          &wk_query, &query, &iwk_query, &query, &info);
  if (info != 0)
    throw NumericalError("dstevd workspace query failed, info=" +
                         std::to_string(info));
  const int lwork = static_cast<int>(wk_query);
  const int liwork = iwk_query;
  std::vector<double> work(std::max(1, lwork));
  std::vector<int> iwork(std::max(1, liwork));
  dstevd_("V", &n, diag.data(), offdiag.data(), out.vectors.data(), &ldz,
          work.data(), &lwork, iwork.data(), &liwork, &info);
  if (info != 0)
    throw NumericalError("dstevd failed, info=" + std::to_string(info));
  out.energies = std::move(diag);  // dstevd leaves eigenvalues in d
  return out;
}

std::vector<double> tridiag_eigenvalues(std::vector<double> diag,
                                        std::vector<double> offdiag) {
  check_sizes(diag, offdiag);
  const int n = static_cast<int>(diag.size());
  int info = 0;
  const int ldz = 1;
  double work = 0.0;
  dstev_("N", &n, diag.data(), offdiag.data(), nullptr, &ldz, &work, &info);
  if (info != 0)
    throw NumericalError("dstev failed, info=" + std::to_string(info));
  return diag;
}

}  // namespace lab
