#include "lab/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>

#include <cmath>

namespace lab::kernels {

namespace {

// Four-lane mirror of step::advance_cell.  Elementwise only: add/mul/div/sqrt
// are correctly rounded, so each lane reproduces the scalar result bit for
// bit; cos/sin/log and the small-|z| series go through step::cs and std::log
// per lane.  Requires -ffp-contract=off so neither path fuses mul+add.
inline __m256d advance_cell_4(const double* row, std::size_t s, double E,
                              const step::CellPiece* pieces,
                              std::size_t n_pieces, double* phi, double* dphi) {
  const __m256d vE = _mm256_set1_pd(E);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d vphi = _mm256_loadu_pd(phi + s);
  __m256d vdphi = _mm256_loadu_pd(dphi + s);
  __m256d w = _mm256_loadu_pd(row + s);
  for (std::size_t p = 0; p < n_pieces; ++p) {
    const double len = pieces[p].length;
    const __m256d vlen = _mm256_set1_pd(len);
    __m256d q = _mm256_mul_pd(w, _mm256_set1_pd(pieces[p].u_height));
    __m256d z = _mm256_mul_pd(_mm256_sub_pd(vE, q),
                              _mm256_set1_pd(len * len));
    alignas(32) double zb[4], Cb[4], Sb[4];
    _mm256_store_pd(zb, z);
    for (int l = 0; l < 4; ++l) step::cs(zb[l], Cb[l], Sb[l]);
    __m256d C = _mm256_load_pd(Cb);
    __m256d S = _mm256_load_pd(Sb);
    __m256d b = _mm256_mul_pd(vlen, S);
    __m256d c = _mm256_xor_pd(
        _mm256_mul_pd(_mm256_div_pd(z, vlen), S), sign_mask);
    __m256d nphi = _mm256_add_pd(_mm256_mul_pd(C, vphi),
                                 _mm256_mul_pd(b, vdphi));
    __m256d ndphi = _mm256_add_pd(_mm256_mul_pd(c, vphi),
                                  _mm256_mul_pd(C, vdphi));
    vphi = nphi;
    vdphi = ndphi;
  }
  __m256d n2 = _mm256_add_pd(_mm256_mul_pd(vphi, vphi),
                             _mm256_mul_pd(vdphi, vdphi));
  __m256d norm = _mm256_sqrt_pd(n2);
  vphi = _mm256_div_pd(vphi, norm);
  vdphi = _mm256_div_pd(vdphi, norm);
  _mm256_storeu_pd(phi + s, vphi);
  _mm256_storeu_pd(dphi + s, vdphi);
  alignas(32) double nb[4], lb[4];
  _mm256_store_pd(nb, norm);
  for (int l = 0; l < 4; ++l) lb[l] = std::log(nb[l]);
  return _mm256_load_pd(lb);
}

}  // namespace

void propagate_batch_avx2(const double* couplings, std::size_t n_samples,
                          std::size_t n_cells, const step::CellPiece* pieces,
                          std::size_t n_pieces, double E, double* phi,
                          double* dphi, double* log_norm) {
  const std::size_t vec_end = n_samples - n_samples % 4;
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    const double* row = couplings + cell * n_samples;
    for (std::size_t s = 0; s < vec_end; s += 4) {
      __m256d inc = advance_cell_4(row, s, E, pieces, n_pieces, phi, dphi);
      __m256d acc = _mm256_loadu_pd(log_norm + s);
      _mm256_storeu_pd(log_norm + s, _mm256_add_pd(acc, inc));
    }
    for (std::size_t s = vec_end; s < n_samples; ++s) {
      log_norm[s] += step::advance_cell(phi[s], dphi[s], row[s], E, pieces,
                                        n_pieces);
    }
  }
}

}  // namespace lab::kernels

#else  // !__AVX2__

namespace lab::kernels {

void propagate_batch_avx2(const double* couplings, std::size_t n_samples,
                          std::size_t n_cells, const step::CellPiece* pieces,
                          std::size_t n_pieces, double E, double* phi,
                          double* dphi, double* log_norm) {
  propagate_batch_scalar(couplings, n_samples, n_cells, pieces, n_pieces, E,
                         phi, dphi, log_norm);
}

}  // namespace lab::kernels

#endif
