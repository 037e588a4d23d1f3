#pragma once

#include <cstddef>
#include <string>

#include "lab/step_math.hpp"

namespace lab::kernels {

// Propagate n_samples independent states across n_cells unit cells at energy
// E.  couplings is laid out [cell * n_samples + sample] so that one cell's
// couplings are contiguous across samples; pieces describe the shared
// sub-cell structure.  phi/dphi are updated in place (renormalized per cell)
// and log_norm accumulates each sample's log growth.
//
// Both variants are required to produce bitwise-identical output: the AVX2
// body mirrors the scalar operation sequence exactly, evaluating the
// transcendentals per lane with scalar libm and everything else with
// correctly-rounded vector arithmetic.
using PropagateBatchFn = void (*)(const double* couplings, std::size_t n_samples,
                                  std::size_t n_cells,
                                  const step::CellPiece* pieces,
                                  std::size_t n_pieces, double E, double* phi,
                                  double* dphi, double* log_norm);

void propagate_batch_scalar(const double* couplings, std::size_t n_samples,
                            std::size_t n_cells, const step::CellPiece* pieces,
                            std::size_t n_pieces, double E, double* phi,
                            double* dphi, double* log_norm);

void propagate_batch_avx2(const double* couplings, std::size_t n_samples,
                          std::size_t n_cells, const step::CellPiece* pieces,
                          std::size_t n_pieces, double E, double* phi,
                          double* dphi, double* log_norm);

// Selected once per process: AVX2 when the CPU supports it, overridable with
// LAB_KERNEL=scalar|avx2|auto.
PropagateBatchFn active_kernel();
std::string active_kernel_name();
bool cpu_has_avx2();

}  // namespace lab::kernels
