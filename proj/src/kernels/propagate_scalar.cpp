#include "lab/kernels.hpp"

namespace lab::kernels {

void propagate_batch_scalar(const double* couplings, std::size_t n_samples,
                            std::size_t n_cells, const step::CellPiece* pieces,
                            std::size_t n_pieces, double E, double* phi,
                            double* dphi, double* log_norm) {
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    const double* row = couplings + cell * n_samples;
    for (std::size_t s = 0; s < n_samples; ++s) {
      log_norm[s] += step::advance_cell(phi[s], dphi[s], row[s], E, pieces,
                                        n_pieces);
    }
  }
}

}  // namespace lab::kernels
