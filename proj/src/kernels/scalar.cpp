#include "kernel_math.hpp"

namespace mfk::kernels {

namespace {

void fill_normals(const NormalBatch& b, double* out) { math::fill_normals_range(b, out, 0, b.lanes); }

void em_step(const EmBatch& p, double* x, const double* xi, double* mean_out) {
  math::em_step_range(p, x, xi, mean_out, 0, p.lanes);
}

constexpr KernelTable kScalar{Isa::Scalar, "scalar", &fill_normals, &em_step};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace mfk::kernels
