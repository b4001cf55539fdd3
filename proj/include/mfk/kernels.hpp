#pragma once

// Batched Monte Carlo kernels. Kept free of hosted headers so the NEON translation
// unit can be syntax-checked with a freestanding cross compiler.

#include <stdint.h>

namespace mfk::kernels {

enum class Isa { Scalar, Avx2, Neon };

// n standard normals for each of `lanes` trajectories, written to out[i * lanes + l].
// Lane l draws from Philox counter (step[l], pair | phase << 16, traj[l]) under `seed`.
struct NormalBatch {
  uint64_t seed = 0;
  uint32_t phase = 0;
  int n = 0;
  int lanes = 0;
  const uint64_t* traj = nullptr;
  const uint32_t* step = nullptr;
};

// One Euler-Maruyama step for `lanes` independent N-particle systems stored as
// x[i * lanes + l]. Site force a3 z^3 + a1 z, coupling J (x_i - mean).
// With `project` the increment has its lane mean removed, so the mean is frozen.
struct EmBatch {
  int n = 0;
  int lanes = 0;
  double a3 = 1.0;
  double a1 = -1.0;
  double J = 0.0;
  double dt = 0.0;
  double noise = 0.0;  // sqrt(2 eps dt)
  bool project = false;
};

using FillNormalsFn = void (*)(const NormalBatch&, double* out);
// xi has the layout of x; mean_out[l] receives the post-step lane mean.
using EmStepFn = void (*)(const EmBatch&, double* x, const double* xi, double* mean_out);

struct KernelTable {
  Isa isa;
  const char* name;
  FillNormalsFn fill_normals;
  EmStepFn em_step;
};

const KernelTable& scalar_table();
// nullptr when the variant is not compiled in or the CPU lacks it.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Widest supported variant; MFK_KERNELS=scalar forces the reference path.
const KernelTable& active_table();

}  // namespace mfk::kernels
