#pragma once

#include <functional>

#include "lodfem/lod.hpp"
#include "lodfem/solvers.hpp"
#include "lodfem/sparse.hpp"

namespace lodfem {

/// Uniform time grid t_n = n * tau, n = 0..n_steps.
struct Schedule {
  double tau = 0.0;
  int n_steps = 0;

  double final_time() const { return tau * n_steps; }
};

enum class SpaceTag { Fine, CoarseP1, Multiscale };

/// Time-discrete solution, recorded in the coefficients of whichever space
/// the stepper ran in. final_fine is filled once the caller lifts the final
/// state to the fine mesh.
struct Trajectory {
  SpaceTag space = SpaceTag::Fine;
  std::vector<double> times;
  std::vector<Vec> states;
  Vec final_coeffs;
  Vec final_fine;
};

struct StepOptions {
  double tol = 1e-9;
  int record_stride = 0;  // 0: record the final state only
  SpaceTag tag = SpaceTag::Fine;
};

using LoadFn = std::function<Vec(int step, double t)>;

/// Implicit Euler for du/dt + K u = b(t): each step solves
/// (M + tau K) U_n = M U_{n-1} + tau b_n. The system matrix and its
/// preconditioner are set up once.
Trajectory backward_euler_linear(const SparseMatrix& stiffness, const SparseMatrix& mass,
                                 const LoadFn& load, const Vec& u0, const Schedule& sched,
                                 const StepOptions& opts = {});

/// Space adapters for the semi-implicit scheme: the nonlinearity acts on
/// fine-mesh nodal values, so the stepper must be able to lift its state to
/// nodal values and pull a fine load back into its space.
struct SpaceOps {
  std::function<Vec(const Vec&)> lift_nodal;       // coeffs -> all fine nodes
  std::function<Vec(const Vec&)> load_from_nodal;  // nodal values -> space load
};

/// Linearized implicit Euler for du/dt + K u = f(u): the reaction term is
/// evaluated at the previous step, (M + tau K) U_n = M U_{n-1} + tau F(U_{n-1}).
Trajectory backward_euler_semilinear(const SparseMatrix& stiffness, const SparseMatrix& mass,
                                     const std::function<double(double)>& f, const Vec& u0,
                                     const Schedule& sched, const SpaceOps& ops,
                                     const StepOptions& opts = {});

/// L2 projection of a fine-interior vector into the multiscale space.
Vec ms_initial_projection(const MultiscaleSpace& space, const FemOperators& fem_fine,
                          const Vec& u0_fine, double tol = 1e-12);

}  // namespace lodfem
