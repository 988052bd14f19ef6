#include "lodfem/timestep.hpp"

#include <cmath>

#include "lodfem/errors.hpp"

namespace lodfem {

namespace {

void check_schedule(const Schedule& s) {
  if (!(s.tau > 0.0)) throw ConfigError("schedule: tau must be positive");
  if (s.n_steps < 1) throw ConfigError("schedule: n_steps must be >= 1");
}

void record(Trajectory& traj, const StepOptions& opts, int step, double t, const Vec& u,
            int n_steps) {
  const bool last = step == n_steps;
  if (last || (opts.record_stride > 0 && step % opts.record_stride == 0)) {
    traj.times.push_back(t);
    traj.states.push_back(u);
  }
}

}  // namespace

Trajectory backward_euler_linear(const SparseMatrix& stiffness, const SparseMatrix& mass,
                                 const LoadFn& load, const Vec& u0, const Schedule& sched,
                                 const StepOptions& opts) {
  check_schedule(sched);
  const SparseMatrix system = add_scaled(mass, stiffness, sched.tau);

  Trajectory traj;
  traj.space = opts.tag;
  Vec u = u0;
  for (int n = 1; n <= sched.n_steps; ++n) {
    const double t = n * sched.tau;
    Vec rhs = mass.apply(u);
    if (load) {
      const Vec b = load(n, t);
      axpy(sched.tau, b, rhs);
    }
    try {
      u = cg_solve(system, rhs, opts.tol).first;
    } catch (const SolveError& err) {
      throw SolveError("backward_euler_linear: step " + std::to_string(n) + ": " + err.what());
    }
    record(traj, opts, n, t, u, sched.n_steps);
  }
  traj.final_coeffs = std::move(u);
  return traj;
}

Trajectory backward_euler_semilinear(const SparseMatrix& stiffness, const SparseMatrix& mass,
                                     const std::function<double(double)>& f, const Vec& u0,
                                     const Schedule& sched, const SpaceOps& ops,
                                     const StepOptions& opts) {
  check_schedule(sched);
  if (!ops.lift_nodal || !ops.load_from_nodal)
    throw ConfigError("backward_euler_semilinear: space operators not set");
  const SparseMatrix system = add_scaled(mass, stiffness, sched.tau);

  Trajectory traj;
  traj.space = opts.tag;
  Vec u = u0;
  for (int n = 1; n <= sched.n_steps; ++n) {
    const double t = n * sched.tau;
    Vec nodal = ops.lift_nodal(u);
    for (double& v : nodal) {
      v = f(v);
      if (!std::isfinite(v))
        throw SolveError("backward_euler_semilinear: nonlinearity overflow at step " +
                         std::to_string(n) + " (blow-up)");
    }
    Vec rhs = mass.apply(u);
    axpy(sched.tau, ops.load_from_nodal(nodal), rhs);
    try {
      u = cg_solve(system, rhs, opts.tol).first;
    } catch (const SolveError& err) {
      throw SolveError("backward_euler_semilinear: step " + std::to_string(n) + ": " +
                       err.what());
    }
    record(traj, opts, n, t, u, sched.n_steps);
  }
  traj.final_coeffs = std::move(u);
  return traj;
}

Vec ms_initial_projection(const MultiscaleSpace& space, const FemOperators& fem_fine,
                          const Vec& u0_fine, double tol) {
  const Vec rhs = restrict_to_space(space, fem_fine.mass.apply(u0_fine));
  auto [c, rep] = cg_solve(space.ms_mass, rhs, tol);
  (void)rep;
  return c;
}

}  // namespace lodfem
