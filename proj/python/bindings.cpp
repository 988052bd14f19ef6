#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lodfem/assembly.hpp"
#include "lodfem/coeff.hpp"
#include "lodfem/errors.hpp"
#include "lodfem/harness.hpp"
#include "lodfem/lod.hpp"
#include "lodfem/mesh.hpp"
#include "lodfem/solvers.hpp"
#include "lodfem/timestep.hpp"

namespace py = pybind11;
using namespace lodfem;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multiscale generalized FEM for parabolic problems";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<SolveError>(m, "SolveError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  // mesh
  py::class_<TriMesh>(m, "TriMesh")
      .def_readonly("level", &TriMesh::level)
      .def_readonly("cells_per_side", &TriMesh::cells_per_side)
      .def_readonly("spacing", &TriMesh::spacing)
      .def_readonly("element_diam", &TriMesh::element_diam)
      .def_readonly("nodes", &TriMesh::nodes)
      .def_readonly("elements", &TriMesh::elements)
      .def_readonly("interior_nodes", &TriMesh::interior_nodes)
      .def("node_count", &TriMesh::node_count)
      .def("element_count", &TriMesh::element_count)
      .def("interior_count", &TriMesh::interior_count)
      .def("node_at", &TriMesh::node_at)
      .def("is_interior", &TriMesh::is_interior);
  py::class_<MeshPair>(m, "MeshPair")
      .def_readonly("coarse", &MeshPair::coarse)
      .def_readonly("fine", &MeshPair::fine)
      .def_readonly("child_map", &MeshPair::child_map)
      .def_readonly("parent_map", &MeshPair::parent_map)
      .def_readonly("node_embed", &MeshPair::node_embed)
      .def_readonly("refinement_ratio", &MeshPair::refinement_ratio);
  py::class_<Patch>(m, "Patch")
      .def_readonly("center_element", &Patch::center_element)
      .def_readonly("k", &Patch::k)
      .def_readonly("coarse_elements", &Patch::coarse_elements)
      .def_readonly("fine_nodes", &Patch::fine_nodes);
  m.def("build_mesh", &build_mesh, py::arg("level"));
  m.def("build_pair", &build_pair, py::arg("coarse_level"), py::arg("fine_level"));
  m.def("patch", &patch, py::arg("pair"), py::arg("element"), py::arg("k"));

  // coefficients
  py::class_<CoeffField>(m, "CoeffField")
      .def_readonly("grid_level", &CoeffField::grid_level)
      .def_readonly("values", &CoeffField::values)
      .def_readonly("alpha", &CoeffField::alpha)
      .def_readonly("beta", &CoeffField::beta)
      .def("contrast", &CoeffField::contrast);
  m.def("constant_field", &constant_field, py::arg("value"));
  m.def("random_field", &random_field, py::arg("grid_level"), py::arg("lo"), py::arg("hi"),
        py::arg("seed"));
  m.def("value_at", &value_at, py::arg("field"), py::arg("x"), py::arg("y"));
  m.def("save_field", &save_field, py::arg("field"), py::arg("path"));
  m.def("load_field", &load_field, py::arg("path"));

  // sparse matrices and solvers
  py::class_<SparseMatrix>(m, "SparseMatrix")
      .def("rows", &SparseMatrix::rows)
      .def("cols", &SparseMatrix::cols)
      .def("nnz", &SparseMatrix::nnz)
      .def("coeff", &SparseMatrix::coeff)
      .def("diagonal", &SparseMatrix::diagonal)
      .def("apply", py::overload_cast<const Vec&>(&SparseMatrix::apply, py::const_))
      .def("apply_transpose", &SparseMatrix::apply_transpose)
      .def("is_symmetric", &SparseMatrix::is_symmetric, py::arg("tol") = 1e-12);
  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("relative_residual", &SolveReport::relative_residual)
      .def_readonly("converged", &SolveReport::converged);
  m.def(
      "cg_solve",
      [](const SparseMatrix& A, const Vec& b, double tol, int max_iter) {
        return cg_solve(A, b, tol, max_iter);
      },
      py::arg("A"), py::arg("b"), py::arg("tol") = 1e-10, py::arg("max_iter") = -1);
  py::class_<SaddleOptions>(m, "SaddleOptions")
      .def(py::init<>())
      .def_readwrite("tol", &SaddleOptions::tol)
      .def_readwrite("dense_threshold", &SaddleOptions::dense_threshold)
      .def_readwrite("max_iter", &SaddleOptions::max_iter);
  m.def("saddle_solve", &saddle_solve, py::arg("A"), py::arg("C"), py::arg("b"),
        py::arg("opts") = SaddleOptions{});
  m.def("l2_norm", &l2_norm, py::arg("M"), py::arg("v"));
  m.def("energy_norm", &energy_norm, py::arg("K"), py::arg("v"));

  // assembly
  py::class_<FemOperators>(m, "FemOperators")
      .def_readonly("stiffness", &FemOperators::stiffness)
      .def_readonly("mass", &FemOperators::mass)
      .def_readonly("full_mass", &FemOperators::full_mass)
      .def_readonly("full_stiffness", &FemOperators::full_stiffness);
  py::class_<ClementMatrix>(m, "ClementMatrix")
      .def_readonly("matrix", &ClementMatrix::matrix)
      .def_readonly("weights", &ClementMatrix::weights);
  m.def("assemble", &assemble, py::arg("mesh"), py::arg("field"));
  m.def("clement", &clement, py::arg("pair"), py::arg("fem_fine"));
  m.def("prolongation", &prolongation, py::arg("pair"));
  m.def("prolongation_full", &prolongation_full, py::arg("pair"));
  m.def(
      "interpolate",
      [](const TriMesh& mesh, const std::function<double(double, double)>& f) {
        return interpolate(mesh, f);
      },
      py::arg("mesh"), py::arg("f"));
  m.def("restrict_interior", &restrict_interior, py::arg("mesh"), py::arg("full"));
  m.def("extend_zero", &extend_zero, py::arg("mesh"), py::arg("interior"));
  m.def(
      "load_vector",
      [](const TriMesh& mesh, const FemOperators& fem, const Vec& nodal) {
        return load_vector(mesh, fem, nodal);
      },
      py::arg("mesh"), py::arg("fem"), py::arg("nodal_full"));

  // multiscale space
  py::class_<CorrectorSet>(m, "CorrectorSet").def_readonly("k", &CorrectorSet::k);
  py::class_<CorrectorOptions>(m, "CorrectorOptions")
      .def(py::init<>())
      .def_readwrite("tol", &CorrectorOptions::tol)
      .def_readwrite("dense_threshold", &CorrectorOptions::dense_threshold)
      .def_readwrite("threads", &CorrectorOptions::threads);
  py::class_<MultiscaleSpace>(m, "MultiscaleSpace")
      .def_readonly("fine_dim", &MultiscaleSpace::fine_dim)
      .def_readonly("ms_stiffness", &MultiscaleSpace::ms_stiffness)
      .def_readonly("ms_mass", &MultiscaleSpace::ms_mass)
      .def("dim", &MultiscaleSpace::dim)
      .def("basis_vector", [](const MultiscaleSpace& s, int i) {
        return s.basis.at(i).to_dense(s.fine_dim);
      });
  m.def("compute_correctors", &compute_correctors, py::arg("pair"), py::arg("fem_fine"),
        py::arg("clement"), py::arg("field"), py::arg("k"),
        py::arg("opts") = CorrectorOptions{});
  m.def("node_corrector", &node_corrector, py::arg("pair"), py::arg("fem_fine"),
        py::arg("clement"), py::arg("field"), py::arg("coarse_node"), py::arg("k"),
        py::arg("opts") = CorrectorOptions{});
  m.def("saturation_k", &saturation_k, py::arg("coarse"));
  m.def("build_space", &build_space, py::arg("correctors"), py::arg("pair"),
        py::arg("fem_fine"));
  m.def("lift", &lift, py::arg("space"), py::arg("coeffs"));
  m.def("restrict_to_space", &restrict_to_space, py::arg("space"), py::arg("fine"));
  m.def("ms_ritz_project", &ms_ritz_project, py::arg("space"), py::arg("fem_fine"),
        py::arg("v"), py::arg("tol") = 1e-12);

  // time stepping
  py::class_<Schedule>(m, "Schedule")
      .def(py::init([](double tau, int n_steps) { return Schedule{tau, n_steps}; }),
           py::arg("tau"), py::arg("n_steps"))
      .def_readwrite("tau", &Schedule::tau)
      .def_readwrite("n_steps", &Schedule::n_steps)
      .def("final_time", &Schedule::final_time);
  py::enum_<SpaceTag>(m, "SpaceTag")
      .value("Fine", SpaceTag::Fine)
      .value("CoarseP1", SpaceTag::CoarseP1)
      .value("Multiscale", SpaceTag::Multiscale);
  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("space", &Trajectory::space)
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("final_coeffs", &Trajectory::final_coeffs)
      .def_readonly("final_fine", &Trajectory::final_fine);
  py::class_<StepOptions>(m, "StepOptions")
      .def(py::init<>())
      .def_readwrite("tol", &StepOptions::tol)
      .def_readwrite("record_stride", &StepOptions::record_stride)
      .def_readwrite("tag", &StepOptions::tag);
  m.def("backward_euler_linear", &backward_euler_linear, py::arg("stiffness"), py::arg("mass"),
        py::arg("load"), py::arg("u0"), py::arg("schedule"), py::arg("opts") = StepOptions{});
  m.def(
      "backward_euler_semilinear",
      [](const SparseMatrix& K, const SparseMatrix& M, const std::function<double(double)>& f,
         const Vec& u0, const Schedule& sched, const std::function<Vec(const Vec&)>& lift_nodal,
         const std::function<Vec(const Vec&)>& load_from_nodal, const StepOptions& opts) {
        SpaceOps ops{lift_nodal, load_from_nodal};
        return backward_euler_semilinear(K, M, f, u0, sched, ops, opts);
      },
      py::arg("stiffness"), py::arg("mass"), py::arg("f"), py::arg("u0"), py::arg("schedule"),
      py::arg("lift_nodal"), py::arg("load_from_nodal"), py::arg("opts") = StepOptions{});
  m.def("ms_initial_projection", &ms_initial_projection, py::arg("space"), py::arg("fem_fine"),
        py::arg("u0_fine"), py::arg("tol") = 1e-12);

  // experiment harness
  py::class_<CoeffSpec> coeff_spec(m, "CoeffSpec");
  py::enum_<CoeffSpec::Kind>(coeff_spec, "Kind")
      .value("Constant", CoeffSpec::Kind::Constant)
      .value("Random", CoeffSpec::Kind::Random)
      .value("File", CoeffSpec::Kind::File);
  coeff_spec.def(py::init<>())
      .def_readwrite("kind", &CoeffSpec::kind)
      .def_readwrite("value", &CoeffSpec::value)
      .def_readwrite("grid_level", &CoeffSpec::grid_level)
      .def_readwrite("lo", &CoeffSpec::lo)
      .def_readwrite("hi", &CoeffSpec::hi)
      .def_readwrite("seed", &CoeffSpec::seed)
      .def_readwrite("path", &CoeffSpec::path);
  py::class_<ExperimentConfig> config(m, "ExperimentConfig");
  py::enum_<ExperimentConfig::Problem>(config, "Problem")
      .value("Linear", ExperimentConfig::Problem::Linear)
      .value("Semilinear", ExperimentConfig::Problem::Semilinear);
  config.def(py::init<>())
      .def_readwrite("problem", &ExperimentConfig::problem)
      .def_readwrite("fine_level", &ExperimentConfig::fine_level)
      .def_readwrite("coarse_levels", &ExperimentConfig::coarse_levels)
      .def_readwrite("k_schedule", &ExperimentConfig::k_schedule)
      .def_readwrite("tau", &ExperimentConfig::tau)
      .def_readwrite("n_steps", &ExperimentConfig::n_steps)
      .def_readwrite("coeff", &ExperimentConfig::coeff)
      .def_readwrite("output", &ExperimentConfig::output)
      .def_readwrite("tol_corrector", &ExperimentConfig::tol_corrector)
      .def_readwrite("tol_timestep", &ExperimentConfig::tol_timestep)
      .def_readwrite("threads", &ExperimentConfig::threads);
  py::class_<LevelResult>(m, "LevelResult")
      .def_readonly("level", &LevelResult::level)
      .def_readonly("H", &LevelResult::H)
      .def_readonly("dofs", &LevelResult::dofs)
      .def_readonly("k", &LevelResult::k)
      .def_readonly("rel_err_lod", &LevelResult::rel_err_lod)
      .def_readonly("rel_err_p1", &LevelResult::rel_err_p1);
  py::class_<ConvergenceReport>(m, "ConvergenceReport")
      .def_readonly("rows", &ConvergenceReport::rows)
      .def_readonly("fitted_order_lod", &ConvergenceReport::fitted_order_lod)
      .def_readonly("fitted_order_p1", &ConvergenceReport::fitted_order_p1);
  py::class_<DecayResult>(m, "DecayResult")
      .def_readonly("coarse_node", &DecayResult::coarse_node)
      .def_readonly("ref_energy", &DecayResult::ref_energy)
      .def_readonly("energy_err", &DecayResult::energy_err);
  m.def("read_config", &read_config, py::arg("path"));
  m.def("write_config", &write_config, py::arg("config"), py::arg("path"));
  m.def("validate", &validate, py::arg("config"));
  m.def("make_field", &make_field, py::arg("spec"));
  m.def("run_experiment", &run_experiment, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("fit_order", &fit_order, py::arg("h_err_pairs"));
  m.def("write_report", &write_report, py::arg("report"), py::arg("path"));
  m.def("format_report", &format_report, py::arg("report"));
  m.def("corrector_decay", &corrector_decay, py::arg("config"), py::arg("max_k"),
        py::call_guard<py::gil_scoped_release>());
  m.def("write_decay", &write_decay, py::arg("result"), py::arg("path"));
  m.def("set_verbose", &set_verbose, py::arg("on"));
}
