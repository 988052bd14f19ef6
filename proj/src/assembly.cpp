#include "lodfem/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lodfem/errors.hpp"
#include "lodfem/solvers.hpp"

namespace lodfem {

namespace {

// gradients of the three barycentric functions scaled by 2*area:
// grad(lambda_i) = (b_i, c_i) / (2A)
struct ElementGeometry {
  std::array<double, 3> b;
  std::array<double, 3> c;
  double area;
};

ElementGeometry element_geometry(const TriMesh& mesh, int e) {
  const auto& el = mesh.elements[e];
  const auto& p0 = mesh.nodes[el[0]];
  const auto& p1 = mesh.nodes[el[1]];
  const auto& p2 = mesh.nodes[el[2]];
  ElementGeometry g;
  g.b = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
  g.c = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
  g.area = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
  return g;
}

}  // namespace

FemOperators assemble(const TriMesh& mesh, const CoeffField& field) {
  if (mesh.level < field.grid_level)
    throw ConfigError("assemble: mesh level " + std::to_string(mesh.level) +
                      " too coarse for coefficient grid level " +
                      std::to_string(field.grid_level) +
                      " (elements straddle coefficient cells)");

  std::vector<Triplet> kt, mt;
  kt.reserve(static_cast<std::size_t>(mesh.element_count()) * 9);
  mt.reserve(static_cast<std::size_t>(mesh.element_count()) * 9);

  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto g = element_geometry(mesh, e);
    const auto mid = mesh.centroid(e);
    const double a = value_at(field, mid[0], mid[1]);
    const auto& el = mesh.elements[e];
    const double kfac = a / (4.0 * g.area);
    const double mfac = g.area / 12.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        kt.push_back({el[i], el[j], kfac * (g.b[i] * g.b[j] + g.c[i] * g.c[j])});
        mt.push_back({el[i], el[j], mfac * (i == j ? 2.0 : 1.0)});
      }
    }
  }

  FemOperators ops;
  ops.full_stiffness = SparseMatrix(mesh.node_count(), mesh.node_count(), std::move(kt));
  ops.full_mass = SparseMatrix(mesh.node_count(), mesh.node_count(), std::move(mt));
  ops.stiffness = ops.full_stiffness.submatrix(mesh.interior_nodes, mesh.interior_nodes);
  ops.mass = ops.full_mass.submatrix(mesh.interior_nodes, mesh.interior_nodes);
  return ops;
}

SparseMatrix multiply(const SparseMatrix& A, const SparseMatrix& B) {
  if (A.cols() != B.rows()) throw DomainError("multiply: dimension mismatch");
  std::vector<Triplet> out;
  Vec acc(static_cast<std::size_t>(B.cols()), 0.0);
  std::vector<int> touched;
  for (int r = 0; r < A.rows(); ++r) {
    touched.clear();
    auto ac = A.row_cols(r);
    auto av = A.row_vals(r);
    for (std::size_t k = 0; k < ac.size(); ++k) {
      const double va = av[k];
      auto bc = B.row_cols(ac[k]);
      auto bv = B.row_vals(ac[k]);
      for (std::size_t l = 0; l < bc.size(); ++l) {
        if (acc[bc[l]] == 0.0) touched.push_back(bc[l]);
        acc[bc[l]] += va * bv[l];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int c : touched) {
      out.push_back({r, c, acc[c]});
      acc[c] = 0.0;
    }
  }
  return SparseMatrix(A.rows(), B.cols(), std::move(out));
}

SparseMatrix prolongation_full(const MeshPair& pair) {
  const int r = pair.refinement_ratio;
  const int nc = pair.coarse.cells_per_side;
  const double inv_r = 1.0 / r;
  std::vector<Triplet> t;
  const TriMesh& fm = pair.fine;
  for (int j = 0; j <= fm.cells_per_side; ++j) {
    for (int i = 0; i <= fm.cells_per_side; ++i) {
      const int p = fm.node_at(i, j);
      if (i % r == 0 && j % r == 0) {
        t.push_back({p, pair.coarse.node_at(i / r, j / r), 1.0});
        continue;
      }
      const int ci = std::min(i / r, nc - 1);
      const int cj = std::min(j / r, nc - 1);
      const int li = i - ci * r;
      const int lj = j - cj * r;
      std::array<std::pair<int, double>, 3> w;
      if (li >= lj) {
        w = {{{pair.coarse.node_at(ci, cj), (r - li) * inv_r},
              {pair.coarse.node_at(ci + 1, cj), (li - lj) * inv_r},
              {pair.coarse.node_at(ci + 1, cj + 1), lj * inv_r}}};
      } else {
        w = {{{pair.coarse.node_at(ci, cj), (r - lj) * inv_r},
              {pair.coarse.node_at(ci + 1, cj + 1), li * inv_r},
              {pair.coarse.node_at(ci, cj + 1), (lj - li) * inv_r}}};
      }
      for (const auto& [node, weight] : w)
        if (weight != 0.0) t.push_back({p, node, weight});
    }
  }
  return SparseMatrix(fm.node_count(), pair.coarse.node_count(), std::move(t));
}

SparseMatrix prolongation(const MeshPair& pair) {
  return prolongation_full(pair).submatrix(pair.fine.interior_nodes,
                                           pair.coarse.interior_nodes);
}

ClementMatrix clement(const MeshPair& pair, const FemOperators& fem_fine) {
  const SparseMatrix E = prolongation(pair);
  const SparseMatrix mixed = multiply(E.transpose(), fem_fine.mass);

  ClementMatrix cm;
  const TriMesh& coarse = pair.coarse;
  cm.weights.resize(coarse.interior_count());
  const double third_area = coarse.spacing * coarse.spacing / 6.0;  // area/3 per triangle
  for (int xi = 0; xi < coarse.interior_count(); ++xi) {
    const int node = coarse.interior_nodes[xi];
    cm.weights[xi] = third_area * static_cast<double>(coarse.node_elements[node].size());
  }

  std::vector<Triplet> t;
  t.reserve(mixed.nnz());
  for (int r = 0; r < mixed.rows(); ++r) {
    const double inv_w = 1.0 / cm.weights[r];
    auto cols = mixed.row_cols(r);
    auto vals = mixed.row_vals(r);
    for (std::size_t k = 0; k < cols.size(); ++k)
      t.push_back({r, cols[k], vals[k] * inv_w});
  }
  cm.matrix = SparseMatrix(mixed.rows(), mixed.cols(), std::move(t));
  return cm;
}

CoarseL2Projector::CoarseL2Projector(const MeshPair& pair, const FemOperators& fem_fine,
                                     const FemOperators& fem_coarse, double tol)
    : coarse_mass_(fem_coarse.mass), tol_(tol) {
  const SparseMatrix E = prolongation(pair);
  mixed_ = multiply(E.transpose(), fem_fine.mass);
}

Vec CoarseL2Projector::operator()(const Vec& fine_interior) const {
  const Vec rhs = mixed_.apply(fine_interior);
  auto [c, rep] = cg_solve(coarse_mass_, rhs, tol_);
  (void)rep;
  return c;
}

CoarseL2Projector l2_project_coarse(const MeshPair& pair, const FemOperators& fem_fine,
                                    const FemOperators& fem_coarse) {
  return CoarseL2Projector(pair, fem_fine, fem_coarse);
}

Vec interpolate(const TriMesh& mesh, const std::function<double(double, double)>& f) {
  Vec v(mesh.nodes.size());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) v[i] = f(mesh.nodes[i][0], mesh.nodes[i][1]);
  return v;
}

Vec restrict_interior(const TriMesh& mesh, const Vec& full) {
  Vec v(mesh.interior_nodes.size());
  for (std::size_t i = 0; i < mesh.interior_nodes.size(); ++i) v[i] = full[mesh.interior_nodes[i]];
  return v;
}

Vec extend_zero(const TriMesh& mesh, const Vec& interior) {
  Vec v(mesh.nodes.size(), 0.0);
  for (std::size_t i = 0; i < mesh.interior_nodes.size(); ++i) v[mesh.interior_nodes[i]] = interior[i];
  return v;
}

Vec load_vector(const TriMesh& mesh, const FemOperators& fem, const Vec& nodal_full) {
  return restrict_interior(mesh, fem.full_mass.apply(nodal_full));
}

Vec load_vector(const TriMesh& mesh, const FemOperators& fem,
                const std::function<double(double, double)>& f) {
  return load_vector(mesh, fem, interpolate(mesh, f));
}

}  // namespace lodfem
