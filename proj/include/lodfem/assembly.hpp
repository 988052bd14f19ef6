#pragma once

#include <functional>

#include "lodfem/coeff.hpp"
#include "lodfem/mesh.hpp"
#include "lodfem/sparse.hpp"

namespace lodfem {

/// P1 operators for one mesh and coefficient. Interior matrices have the
/// homogeneous Dirichlet rows/columns eliminated; the full variants keep
/// every node.
struct FemOperators {
  SparseMatrix stiffness;       // interior x interior
  SparseMatrix mass;            // interior x interior
  SparseMatrix full_mass;       // all nodes x all nodes
  SparseMatrix full_stiffness;  // all nodes x all nodes
};

/// Exact element integration: one-point quadrature is exact because the
/// coefficient is constant on every element (requires mesh.level >=
/// field.grid_level, otherwise a ConfigError is thrown).
FemOperators assemble(const TriMesh& mesh, const CoeffField& field);

/// Hat-function embedding V_H -> V_h. Full variant over all nodes of both
/// meshes, plain variant restricted to interior nodes on both sides.
SparseMatrix prolongation_full(const MeshPair& pair);
SparseMatrix prolongation(const MeshPair& pair);

/// Weighted node-averaging interpolation onto the coarse space: row x maps a
/// fine interior coefficient vector v to (integral of v*phi_x) / (integral of
/// phi_x). Rows exist for interior coarse nodes only.
struct ClementMatrix {
  SparseMatrix matrix;  // coarse interior x fine interior
  Vec weights;          // per coarse interior node: integral of phi_x
};

ClementMatrix clement(const MeshPair& pair, const FemOperators& fem_fine);

/// L2 projection onto the coarse space; apply() solves the coarse mass
/// system for each input vector.
class CoarseL2Projector {
public:
  CoarseL2Projector(const MeshPair& pair, const FemOperators& fem_fine,
                    const FemOperators& fem_coarse, double tol = 1e-12);
  Vec operator()(const Vec& fine_interior) const;

private:
  SparseMatrix mixed_;        // coarse interior x fine interior
  SparseMatrix coarse_mass_;  // coarse interior x coarse interior
  double tol_;
};

CoarseL2Projector l2_project_coarse(const MeshPair& pair, const FemOperators& fem_fine,
                                    const FemOperators& fem_coarse);

/// Nodal interpolant over all nodes.
Vec interpolate(const TriMesh& mesh, const std::function<double(double, double)>& f);

Vec restrict_interior(const TriMesh& mesh, const Vec& full);
Vec extend_zero(const TriMesh& mesh, const Vec& interior);

/// (f, phi_i) over interior nodes via the interpolant rule: full mass matrix
/// applied to the nodal interpolant of f.
Vec load_vector(const TriMesh& mesh, const FemOperators& fem,
                const std::function<double(double, double)>& f);
Vec load_vector(const TriMesh& mesh, const FemOperators& fem, const Vec& nodal_full);

/// C = A * B for CSR operands.
SparseMatrix multiply(const SparseMatrix& A, const SparseMatrix& B);

}  // namespace lodfem
