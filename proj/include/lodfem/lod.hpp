#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "lodfem/assembly.hpp"
#include "lodfem/coeff.hpp"
#include "lodfem/mesh.hpp"
#include "lodfem/solvers.hpp"

namespace lodfem {

/// Localized element correctors: for coarse element K and local vertex v,
/// the fine-interior coefficient vector of the patch problem solution for
/// the hat of that vertex. Slots for boundary coarse nodes stay empty; they
/// never enter the multiscale basis.
struct CorrectorSet {
  int k = 0;
  std::vector<std::array<SparseVec, 3>> element_correctors;
};

struct CorrectorOptions {
  double tol = 1e-10;
  int dense_threshold = 2000;
  int threads = 0;  // 0 = hardware concurrency
};

CorrectorSet compute_correctors(const MeshPair& pair, const FemOperators& fem_fine,
                                const ClementMatrix& clem, const CoeffField& field,
                                int k, const CorrectorOptions& opts = {});

/// Sum of the element correctors of all elements touching one coarse node:
/// the localized corrector of that node's hat, as a fine-interior vector.
Vec node_corrector(const MeshPair& pair, const FemOperators& fem_fine,
                   const ClementMatrix& clem, const CoeffField& field,
                   int coarse_node, int k, const CorrectorOptions& opts = {});

/// Patch size at which every patch covers the whole coarse mesh.
int saturation_k(const TriMesh& coarse);

/// Multiscale space: one basis vector per interior coarse node (hat minus
/// summed element correctors) plus the projected stiffness and mass.
struct MultiscaleSpace {
  std::vector<SparseVec> basis;  // fine-interior coefficients
  int fine_dim = 0;              // fine interior node count
  SparseMatrix ms_stiffness;
  SparseMatrix ms_mass;

  int dim() const { return static_cast<int>(basis.size()); }
};

MultiscaleSpace build_space(const CorrectorSet& correctors, const MeshPair& pair,
                            const FemOperators& fem_fine);

/// B^T A B for a set of sparse basis columns (also used with the identity
/// basis to reproduce fine-space operators bitwise).
SparseMatrix project_matrix(const SparseMatrix& A, const std::vector<SparseVec>& basis);

Vec lift(const MultiscaleSpace& space, const Vec& coeffs);              // B c
Vec restrict_to_space(const MultiscaleSpace& space, const Vec& fine);   // B^T v

/// Energy-orthogonal projection onto the multiscale space, returned in fine
/// coordinates: solves ms_stiffness c = B^T K v and lifts.
Vec ms_ritz_project(const MultiscaleSpace& space, const FemOperators& fem_fine,
                    const Vec& v, double tol = 1e-12);

/// Binary corrector cache. load returns nullopt when the file is absent or
/// its key/version does not match.
std::uint64_t corrector_cache_key(const MeshPair& pair, const CoeffField& field, int k);
void save_correctors(const std::string& path, const CorrectorSet& set, std::uint64_t key);
std::optional<CorrectorSet> load_correctors(const std::string& path, std::uint64_t key);

}  // namespace lodfem
