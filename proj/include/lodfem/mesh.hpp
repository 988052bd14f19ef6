#pragma once

#include <array>
#include <vector>

namespace lodfem {

/// Uniform triangulation of the unit square at a dyadic level. Every
/// Cartesian cell of size 2^-level is split along the lower-left to
/// upper-right diagonal into two counter-clockwise triangles.
struct TriMesh {
  int level = 0;
  int cells_per_side = 0;  // 2^level
  double spacing = 0.0;    // 2^-level
  double element_diam = 0.0;  // sqrt(2) * 2^-level

  std::vector<std::array<double, 2>> nodes;     // row-major from lower-left
  std::vector<std::array<int, 3>> elements;     // CCW node indices
  std::vector<int> interior_nodes;              // sorted
  std::vector<int> interior_index;              // node -> interior position or -1
  std::vector<std::vector<int>> node_elements;  // node -> incident elements

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  int interior_count() const { return static_cast<int>(interior_nodes.size()); }

  int node_at(int ix, int iy) const { return iy * (cells_per_side + 1) + ix; }
  bool is_interior(int node) const { return interior_index[node] >= 0; }
  std::array<double, 2> centroid(int element) const;
  double element_area(int element) const;
};

TriMesh build_mesh(int level);

/// Nested coarse/fine mesh pair; the fine mesh refines the coarse one so
/// every coarse node coincides with a fine node.
struct MeshPair {
  TriMesh coarse;
  TriMesh fine;
  std::vector<std::vector<int>> child_map;  // coarse element -> fine elements
  std::vector<int> parent_map;              // fine element -> coarse element
  std::vector<int> node_embed;              // coarse node -> fine node
  int refinement_ratio = 1;                 // 2^(fine.level - coarse.level)
};

MeshPair build_pair(int coarse_level, int fine_level);

/// k-fold vertex-adjacency closure of a coarse element, together with the
/// fine nodes strictly inside it (homogeneous Dirichlet on the patch rim).
struct Patch {
  int center_element = -1;
  int k = 0;
  std::vector<int> coarse_elements;  // sorted
  std::vector<int> fine_nodes;       // sorted fine node indices
};

Patch patch(const MeshPair& pair, int element, int k);

}  // namespace lodfem
