#include "lodfem/mesh.hpp"

#include <algorithm>
#include <cmath>

#include "lodfem/errors.hpp"

namespace lodfem {

std::array<double, 2> TriMesh::centroid(int element) const {
  const auto& e = elements[element];
  return {(nodes[e[0]][0] + nodes[e[1]][0] + nodes[e[2]][0]) / 3.0,
          (nodes[e[0]][1] + nodes[e[1]][1] + nodes[e[2]][1]) / 3.0};
}

double TriMesh::element_area(int element) const {
  const auto& e = elements[element];
  const auto& a = nodes[e[0]];
  const auto& b = nodes[e[1]];
  const auto& c = nodes[e[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

TriMesh build_mesh(int level) {
  if (level < 1 || level > 10)
    throw ConfigError("build_mesh: level must be in [1,10], got " + std::to_string(level));

  TriMesh m;
  m.level = level;
  m.cells_per_side = 1 << level;
  m.spacing = std::ldexp(1.0, -level);
  m.element_diam = std::sqrt(2.0) * m.spacing;

  const int n = m.cells_per_side;
  m.nodes.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.nodes.push_back({i * m.spacing, j * m.spacing});

  m.elements.reserve(static_cast<std::size_t>(2) * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int p00 = m.node_at(i, j);
      const int p10 = m.node_at(i + 1, j);
      const int p01 = m.node_at(i, j + 1);
      const int p11 = m.node_at(i + 1, j + 1);
      m.elements.push_back({p00, p10, p11});  // below the diagonal
      m.elements.push_back({p00, p11, p01});  // above the diagonal
    }
  }

  m.interior_index.assign(m.nodes.size(), -1);
  for (int j = 1; j < n; ++j) {
    for (int i = 1; i < n; ++i) {
      const int p = m.node_at(i, j);
      m.interior_index[p] = static_cast<int>(m.interior_nodes.size());
      m.interior_nodes.push_back(p);
    }
  }

  m.node_elements.resize(m.nodes.size());
  for (int e = 0; e < m.element_count(); ++e)
    for (int v : m.elements[e]) m.node_elements[v].push_back(e);

  return m;
}

MeshPair build_pair(int coarse_level, int fine_level) {
  if (coarse_level > fine_level)
    throw ConfigError("build_pair: coarse_level " + std::to_string(coarse_level) +
                      " exceeds fine_level " + std::to_string(fine_level));

  MeshPair p;
  p.coarse = build_mesh(coarse_level);
  p.fine = build_mesh(fine_level);
  p.refinement_ratio = 1 << (fine_level - coarse_level);
  const int r = p.refinement_ratio;
  const int nf = p.fine.cells_per_side;

  p.child_map.resize(p.coarse.element_count());
  p.parent_map.resize(p.fine.element_count());
  for (int j = 0; j < nf; ++j) {
    for (int i = 0; i < nf; ++i) {
      const int ci = i / r, cj = j / r;       // coarse cell
      const int li = i - ci * r, lj = j - cj * r;  // position within it
      const int fine_lower = 2 * (j * nf + i);
      const int fine_upper = fine_lower + 1;
      const int coarse_lower = 2 * (cj * p.coarse.cells_per_side + ci);
      const int coarse_upper = coarse_lower + 1;
      // the coarse diagonal runs li == lj; fine cells on it are split
      const int parent_lower = (li >= lj) ? coarse_lower : coarse_upper;
      const int parent_upper = (lj >= li) ? coarse_upper : coarse_lower;
      p.parent_map[fine_lower] = parent_lower;
      p.parent_map[fine_upper] = parent_upper;
      p.child_map[parent_lower].push_back(fine_lower);
      p.child_map[parent_upper].push_back(fine_upper);
    }
  }

  p.node_embed.resize(p.coarse.node_count());
  for (int j = 0; j <= p.coarse.cells_per_side; ++j)
    for (int i = 0; i <= p.coarse.cells_per_side; ++i)
      p.node_embed[p.coarse.node_at(i, j)] = p.fine.node_at(i * r, j * r);

  return p;
}

Patch patch(const MeshPair& pair, int element, int k) {
  if (element < 0 || element >= pair.coarse.element_count())
    throw DomainError("patch: element index out of range");
  if (k < 0) throw DomainError("patch: k must be nonnegative");

  const TriMesh& cm = pair.coarse;
  std::vector<char> in_patch(cm.element_count(), 0);
  std::vector<int> frontier{element};
  in_patch[element] = 1;
  int count = 1;

  for (int round = 0; round < k && !frontier.empty(); ++round) {
    std::vector<char> node_seen(cm.node_count(), 0);
    std::vector<int> next;
    for (int e : frontier) {
      for (int v : cm.elements[e]) {
        if (node_seen[v]) continue;
        node_seen[v] = 1;
        for (int nb : cm.node_elements[v]) {
          if (!in_patch[nb]) {
            in_patch[nb] = 1;
            next.push_back(nb);
            ++count;
          }
        }
      }
    }
    frontier = std::move(next);
    if (count == cm.element_count()) break;
  }

  Patch out;
  out.center_element = element;
  out.k = k;
  out.coarse_elements.reserve(count);
  for (int e = 0; e < cm.element_count(); ++e)
    if (in_patch[e]) out.coarse_elements.push_back(e);

  // a fine node lies strictly inside the patch iff it is off the domain
  // boundary and every incident fine element has its parent in the patch
  const TriMesh& fm = pair.fine;
  for (int node : fm.interior_nodes) {
    bool inside = true;
    for (int fe : fm.node_elements[node]) {
      if (!in_patch[pair.parent_map[fe]]) {
        inside = false;
        break;
      }
    }
    if (inside) out.fine_nodes.push_back(node);
  }
  return out;
}

}  // namespace lodfem
