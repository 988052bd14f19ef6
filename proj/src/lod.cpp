#include "lodfem/lod.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "lodfem/errors.hpp"

namespace lodfem {

namespace {

// patch problem operators restricted to one patch, with the shared
// factorization for all right-hand sides on it
struct PatchProblem {
  std::vector<int> interior_positions;  // fine interior indices in the patch
  SaddleContext ctx;

  PatchProblem(std::vector<int> pos, const SparseMatrix& A, const SparseMatrix& C,
               const SaddleOptions& opts)
      : interior_positions(std::move(pos)), ctx(A, C, opts) {}
};

std::shared_ptr<const PatchProblem> make_patch_problem(const MeshPair& pair,
                                                       const FemOperators& fem_fine,
                                                       const ClementMatrix& clem,
                                                       const Patch& p,
                                                       const SaddleOptions& opts) {
  std::vector<int> positions;
  positions.reserve(p.fine_nodes.size());
  for (int node : p.fine_nodes) positions.push_back(pair.fine.interior_index[node]);

  std::vector<int> all_rows(clem.matrix.rows());
  for (int r = 0; r < clem.matrix.rows(); ++r) all_rows[r] = r;

  SparseMatrix A = fem_fine.stiffness.submatrix(positions, positions);
  SparseMatrix C = clem.matrix.submatrix(all_rows, positions);
  return std::make_shared<PatchProblem>(std::move(positions), A, C, opts);
}

// right-hand side of the corrector problem for (element, vertex): the
// stiffness of the hat function integrated over that single coarse element,
// tested against fine hats. Returned over fine interior indices.
Vec element_rhs(const MeshPair& pair, const CoeffField& field, int coarse_element,
                int local_vertex) {
  const TriMesh& cm = pair.coarse;
  const TriMesh& fm = pair.fine;
  const auto& ce = cm.elements[coarse_element];

  // barycentric coordinate of the chosen vertex, evaluated at a point
  const auto lambda = [&](double x, double y) {
    const auto& p = cm.nodes[ce[local_vertex]];
    const auto& q = cm.nodes[ce[(local_vertex + 1) % 3]];
    const auto& s = cm.nodes[ce[(local_vertex + 2) % 3]];
    return ((q[0] - x) * (s[1] - y) - (s[0] - x) * (q[1] - y)) /
           ((q[0] - p[0]) * (s[1] - p[1]) - (s[0] - p[0]) * (q[1] - p[1]));
  };

  Vec rhs(fm.interior_count(), 0.0);
  for (int fe : pair.child_map[coarse_element]) {
    const auto& el = fm.elements[fe];
    const auto& p0 = fm.nodes[el[0]];
    const auto& p1 = fm.nodes[el[1]];
    const auto& p2 = fm.nodes[el[2]];
    const double b[3] = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
    const double c[3] = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
    const double area =
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
    const auto mid = fm.centroid(fe);
    const double coeff = value_at(field, mid[0], mid[1]);
    const double kfac = coeff / (4.0 * area);
    const double hv[3] = {lambda(p0[0], p0[1]), lambda(p1[0], p1[1]), lambda(p2[0], p2[1])};
    for (int i = 0; i < 3; ++i) {
      const int pos = fm.interior_index[el[i]];
      if (pos < 0) continue;
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += kfac * (b[i] * b[j] + c[i] * c[j]) * hv[j];
      rhs[pos] += s;
    }
  }
  return rhs;
}

SparseVec solve_element_corrector(const PatchProblem& prob, const Vec& rhs_interior) {
  Vec rhs_patch(prob.interior_positions.size());
  for (std::size_t i = 0; i < prob.interior_positions.size(); ++i)
    rhs_patch[i] = rhs_interior[prob.interior_positions[i]];
  const Vec w = prob.ctx.solve(rhs_patch);
  SparseVec out;
  out.idx.reserve(w.size());
  out.val.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) {
      out.idx.push_back(prob.interior_positions[i]);
      out.val.push_back(w[i]);
    }
  }
  return out;
}

}  // namespace

int saturation_k(const TriMesh& coarse) { return 2 * coarse.cells_per_side; }

CorrectorSet compute_correctors(const MeshPair& pair, const FemOperators& fem_fine,
                                const ClementMatrix& clem, const CoeffField& field,
                                int k, const CorrectorOptions& opts) {
  if (k < 0) throw DomainError("compute_correctors: k must be nonnegative");
  const TriMesh& cm = pair.coarse;
  CorrectorSet set;
  set.k = k;
  set.element_correctors.resize(cm.element_count());

  SaddleOptions sopts;
  sopts.tol = opts.tol;
  sopts.dense_threshold = opts.dense_threshold;

  // all saturated patches are the same problem; share its factorization
  std::mutex saturated_mutex;
  std::shared_ptr<const PatchProblem> saturated;

  const auto run_element = [&](int e) {
    const auto& el = cm.elements[e];
    bool any_interior = false;
    for (int v : el) any_interior |= cm.is_interior(v);
    if (!any_interior) return;

    Patch p = patch(pair, e, k);
    std::shared_ptr<const PatchProblem> prob;
    if (static_cast<int>(p.coarse_elements.size()) == cm.element_count()) {
      std::scoped_lock lock(saturated_mutex);
      if (!saturated) saturated = make_patch_problem(pair, fem_fine, clem, p, sopts);
      prob = saturated;
    } else {
      prob = make_patch_problem(pair, fem_fine, clem, p, sopts);
    }

    for (int v = 0; v < 3; ++v) {
      if (!cm.is_interior(el[v])) continue;
      const Vec rhs = element_rhs(pair, field, e, v);
      try {
        set.element_correctors[e][v] = solve_element_corrector(*prob, rhs);
      } catch (const SolveError& err) {
        throw SolveError("corrector for element " + std::to_string(e) + ", vertex " +
                         std::to_string(v) + " (patch k=" + std::to_string(k) +
                         "): " + err.what());
      }
    }
  };

  int threads = opts.threads > 0 ? opts.threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min<int>(threads, cm.element_count());

  if (threads == 1) {
    for (int e = 0; e < cm.element_count(); ++e) run_element(e);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::exception_ptr first_error;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const int e = next.fetch_add(1);
          if (e >= cm.element_count()) return;
          try {
            run_element(e);
          } catch (...) {
            std::scoped_lock lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return set;
}

Vec node_corrector(const MeshPair& pair, const FemOperators& fem_fine,
                   const ClementMatrix& clem, const CoeffField& field, int coarse_node,
                   int k, const CorrectorOptions& opts) {
  const TriMesh& cm = pair.coarse;
  if (coarse_node < 0 || coarse_node >= cm.node_count())
    throw DomainError("node_corrector: node index out of range");

  SaddleOptions sopts;
  sopts.tol = opts.tol;
  sopts.dense_threshold = opts.dense_threshold;

  std::shared_ptr<const PatchProblem> saturated;
  Vec total(pair.fine.interior_count(), 0.0);
  for (int e : cm.node_elements[coarse_node]) {  // ascending element index
    const auto& el = cm.elements[e];
    int v = 0;
    while (el[v] != coarse_node) ++v;
    Patch p = patch(pair, e, k);
    std::shared_ptr<const PatchProblem> prob;
    if (static_cast<int>(p.coarse_elements.size()) == cm.element_count()) {
      if (!saturated) saturated = make_patch_problem(pair, fem_fine, clem, p, sopts);
      prob = saturated;
    } else {
      prob = make_patch_problem(pair, fem_fine, clem, p, sopts);
    }
    const SparseVec q = solve_element_corrector(*prob, element_rhs(pair, field, e, v));
    for (std::size_t i = 0; i < q.idx.size(); ++i) total[q.idx[i]] += q.val[i];
  }
  return total;
}

SparseMatrix project_matrix(const SparseMatrix& A, const std::vector<SparseVec>& basis) {
  const int n = static_cast<int>(basis.size());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n) * n);
  Vec work(A.rows(), 0.0);
  for (int j = 0; j < n; ++j) {
    // work = A * basis[j]
    std::fill(work.begin(), work.end(), 0.0);
    for (std::size_t kk = 0; kk < basis[j].idx.size(); ++kk) {
      const int row = basis[j].idx[kk];
      const double v = basis[j].val[kk];
      auto cols = A.row_cols(row);
      auto vals = A.row_vals(row);
      for (std::size_t l = 0; l < cols.size(); ++l) work[cols[l]] += vals[l] * v;
    }
    for (int i = 0; i <= j; ++i) {
      const double entry = dot(basis[i], work);
      if (entry != 0.0) {
        t.push_back({i, j, entry});
        if (i != j) t.push_back({j, i, entry});
      }
    }
  }
  return SparseMatrix(n, n, std::move(t));
}

MultiscaleSpace build_space(const CorrectorSet& correctors, const MeshPair& pair,
                            const FemOperators& fem_fine) {
  const TriMesh& cm = pair.coarse;
  const SparseMatrix E = prolongation(pair);
  const SparseMatrix Et = E.transpose();

  MultiscaleSpace space;
  space.basis.resize(cm.interior_count());
  space.fine_dim = pair.fine.interior_count();
  Vec acc(pair.fine.interior_count(), 0.0);
  for (int xi = 0; xi < cm.interior_count(); ++xi) {
    const int node = cm.interior_nodes[xi];
    std::fill(acc.begin(), acc.end(), 0.0);
    auto cols = Et.row_cols(xi);
    auto vals = Et.row_vals(xi);
    for (std::size_t k = 0; k < cols.size(); ++k) acc[cols[k]] = vals[k];
    for (int e : cm.node_elements[node]) {  // ascending: reproducible sums
      const auto& el = cm.elements[e];
      int v = 0;
      while (el[v] != node) ++v;
      const SparseVec& q = correctors.element_correctors[e][v];
      for (std::size_t i = 0; i < q.idx.size(); ++i) acc[q.idx[i]] -= q.val[i];
    }
    space.basis[xi] = SparseVec::from_dense(acc);
  }

  space.ms_stiffness = project_matrix(fem_fine.stiffness, space.basis);
  space.ms_mass = project_matrix(fem_fine.mass, space.basis);
  return space;
}

Vec lift(const MultiscaleSpace& space, const Vec& coeffs) {
  if (coeffs.size() != space.basis.size()) throw DomainError("lift: dimension mismatch");
  Vec out(static_cast<std::size_t>(space.fine_dim), 0.0);
  for (std::size_t i = 0; i < space.basis.size(); ++i) {
    const double c = coeffs[i];
    if (c == 0.0) continue;
    const SparseVec& b = space.basis[i];
    for (std::size_t k = 0; k < b.idx.size(); ++k) out[b.idx[k]] += c * b.val[k];
  }
  return out;
}

Vec restrict_to_space(const MultiscaleSpace& space, const Vec& fine) {
  Vec out(space.basis.size());
  for (std::size_t i = 0; i < space.basis.size(); ++i) out[i] = dot(space.basis[i], fine);
  return out;
}

Vec ms_ritz_project(const MultiscaleSpace& space, const FemOperators& fem_fine,
                    const Vec& v, double tol) {
  const Vec Kv = fem_fine.stiffness.apply(v);
  const Vec rhs = restrict_to_space(space, Kv);
  auto [c, rep] = cg_solve(space.ms_stiffness, rhs, tol);
  (void)rep;
  return lift(space, c);
}

namespace {

constexpr std::uint32_t kCacheMagic = 0x4C4F4443;  // "LODC"
constexpr std::uint32_t kCacheVersion = 1;

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
bool read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return static_cast<bool>(is);
}

}  // namespace

std::uint64_t corrector_cache_key(const MeshPair& pair, const CoeffField& field, int k) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::int32_t meta[4] = {pair.coarse.level, pair.fine.level, k, field.grid_level};
  h = fnv1a(meta, sizeof meta, h);
  h = fnv1a(field.values.data(), field.values.size() * sizeof(double), h);
  return h;
}

void save_correctors(const std::string& path, const CorrectorSet& set, std::uint64_t key) {
  std::ofstream os(path + ".tmp", std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("save_correctors: cannot open " + path + ".tmp");
  write_pod(os, kCacheMagic);
  write_pod(os, kCacheVersion);
  write_pod(os, key);
  write_pod(os, static_cast<std::int32_t>(set.k));
  write_pod(os, static_cast<std::uint64_t>(set.element_correctors.size()));
  for (const auto& slots : set.element_correctors) {
    for (const auto& sv : slots) {
      write_pod(os, static_cast<std::uint64_t>(sv.idx.size()));
      os.write(reinterpret_cast<const char*>(sv.idx.data()), sv.idx.size() * sizeof(int));
      os.write(reinterpret_cast<const char*>(sv.val.data()), sv.val.size() * sizeof(double));
    }
  }
  if (!os) throw IoError("save_correctors: write failed for " + path);
  os.close();
  std::error_code ec;
  std::filesystem::rename(path + ".tmp", path, ec);
  if (ec) throw IoError("save_correctors: rename failed: " + ec.message());
}

std::optional<CorrectorSet> load_correctors(const std::string& path, std::uint64_t key) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  std::uint32_t magic = 0, version = 0;
  std::uint64_t file_key = 0;
  if (!read_pod(is, magic) || magic != kCacheMagic) return std::nullopt;
  if (!read_pod(is, version) || version != kCacheVersion) return std::nullopt;
  if (!read_pod(is, file_key) || file_key != key) return std::nullopt;

  CorrectorSet set;
  std::int32_t k = 0;
  std::uint64_t n_elements = 0;
  if (!read_pod(is, k) || !read_pod(is, n_elements)) return std::nullopt;
  set.k = k;
  set.element_correctors.resize(n_elements);
  for (auto& slots : set.element_correctors) {
    for (auto& sv : slots) {
      std::uint64_t nnz = 0;
      if (!read_pod(is, nnz)) return std::nullopt;
      sv.idx.resize(nnz);
      sv.val.resize(nnz);
      is.read(reinterpret_cast<char*>(sv.idx.data()), nnz * sizeof(int));
      is.read(reinterpret_cast<char*>(sv.val.data()), nnz * sizeof(double));
      if (!is) return std::nullopt;
    }
  }
  return set;
}

}  // namespace lodfem
