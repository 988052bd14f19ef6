#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lodfem {

/// Scalar diffusion coefficient A = B(x)*I, piecewise constant on a uniform
/// Cartesian grid of size 2^-grid_level. Values are stored row-major from
/// the lower-left cell.
struct CoeffField {
  int grid_level = 0;
  std::vector<double> values;  // 4^grid_level entries, all > 0
  double alpha = 0.0;          // min value
  double beta = 0.0;           // max value

  double contrast() const { return beta / alpha; }
};

CoeffField constant_field(double value);

/// Log-uniform i.i.d. cell values on [lo, hi] from mt19937_64(seed); the
/// uniform variate is built as (x >> 11) * 2^-53 so the output stream is
/// identical on every platform.
CoeffField random_field(int grid_level, double lo, double hi, std::uint64_t seed);

/// Value of the cell containing (x, y); cells are half-open to the upper
/// right, last row/column closed.
double value_at(const CoeffField& field, double x, double y);

/// Plain-text format: `grid_level` on the first line, then 4^grid_level
/// whitespace-separated values in storage order. Shortest round-trip
/// decimals, so save/load is bitwise.
void save_field(const CoeffField& field, const std::string& path);
CoeffField load_field(const std::string& path);

}  // namespace lodfem
