#include "lodfem/coeff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lodfem/errors.hpp"

namespace lodfem {

namespace {

void finalize_bounds(CoeffField& f) {
  auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  f.alpha = *lo;
  f.beta = *hi;
}

}  // namespace

CoeffField constant_field(double value) {
  if (!(value > 0.0)) throw DomainError("constant_field: value must be positive");
  CoeffField f;
  f.grid_level = 0;
  f.values = {value};
  f.alpha = f.beta = value;
  return f;
}

CoeffField random_field(int grid_level, double lo, double hi, std::uint64_t seed) {
  if (grid_level < 1) throw DomainError("random_field: grid_level must be >= 1");
  if (!(lo > 0.0)) throw DomainError("random_field: lo must be positive");
  if (!(lo < hi)) throw DomainError("random_field: lo must be less than hi");

  CoeffField f;
  f.grid_level = grid_level;
  const std::size_t n = std::size_t{1} << (2 * grid_level);
  f.values.resize(n);
  std::mt19937_64 rng(seed);
  const double log_lo = std::log(lo);
  const double log_span = std::log(hi) - log_lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    f.values[i] = std::exp(log_lo + u * log_span);
  }
  finalize_bounds(f);
  return f;
}

double value_at(const CoeffField& field, double x, double y) {
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
    throw DomainError("value_at: point outside the unit square");
  const int m = 1 << field.grid_level;
  const int ix = std::min(static_cast<int>(x * m), m - 1);
  const int iy = std::min(static_cast<int>(y * m), m - 1);
  return field.values[static_cast<std::size_t>(iy) * m + ix];
}

void save_field(const CoeffField& field, const std::string& path) {
  std::ostringstream out;
  out << field.grid_level << '\n';
  char buf[64];
  const int per_row = 1 << field.grid_level;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, field.values[i]);
    if (ec != std::errc{}) throw IoError("save_field: value formatting failed");
    out.write(buf, end - buf);
    out.put((i + 1) % per_row == 0 ? '\n' : ' ');
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("save_field: cannot open " + tmp);
    os << out.str();
    if (!os) throw IoError("save_field: write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("save_field: rename to " + path + " failed: " + ec.message());
}

CoeffField load_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_field: cannot open " + path);

  std::string line;
  if (!std::getline(is, line)) throw ParseError("load_field: missing grid_level", 1);
  int grid_level = -1;
  {
    auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), grid_level);
    if (ec != std::errc{} || grid_level < 0 || grid_level > 15)
      throw ParseError("load_field: bad grid_level '" + line + "'", 1);
    (void)p;
  }

  CoeffField f;
  f.grid_level = grid_level;
  const std::size_t expected = std::size_t{1} << (2 * grid_level);
  f.values.reserve(expected);
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      double v = 0.0;
      auto [np, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) throw ParseError("load_field: bad value", line_no);
      if (!(v > 0.0)) throw ParseError("load_field: nonpositive value", line_no);
      f.values.push_back(v);
      p = np;
    }
  }
  if (f.values.size() != expected)
    throw ParseError("load_field: expected " + std::to_string(expected) + " values, got " +
                         std::to_string(f.values.size()),
                     line_no);
  finalize_bounds(f);
  return f;
}

}  // namespace lodfem
