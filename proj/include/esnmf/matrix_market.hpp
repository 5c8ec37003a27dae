#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "esnmf/error.hpp"
#include "esnmf/sparse_matrix.hpp"

// Matrix Market coordinate files. Indices are 1-based on disk and 0-based
// in memory. The writer always emits `real general` in canonical order.

namespace esnmf {

/// Shortest text form of `v` that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_matrix_market(std::ostream& os, const SparseMatrix& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (Index j = 0; j < m.cols(); ++j) {
    const auto c = m.column(j);
    for (Index p = 0; p < c.size(); ++p) {
      os << (c.rows[p] + 1) << ' ' << (j + 1) << ' ' << format_double(c.values[p]) << '\n';
    }
  }
}

inline void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  write_matrix_market(os, m);
  if (!os) throw InputError("failed writing " + path.string());
}

/// Reads `coordinate` files with field real, integer or pattern and
/// symmetry general or symmetric. Duplicate entries are summed.
inline SparseMatrix read_matrix_market(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw InputError(name + ": empty Matrix Market file");
  std::string banner, object, format, field, symmetry;
  {
    std::istringstream hs(line);
    hs >> banner >> object >> format >> field >> symmetry;
  }
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (banner != "%%MatrixMarket" || object != "matrix") {
    throw InputError(name + ": missing %%MatrixMarket matrix header");
  }
  if (format != "coordinate") throw InputError(name + ": only coordinate format is supported");
  if (field != "real" && field != "integer" && field != "pattern") {
    throw InputError(name + ": unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw InputError(name + ": unsupported symmetry '" + symmetry + "'");
  }

  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    break;
  }
  Index rows = 0, cols = 0, count = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> count)) throw InputError(name + ": malformed size line");
  }
  if (symmetry == "symmetric" && rows != cols) throw InputError(name + ": symmetric matrix is not square");

  std::vector<Triplet> entries;
  entries.reserve(symmetry == "symmetric" ? 2 * count : count);
  Index seen = 0;
  while (seen < count && std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    std::istringstream ss(line);
    Index i = 0, j = 0;
    double v = 1.0;
    if (!(ss >> i >> j)) throw InputError(name + ": malformed entry on data line " + std::to_string(seen + 1));
    if (field != "pattern" && !(ss >> v)) {
      throw InputError(name + ": missing value on data line " + std::to_string(seen + 1));
    }
    if (i < 1 || j < 1 || i > rows || j > cols) {
      throw InputError(name + ": entry (" + std::to_string(i) + ", " + std::to_string(j) +
                       ") outside " + shape_string(rows, cols));
    }
    if (!std::isfinite(v)) throw InputError(name + ": non-finite value on data line " + std::to_string(seen + 1));
    entries.push_back({i - 1, j - 1, v});
    if (symmetry == "symmetric" && i != j) entries.push_back({j - 1, i - 1, v});
    ++seen;
  }
  if (seen != count) {
    throw InputError(name + ": expected " + std::to_string(count) + " entries, found " + std::to_string(seen));
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(entries));
}

inline SparseMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return read_matrix_market(is, path.string());
}

}  // namespace esnmf
