#include "godnf/io.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace godnf {

namespace {

std::vector<std::vector<Real>> read_numeric_rows(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open file: " + path);
  std::vector<std::vector<Real>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<Real> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const char* begin = cell.c_str();
      char* end = nullptr;
      errno = 0;
      const Real value = std::strtod(begin, &end);
      bool ok = end != begin;
      for (const char* p = end; ok && *p != '\0'; ++p)
        ok = std::isspace(static_cast<unsigned char>(*p)) != 0;
      // underflow to a subnormal sets ERANGE but still round trips; only
      // an overflowed magnitude is unrepresentable
      if (errno == ERANGE && std::fabs(value) == HUGE_VAL) ok = false;
      if (!ok)
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": not a number: '" + cell + "'");
      row.push_back(value);
    }
    require(!row.empty(),
            path + ":" + std::to_string(line_no) + ": empty row");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path) {
  const auto rows = read_numeric_rows(path);
  require(!rows.empty(), path + ": no data rows");
  const std::size_t cols = rows.front().size();
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == cols,
            path + ": row " + std::to_string(i + 1) +
                " has a different column count");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

std::string format_real(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_from_matrix(const Matrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_real(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::vector<int> read_label_csv(const std::string& path) {
  const auto rows = read_numeric_rows(path);
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == 1, path + ": row " + std::to_string(i + 1) +
                                     " must hold a single label");
    labels.push_back(static_cast<int>(rows[i][0]));
  }
  return labels;
}

Vector read_value_csv(const std::string& path) {
  const auto rows = read_numeric_rows(path);
  Vector v(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == 1, path + ": row " + std::to_string(i + 1) +
                                     " must hold a single value");
    v[static_cast<Index>(i)] = rows[i][0];
  }
  return v;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open file for writing: " + tmp);
    out << content;
    out.flush();
    require(out.good(), "write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace godnf
