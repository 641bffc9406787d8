#pragma once

#include <string>
#include <vector>

#include "godnf/types.hpp"

namespace godnf {

/// Comma-separated numeric matrix, one row per line, no header.
Matrix read_csv_matrix(const std::string& path);

/// Writes with %.17g so a read-back reproduces the exact doubles.
std::string csv_from_matrix(const Matrix& m);

std::vector<int> read_label_csv(const std::string& path);

Vector read_value_csv(const std::string& path);

/// Formats one real with %.17g.
std::string format_real(Real v);

/// Writes content to path via a temp file + rename, so readers never observe
/// a partial file.
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace godnf
