#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "olss/matrix.hpp"

namespace olss {

// Binary layout: magic "OLSSMAT1", rows (u64 LE), cols (u64 LE), then
// rows*cols f64 LE in row-major order.
void write_olssmat(std::ostream& out, const Matrix& m);
Matrix read_olssmat(std::istream& in);

// Text layout: header line "# rows,cols" then one comma-separated line per row.
void write_matrix_csv(std::ostream& out, const Matrix& m);
Matrix read_matrix_csv(std::istream& in);

// File helpers. Writes go through a temporary file in the same directory and
// are renamed into place, so readers never see a partial file.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
/// Dispatches on content: OLSSMAT1 magic, otherwise CSV.
Matrix load_matrix(const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace olss
