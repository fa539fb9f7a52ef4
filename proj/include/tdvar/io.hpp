#pragma once

#include "tdvar/types.hpp"

#include <filesystem>
#include <string>

namespace tdvar {

/// Writes content to path through a temporary file in the same directory and a rename.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Matrix Market text: dense matrices in array format, sparse ones in coordinate format
/// (1-based). Values are printed with 17 significant digits so reads round-trip exactly.
std::string matrix_market(const Matrix& m);
std::string matrix_market(const SparseMatrix& m);
void write_matrix_market(const std::filesystem::path& path, const Matrix& m);
void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m);
/// Reads either format into a dense matrix.
Matrix read_matrix_market(const std::filesystem::path& path);

}  // namespace tdvar
