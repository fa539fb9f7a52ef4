#include "tdvar/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace tdvar {

namespace {

void append_value(std::string& out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string matrix_market(const Matrix& m) {
  std::string out = "%%MatrixMarket matrix array real general\n";
  out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 24);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      append_value(out, m(i, j));
      out += '\n';
    }
  }
  return out;
}

std::string matrix_market(const SparseMatrix& m) {
  std::string out = "%%MatrixMarket matrix coordinate real general\n";
  out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + " " + std::to_string(m.nonZeros()) + "\n";
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out += std::to_string(it.row() + 1) + " " + std::to_string(it.col() + 1) + " ";
      append_value(out, it.value());
      out += '\n';
    }
  }
  return out;
}

void write_matrix_market(const std::filesystem::path& path, const Matrix& m) { atomic_write(path, matrix_market(m)); }

void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m) {
  atomic_write(path, matrix_market(m));
}

Matrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  if (header.rfind("%%MatrixMarket matrix", 0) != 0) throw std::runtime_error(path.string() + ": not a Matrix Market file");
  const bool dense = header.find(" array ") != std::string::npos;
  const bool sparse = header.find(" coordinate ") != std::string::npos;
  if (!dense && !sparse) throw std::runtime_error(path.string() + ": unsupported Matrix Market format");
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing size line");
  } while (!line.empty() && line[0] == '%');
  std::istringstream size_line(line);
  Eigen::Index rows = 0, cols = 0, nnz = 0;
  size_line >> rows >> cols;
  if (sparse) size_line >> nnz;
  if (!size_line || rows < 0 || cols < 0) throw std::runtime_error(path.string() + ": malformed size line");
  Matrix m = Matrix::Zero(rows, cols);
  if (dense) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (!(in >> m(i, j))) throw std::runtime_error(path.string() + ": truncated data");
      }
    }
  } else {
    for (Eigen::Index k = 0; k < nnz; ++k) {
      Eigen::Index i = 0, j = 0;
      double v = 0.0;
      if (!(in >> i >> j >> v)) throw std::runtime_error(path.string() + ": truncated data");
      if (i < 1 || i > rows || j < 1 || j > cols) throw std::runtime_error(path.string() + ": index out of range");
      m(i - 1, j - 1) += v;
    }
  }
  return m;
}

}  // namespace tdvar
