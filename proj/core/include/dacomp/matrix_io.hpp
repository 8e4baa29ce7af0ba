#ifndef DACOMP_MATRIX_IO_HPP
#define DACOMP_MATRIX_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "dacomp/errors.hpp"

namespace dacomp {

// CSV: one row per matrix row, full-precision scientific notation.
void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

// Raw binary, little-endian: u64 rows, u64 cols, then row-major f64.
void write_matrix_binary(const std::filesystem::path& path,
                         const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_binary(const std::filesystem::path& path);

void write_matrix_binary(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_binary(std::istream& is);

// Fixed 17-significant-digit formatting used by all CSV emitters.
std::string format_double(double v);

}  // namespace dacomp

#endif
