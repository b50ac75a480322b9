#pragma once

// File formats: headerless CSV (matrices row-major, vectors one value per
// line, LF endings) and JSON metadata/reports.

#include "eio/common.hpp"

#include <string>

namespace eio {

std::string format_csv(const MatrixXd& m);
std::string format_csv(const VectorXd& v);
void write_csv(const std::string& path, const MatrixXd& m);
void write_csv(const std::string& path, const VectorXd& v);
void write_text(const std::string& path, const std::string& content);

// Throws InvalidInputError with the 1-based line number on malformed input.
MatrixXd read_csv_matrix(const std::string& path);
VectorXd read_csv_vector(const std::string& path);

std::string read_text(const std::string& path);

}  // namespace eio
