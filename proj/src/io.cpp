#include "eio/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace eio {
namespace {

// Shortest round-trip decimal representation, locale-independent.
std::string format_double(double x) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", x);
  double back = 0;
  std::sscanf(buf, "%lf", &back);
  if (back == x) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
      std::sscanf(shorter, "%lf", &back);
      if (back == x) return shorter;
    }
  }
  return std::string(buf, buf + n);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field(const std::string& field, int line_no) {
  const char* b = field.data();
  const char* e = b + field.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  double value = 0;
  const auto res = std::from_chars(b, e, value);
  if (res.ec != std::errc{} || res.ptr != e)
    throw InvalidInputError("malformed CSV value at line " + std::to_string(line_no) +
                            ": '" + field + "'");
  return value;
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_field(f, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidInputError("ragged CSV row at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string format_csv(const MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_double(m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

std::string format_csv(const VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += format_double(v(i));
    out.push_back('\n');
  }
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write file: " + path);
  out << content;
  if (!out) throw InvalidInputError("write failed: " + path);
}

void write_csv(const std::string& path, const MatrixXd& m) {
  write_text(path, format_csv(m));
}

void write_csv(const std::string& path, const VectorXd& v) {
  write_text(path, format_csv(v));
}

MatrixXd read_csv_matrix(const std::string& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw InvalidInputError("empty CSV file: " + path);
  MatrixXd m(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return m;
}

VectorXd read_csv_vector(const std::string& path) {
  const MatrixXd m = read_csv_matrix(path);
  if (m.cols() != 1)
    throw InvalidInputError("expected one value per line in " + path);
  return m.col(0);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace eio
