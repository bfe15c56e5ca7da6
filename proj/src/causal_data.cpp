#include "rdesign/causal_data.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rdesign {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& cell, double& value) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  if (begin == end) return false;
  auto res = std::from_chars(begin, end, value);
  return res.ec == std::errc() && res.ptr == end;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t row, std::size_t col,
                             const std::string& what) {
  throw std::invalid_argument(path + ":" + std::to_string(row) + ":" +
                              std::to_string(col) + ": " + what);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CausalSample CausalDataset::sample(Eigen::Index i) const {
  return {x.row(i), t[static_cast<std::size_t>(i)], y(i), s[static_cast<std::size_t>(i)]};
}

void CausalDataset::append(const CausalSample& sample) {
  const Eigen::Index n = x.rows();
  x.conservativeResize(n + 1, Eigen::NoChange);
  x.row(n) = sample.x;
  y.conservativeResize(n + 1);
  y(n) = sample.y;
  t.push_back(sample.t);
  s.push_back(sample.s);
}

CausalDataset CausalDataset::empty(int dim) {
  CausalDataset d;
  d.x.resize(0, dim);
  d.y.resize(0);
  return d;
}

void write_dataset_csv(const CausalDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open " + path + " for writing");
  for (int d = 0; d < data.dim(); ++d) out << "x_" << d << ",";
  out << "t,y,s\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (int d = 0; d < data.dim(); ++d) out << format_double(data.x(i, d)) << ",";
    out << data.t[static_cast<std::size_t>(i)] << "," << format_double(data.y(i))
        << "," << static_cast<char>(data.s[static_cast<std::size_t>(i)]) << "\n";
  }
}

CausalDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, 1, "empty file");
  auto header = split_csv_line(line);
  if (header.size() < 3) parse_fail(path, 1, 1, "expected x_*,t,y,s header");
  int dim = static_cast<int>(header.size()) - 3;
  double ignored;
  if (parse_double(header[0], ignored)) {
    parse_fail(path, 1, 1, "missing header row");
  }
  CausalDataset data = CausalDataset::empty(dim);
  std::vector<CausalSample> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      parse_fail(path, lineno, cells.size(), "ragged row");
    }
    CausalSample sample;
    sample.x.resize(dim);
    for (int d = 0; d < dim; ++d) {
      if (!parse_double(cells[static_cast<std::size_t>(d)], sample.x(d))) {
        parse_fail(path, lineno, static_cast<std::size_t>(d) + 1, "non-numeric cell");
      }
    }
    double tv;
    if (!parse_double(cells[static_cast<std::size_t>(dim)], tv) || (tv != 0 && tv != 1)) {
      parse_fail(path, lineno, static_cast<std::size_t>(dim) + 1, "treatment must be 0/1");
    }
    sample.t = static_cast<Arm>(tv);
    if (!parse_double(cells[static_cast<std::size_t>(dim) + 1], sample.y)) {
      parse_fail(path, lineno, static_cast<std::size_t>(dim) + 2, "non-numeric cell");
    }
    std::string sv = cells[static_cast<std::size_t>(dim) + 2];
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.pop_back();
    if (sv != "o" && sv != "e") {
      parse_fail(path, lineno, static_cast<std::size_t>(dim) + 3, "source must be o/e");
    }
    sample.s = sv == "o" ? Source::Observational : Source::Experimental;
    rows.push_back(std::move(sample));
  }
  data.x.resize(static_cast<Eigen::Index>(rows.size()), dim);
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.x.row(static_cast<Eigen::Index>(i)) = rows[i].x;
    data.y(static_cast<Eigen::Index>(i)) = rows[i].y;
    data.t.push_back(rows[i].t);
    data.s.push_back(rows[i].s);
  }
  return data;
}

Matrix load_covariates_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, 1, "empty file");
  auto header = split_csv_line(line);
  if (header.empty()) parse_fail(path, 1, 1, "empty header");
  double ignored;
  if (parse_double(header[0], ignored)) {
    parse_fail(path, 1, 1, "missing header row");
  }
  const std::size_t cols = header.size();
  std::vector<Vector> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != cols) parse_fail(path, lineno, cells.size(), "ragged row");
    Vector row(static_cast<Eigen::Index>(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      if (!parse_double(cells[c], row(static_cast<Eigen::Index>(c)))) {
        parse_fail(path, lineno, c + 1, "non-numeric cell");
      }
    }
    rows.push_back(std::move(row));
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = rows[i];
  }
  return out;
}

void write_covariates_csv(const Matrix& x, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open " + path + " for writing");
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    out << "x_" << d << (d + 1 < x.cols() ? "," : "\n");
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      out << format_double(x(i, d)) << (d + 1 < x.cols() ? "," : "\n");
    }
  }
}

}  // namespace rdesign
