#include "drdid/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace drdid {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& raw, std::size_t row,
                    const std::string& col) {
  const std::string s = trim(raw);
  if (s.empty()) {
    throw DataError("empty cell at data row " + std::to_string(row) +
                    ", column '" + col + "'");
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw DataError("cannot parse '" + s + "' at data row " +
                    std::to_string(row) + ", column '" + col + "'");
  }
  if (!std::isfinite(v)) {
    throw NonFiniteValue("non-finite value at data row " + std::to_string(row) +
                         ", column '" + col + "'");
  }
  return v;
}

}  // namespace

Sample load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv file: " + path);

  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_line(line);
    break;
  }
  if (header.empty()) throw DataError("csv file has no header row: " + path);
  for (auto& h : header) h = trim(h);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index.emplace(header[j], j);

  auto require = [&](const std::string& name) -> std::size_t {
    auto it = index.find(name);
    if (it == index.end()) throw MissingColumn("csv is missing column '" + name + "'");
    return it->second;
  };

  const std::size_t d_idx = require(schema.d_col);
  const std::size_t z_idx = require(schema.z_col);

  const bool have_pair = !schema.y_post_col.empty() || !schema.y_pre_col.empty();
  std::size_t dy_idx = 0, post_idx = 0, pre_idx = 0;
  if (have_pair) {
    post_idx = require(schema.y_post_col);
    pre_idx = require(schema.y_pre_col);
  } else {
    dy_idx = require(schema.dy_col);
  }

  std::vector<std::string> x_names = schema.x_cols;
  if (x_names.empty()) {
    // Prefix discovery keeps header order; a bare prefix match like "x"
    // itself is accepted too.
    for (const auto& h : header) {
      if (h.rfind(schema.x_prefix, 0) == 0 && h != schema.d_col &&
          h != schema.z_col && h != schema.dy_col && h != schema.y_post_col &&
          h != schema.y_pre_col) {
        x_names.push_back(h);
      }
    }
    if (x_names.empty()) {
      throw MissingColumn("no covariate columns match prefix '" +
                          schema.x_prefix + "'");
    }
  }
  std::vector<std::size_t> x_idx;
  x_idx.reserve(x_names.size());
  for (const auto& name : x_names) x_idx.push_back(require(name));

  std::vector<double> dy_vals, z_vals;
  std::vector<int> d_vals;
  std::vector<double> x_vals;  // row-major staging
  const std::size_t p = x_idx.size();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++row;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) {
      throw DataError("data row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    const double d_raw = parse_number(fields[d_idx], row, schema.d_col);
    if (d_raw != 0.0 && d_raw != 1.0) {
      throw DataError("treatment column must be 0/1 at data row " +
                      std::to_string(row));
    }
    d_vals.push_back(static_cast<int>(d_raw));
    z_vals.push_back(parse_number(fields[z_idx], row, schema.z_col));
    if (have_pair) {
      const double post = parse_number(fields[post_idx], row, schema.y_post_col);
      const double pre = parse_number(fields[pre_idx], row, schema.y_pre_col);
      dy_vals.push_back(post - pre);
    } else {
      dy_vals.push_back(parse_number(fields[dy_idx], row, schema.dy_col));
    }
    for (std::size_t j = 0; j < p; ++j) {
      x_vals.push_back(parse_number(fields[x_idx[j]], row, x_names[j]));
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(dy_vals.size());
  if (n == 0) throw DataError("csv file has no data rows: " + path);

  Eigen::VectorXd dy = Eigen::Map<Eigen::VectorXd>(dy_vals.data(), n);
  Eigen::VectorXd z = Eigen::Map<Eigen::VectorXd>(z_vals.data(), n);
  Eigen::VectorXi d = Eigen::Map<Eigen::VectorXi>(d_vals.data(), n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x(i, static_cast<Eigen::Index>(j)) = x_vals[static_cast<std::size_t>(i) * p + j];
    }
  }
  return Sample::create(std::move(dy), std::move(d), std::move(x), std::move(z));
}

void write_csv(const std::string& path, const Sample& sample) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot open csv file for writing: " + path);
  std::fputs("d,dy,z", f);
  for (Eigen::Index j = 0; j < sample.p(); ++j) {
    std::fprintf(f, ",x%lld", static_cast<long long>(j + 1));
  }
  std::fputc('\n', f);
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    std::fprintf(f, "%d,%.17g,%.17g", sample.d[i], sample.dy[i], sample.z[i]);
    for (Eigen::Index j = 0; j < sample.p(); ++j) {
      std::fprintf(f, ",%.17g", sample.x(i, j));
    }
    std::fputc('\n', f);
  }
  std::fclose(f);
}

}  // namespace drdid
