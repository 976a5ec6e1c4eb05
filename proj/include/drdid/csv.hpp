#pragma once

#include <string>
#include <vector>

#include "drdid/data_model.hpp"

namespace drdid {

// Column mapping for loading a sample from disk. Covariates are named either
// explicitly via x_cols or discovered by x_prefix in header order. The
// outcome change is read from dy_col, or computed as y_post - y_pre when the
// pair is given instead.
struct CsvSchema {
  std::string d_col = "d";
  std::string z_col = "z";
  std::vector<std::string> x_cols;
  std::string x_prefix = "x";
  std::string dy_col = "dy";
  std::string y_post_col;
  std::string y_pre_col;
};

// Reads a comma-separated file with a header row. Lines starting with '#'
// are skipped. Throws MissingColumn / NonFiniteValue / DataError with the
// offending row and column named.
Sample load_csv(const std::string& path, const CsvSchema& schema);

// Writes columns d,dy,z,x1..xp with full round-trip precision, so
// load_csv(write_csv(s)) reproduces s bitwise.
void write_csv(const std::string& path, const Sample& sample);

}  // namespace drdid
