#include "drdid/data_model.hpp"

#include <cmath>
#include <string>

namespace drdid {

Sample Sample::create(Eigen::VectorXd dy, Eigen::VectorXi d, Eigen::MatrixXd x,
                      Eigen::VectorXd z) {
  const Eigen::Index n = dy.size();
  if (d.size() != n || x.rows() != n || z.size() != n) {
    throw DimensionMismatch("sample arrays disagree on n: dy=" +
                            std::to_string(n) + " d=" + std::to_string(d.size()) +
                            " x=" + std::to_string(x.rows()) +
                            " z=" + std::to_string(z.size()));
  }
  if (n < 4) throw DataError("sample needs at least 4 rows, got " + std::to_string(n));
  if (x.cols() < 1) throw DataError("sample needs at least one x column");
  if (!dy.allFinite() || !x.allFinite() || !z.allFinite()) {
    throw NonFiniteValue("sample contains non-finite values");
  }
  Eigen::Index treated = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d[i] != 0 && d[i] != 1) {
      throw DataError("treatment indicator must be 0/1, row " + std::to_string(i));
    }
    treated += d[i];
  }
  if (treated == 0 || treated == n) {
    throw DegenerateTreatment("sample has a single treatment arm (treated=" +
                              std::to_string(treated) + " of " + std::to_string(n) + ")");
  }
  const double z_min = z.minCoeff();
  const double z_max = z.maxCoeff();
  if (!(z_max > z_min)) throw DegenerateZ("z is constant; sieve basis undefined");
  return Sample{std::move(dy), std::move(d), std::move(x), std::move(z)};
}

OverlapDiagnostics validate_overlap(Eigen::VectorXd& pi_hat, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw ConfigError("overlap epsilon must lie in (0, 0.5), got " +
                      std::to_string(epsilon));
  }
  if (pi_hat.size() == 0) throw DataError("validate_overlap: empty pi_hat");
  if (!pi_hat.allFinite()) throw NonFiniteValue("pi_hat contains non-finite values");
  OverlapDiagnostics diag;
  for (Eigen::Index i = 0; i < pi_hat.size(); ++i) {
    double& v = pi_hat[i];
    if (v < epsilon) {
      v = epsilon;
      ++diag.n_clipped;
    } else if (v > 1.0 - epsilon) {
      v = 1.0 - epsilon;
      ++diag.n_clipped;
    }
  }
  diag.min_pi_hat = pi_hat.minCoeff();
  diag.max_pi_hat = pi_hat.maxCoeff();
  diag.treated_fraction = pi_hat.mean();
  return diag;
}

}  // namespace drdid
