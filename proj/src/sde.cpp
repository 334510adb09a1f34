#include "twodsys/sde.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "twodsys/random.hpp"

namespace twodsys {

Eigen::Matrix2d psd_sqrt(const Eigen::Matrix2d& m) {
  const Eigen::Matrix2d sym = (m + m.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sym);
  const double tol = 1e-12 * (std::abs(sym(0, 0)) + std::abs(sym(1, 1)));
  Eigen::Vector2d values = eig.eigenvalues();
  for (int i = 0; i < 2; ++i) {
    if (values(i) < -tol) {
      throw InvalidSystem("psd_sqrt: matrix has a negative eigenvalue");
    }
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal();
}

Path simulate(const SystemSpecd& spec, const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.total_time > 0.0) || !(cfg.burn_in >= 0.0) ||
      !std::isfinite(cfg.total_time) || !std::isfinite(cfg.burn_in)) {
    throw ConfigError("simulate: need dt > 0, total_time > 0, burn_in >= 0");
  }
  detail::require_stable(spec);
  if (!(cfg.dt * spec.trace_rate() < 0.1)) {
    throw ConfigError("simulate: dt * (A + D) must be < 0.1, got " +
                      std::to_string(cfg.dt * spec.trace_rate()));
  }
  const Eigen::Matrix2d noise_root = psd_sqrt(spec.K);
  const Eigen::Matrix2d step = Eigen::Matrix2d::Identity() + cfg.dt * spec.drift();
  const Eigen::Matrix2d kick = std::sqrt(cfg.dt) * noise_root;

  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> normal;
  auto draw = [&] {
    const double a = normal(rng);
    const double b = normal(rng);
    return Eigen::Vector2d(a, b);
  };

  Eigen::Vector2d x;
  if (cfg.initial_state) {
    x = *cfg.initial_state;
  } else {
    x = psd_sqrt(stationary_covariance(spec)) * draw();
  }
  const auto burn_steps = static_cast<Eigen::Index>(std::llround(cfg.burn_in / cfg.dt));
  for (Eigen::Index i = 0; i < burn_steps; ++i) {
    x = step * x + kick * draw();
  }

  const auto steps = static_cast<Eigen::Index>(std::llround(cfg.total_time / cfg.dt));
  Path path(2, steps + 1);
  path.col(0) = x;
  for (Eigen::Index i = 1; i <= steps; ++i) {
    x = step * x + kick * draw();
    path.col(i) = x;
  }
  return path;
}

std::vector<AutocovPoint> empirical_autocov(std::span<const double> path, double dt,
                                            double max_lag, int batches) {
  if (!(dt > 0.0) || !(max_lag >= 0.0) || batches < 2) {
    throw ConfigError("empirical_autocov: need dt > 0, max_lag >= 0, batches >= 2");
  }
  const auto n = static_cast<Eigen::Index>(path.size());
  if (!(static_cast<double>(n) * dt > 10.0 * max_lag) || n < 2 * batches) {
    throw InsufficientData("empirical_autocov: path length * dt must exceed 10 * max_lag");
  }
  const Eigen::Map<const Eigen::VectorXd> x(path.data(), n);
  const Eigen::VectorXd centred = x.array() - x.mean();
  const auto max_steps = static_cast<Eigen::Index>(std::floor(max_lag / dt + 1e-9));
  const Eigen::Index batch_len = n / batches;
  if (batch_len <= max_steps) {
    throw InsufficientData("empirical_autocov: batches shorter than max_lag");
  }

  std::vector<AutocovPoint> out;
  out.reserve(static_cast<std::size_t>(max_steps + 1));
  Eigen::VectorXd batch_est(batches);
  for (Eigen::Index lag = 0; lag <= max_steps; ++lag) {
    const Eigen::Index m = n - lag;
    const double full =
        centred.head(m).dot(centred.segment(lag, m)) / static_cast<double>(n);
    for (int b = 0; b < batches; ++b) {
      const Eigen::Index start = b * batch_len;
      const Eigen::Index len = batch_len - lag;
      batch_est(b) = centred.segment(start, len).dot(centred.segment(start + lag, len)) /
                     static_cast<double>(batch_len);
    }
    const double spread =
        (batch_est.array() - batch_est.mean()).square().sum() / (batches - 1);
    out.push_back({static_cast<double>(lag) * dt, full, std::sqrt(spread / batches)});
  }
  return out;
}

}  // namespace twodsys
