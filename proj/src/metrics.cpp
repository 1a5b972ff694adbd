#include "d3gd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "d3gd/didgd.hpp"

namespace d3gd {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

}  // namespace

const char* IterationRecord::csv_header() {
  return "k,stationarity,disagreement,weighted_consensus_error,lyapunov,j_value,grad_f_at_avg,"
         "y_deviation,spectral_gap";
}

std::string IterationRecord::csv_row() const {
  std::string row = std::to_string(k);
  for (double v : {stationarity, disagreement, weighted_consensus_error, lyapunov, j_value,
                   grad_f_at_avg, y_deviation}) {
    row += ',';
    row += fmt(v);
  }
  row += ',';
  if (spectral_gap_k) row += fmt(*spectral_gap_k);
  return row;
}

void write_records_csv(std::ostream& out, std::span<const IterationRecord> records) {
  out << IterationRecord::csv_header() << '\n';
  for (const auto& r : records) out << r.csv_row() << '\n';
}

void write_records_csv_file(const std::string& path, std::span<const IterationRecord> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_records_csv(out, records);
}

std::vector<IterationRecord> read_records_csv(std::istream& in) {
  std::vector<IterationRecord> records;
  std::string line;
  if (!std::getline(in, line)) return records;
  if (line != IterationRecord::csv_header())
    throw std::runtime_error("records csv: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    IterationRecord r;
    auto next = [&]() {
      if (!std::getline(ls, cell, ',')) throw std::runtime_error("records csv: short row");
      return cell;
    };
    r.k = std::stoi(next());
    r.stationarity = std::stod(next());
    r.disagreement = std::stod(next());
    r.weighted_consensus_error = std::stod(next());
    r.lyapunov = std::stod(next());
    r.j_value = std::stod(next());
    r.grad_f_at_avg = std::stod(next());
    r.y_deviation = std::stod(next());
    if (std::getline(ls, cell, ',') && !cell.empty()) r.spectral_gap_k = std::stod(cell);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<IterationRecord> read_records_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records csv: " + path);
  return read_records_csv(in);
}

Eigen::VectorXd weighted_average(const NetworkState& state, const Eigen::VectorXd& pi) {
  if (pi.size() != state.Theta.rows())
    throw std::invalid_argument("weighted_average: pi length mismatch");
  return state.Theta.transpose() * pi;
}

IterationRecord compute_record(const NetworkState& state, const Problem& problem,
                               const Eigen::VectorXd& pi, double gamma_k,
                               const LyapunovConfig& lyap, const DesignInputs* design) {
  const int n = state.num_agents();
  IterationRecord rec;
  rec.k = state.k;

  double stat = 0.0;
  for (int i = 0; i < n; ++i)
    stat += problem.average_gradient(state.Theta.row(i).transpose()).squaredNorm();
  rec.stationarity = stat / n;

  // (1/n^2) sum_ij ||theta_i - theta_j||^2 = (2/n) sum_i ||theta_i - mean||^2
  const Eigen::RowVectorXd mean = state.Theta.colwise().mean();
  rec.disagreement = 2.0 * (state.Theta.rowwise() - mean).squaredNorm() / n;

  const Eigen::VectorXd theta_hat = weighted_average(state, pi);
  rec.weighted_consensus_error =
      (state.Theta.rowwise() - theta_hat.transpose()).squaredNorm();

  rec.grad_f_at_avg = problem.average_gradient(theta_hat).squaredNorm();
  rec.lyapunov = problem.average_value(theta_hat) +
                 lyap.coefficient * gamma_k * lyap.L_hat * lyap.L_hat /
                     (n * lyap.rho) * rec.weighted_consensus_error;

  if (design != nullptr) {
    const DesignContext ctx{state.Theta, state.GradK, state.Y.diagonal(),
                            pi,          gamma_k,     design->delta,
                            design->A0};
    rec.j_value = conservative_design_value(design->Abar, ctx);
  } else {
    rec.j_value = std::numeric_limits<double>::quiet_NaN();
  }

  rec.y_deviation =
      spectral_norm(state.Y - Eigen::VectorXd::Ones(n) * pi.transpose());
  return rec;
}

std::vector<Eigen::MatrixXd> y_trajectory(const MixingMatrix& A, int T) {
  std::vector<Eigen::MatrixXd> traj;
  traj.reserve(static_cast<std::size_t>(T) + 1);
  traj.push_back(Eigen::MatrixXd::Identity(A.size(), A.size()));
  for (int k = 0; k < T; ++k) traj.push_back(A.weights() * traj.back());
  return traj;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need at least two points");
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    sxx += (x[t] - mx) * (x[t] - mx);
    sxy += (x[t] - mx) * (y[t] - my);
    syy += (y[t] - my) * (y[t] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate x values");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double resid = y[t] - (fit.intercept + fit.slope * x[t]);
    rss += resid * resid;
  }
  fit.r2 = (syy == 0.0) ? 1.0 : 1.0 - rss / syy;
  fit.slope_stderr = (x.size() > 2) ? std::sqrt(rss / (m - 2.0) / sxx) : 0.0;
  return fit;
}

RateBoundConstants rate_bound_constants(const Eigen::VectorXd& pi, double rho, double L_hat,
                                   const std::vector<Eigen::MatrixXd>& Y_trajectory) {
  const int n = static_cast<int>(pi.size());
  RateBoundConstants out;
  out.rho = rho;
  for (int i = 0; i < n; ++i) {
    out.C_pi1 += (1.0 - pi(i)) * (1.0 - pi(i)) + (n - 1) * pi(i) * pi(i);
    out.C_pi2 += 1.0 / (pi(i) * pi(i));
  }

  // decay fit of ||Y^k - 1 pi^T||_2
  std::vector<double> ks, logs;
  const Eigen::MatrixXd limit = Eigen::VectorXd::Ones(n) * pi.transpose();
  std::vector<double> devs;
  devs.reserve(Y_trajectory.size());
  for (std::size_t k = 0; k < Y_trajectory.size(); ++k) {
    const double dev = spectral_norm(Y_trajectory[k] - limit);
    devs.push_back(dev);
    if (k >= 1 && dev > 1e-13) {
      ks.push_back(static_cast<double>(k));
      logs.push_back(std::log(dev));
    }
  }
  if (ks.size() >= 3) {
    const LineFit fit = fit_line(ks, logs);
    out.lambda_hat = std::exp(fit.slope);
    out.C_hat = std::exp(fit.intercept);
    out.fit_r2 = fit.r2;
    out.reliable = fit.r2 >= 0.9;
  } else {
    // deviation already at the floor everywhere; nothing to fit
    out.lambda_hat = 0.0;
    out.C_hat = 0.0;
    out.fit_r2 = 1.0;
    out.reliable = true;
  }

  // smallest C0 with ||diag(Y^k)^{-1}||_F^2 <= C_pi2 + C0 lambda^k
  for (std::size_t k = 0; k < Y_trajectory.size(); ++k) {
    double inv_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double yii = Y_trajectory[k](i, i);
      if (yii <= 0.0) throw std::invalid_argument("rate_bound_constants: nonpositive Y diagonal");
      inv_sq += 1.0 / (yii * yii);
    }
    const double diff = inv_sq - out.C_pi2;
    if (diff <= 0.0) continue;
    const double weight = (k == 0) ? 1.0 : std::pow(out.lambda_hat, static_cast<double>(k));
    if (weight > 1e-300) out.C0_hat = std::max(out.C0_hat, diff / weight);
  }

  const double denom = out.C_pi1 * (out.C_pi2 + out.C0_hat);
  out.gamma_cap = (denom > 0.0 && L_hat > 0.0)
                      ? n * rho / (2.0 * L_hat * std::sqrt(denom))
                      : std::numeric_limits<double>::infinity();
  return out;
}

RateCheckResult rate_check(const Problem& problem, const MixingMatrix& A, double c,
                           std::span<const int> T_grid, const InitRule& init,
                           const LyapunovConfig& lyap) {
  RateCheckResult out;
  for (int T : T_grid) {
    if (T < 1) throw std::invalid_argument("rate_check: T must be positive");
    const double gamma = c / std::cbrt(static_cast<double>(T));
    RecordingConfig recording;
    recording.lyapunov = lyap;
    const Trajectory traj =
        run_didgd(problem, A, StepSchedule::constant(gamma), T, recording, init);
    if (traj.diverged) {
      out.excluded_T.push_back(T);
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : traj.records) best = std::min(best, r.stationarity);
    out.points.push_back({T, gamma, best});
  }
  if (out.points.size() < 2)
    throw std::invalid_argument("rate_check: insufficient points (need >= 2 non-diverged runs)");
  std::vector<double> x, y;
  for (const auto& p : out.points) {
    x.push_back(std::log(static_cast<double>(p.T)));
    y.push_back(std::log(std::max(p.min_stationarity, 1e-300)));
  }
  const LineFit fit = fit_line(x, y);
  out.slope = fit.slope;
  out.slope_stderr = fit.slope_stderr;
  out.intercept = fit.intercept;
  return out;
}

DescentCheckResult descent_check(std::span<const IterationRecord> records,
                                 const StepSchedule& gamma, const LyapunovConfig& lyap, int n) {
  if (records.size() < 2) throw std::invalid_argument("descent_check: need >= 2 records");
  for (std::size_t t = 0; t + 1 < records.size(); ++t)
    if (records[t + 1].k != records[t].k + 1)
      throw std::invalid_argument("descent_check: records must be at consecutive iterations");

  const double L2 = lyap.L_hat * lyap.L_hat;
  const double rho = lyap.rho;
  std::vector<double> residuals, ratios;
  for (std::size_t t = 0; t + 1 < records.size(); ++t) {
    const auto& cur = records[t];
    const auto& nxt = records[t + 1];
    const double g = gamma.at(cur.k);
    const double r = nxt.lyapunov - cur.lyapunov + (g / 4.0) * cur.grad_f_at_avg +
                     (3.0 * g * L2 * (2.0 - rho) / (n * rho)) * cur.weighted_consensus_error -
                     (3.0 * g * L2 / (n * rho)) * nxt.weighted_consensus_error;
    residuals.push_back(r);
    ratios.push_back(r / (g * g * g));
  }

  // fit the absorbed constant on the first half, evaluate everywhere
  const std::size_t half = std::max<std::size_t>(ratios.size() / 2, 1);
  std::vector<double> head(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(half));
  std::sort(head.begin(), head.end());
  const std::size_t idx = std::min(
      head.size() - 1, static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(head.size()))) - 1);
  const double pct = head[idx];
  DescentCheckResult out;
  out.fitted_c = std::max(pct, 0.0);
  out.checked = static_cast<int>(residuals.size());
  int ok = 0;
  for (std::size_t t = 0; t < residuals.size(); ++t) {
    const double g = gamma.at(records[t].k);
    const double slack =
        1e-12 * (std::abs(records[t].lyapunov) + std::abs(records[t + 1].lyapunov) + 1.0);
    if (residuals[t] <= out.fitted_c * g * g * g + slack) ++ok;
  }
  out.fraction_satisfied = static_cast<double>(ok) / out.checked;
  return out;
}

}  // namespace d3gd
