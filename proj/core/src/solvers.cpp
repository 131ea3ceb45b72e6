#include "regpoison/solvers.hpp"

#include "regpoison/error.hpp"
#include "regpoison/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>
#include <utility>

namespace regpoison::solvers {

namespace {

constexpr double kSingularRcond = 1e-15;

Eigen::RowVectorXd column_means(const Eigen::MatrixXd& x) { return x.colwise().mean(); }

Eigen::VectorXd linear_residuals(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LinearParams& p) {
  return (y - x * p.weights).array() - p.intercept;
}

double median_in_place(std::vector<double>& v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), mid));
  }
  return m;
}

}  // namespace

LinearParams ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha) {
  const Eigen::RowVectorXd mean_x = column_means(x);
  const double mean_y = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - mean_x;
  const Eigen::VectorXd yc = y.array() - mean_y;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < kSingularRcond) {
    fail(ErrorCode::SingularSystem, "ridge normal equations are singular (alpha=" + std::to_string(alpha) + ")");
  }
  LinearParams out;
  out.weights = llt.solve(xc.transpose() * yc);
  out.intercept = mean_y - mean_x.dot(out.weights);
  return out;
}

double soft_threshold(double value, double threshold) noexcept {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

CoordinateDescentResult elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                                    double l1_ratio, double tol, std::size_t max_sweeps) {
  const auto n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd mean_x = column_means(x);
  const double mean_y = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - mean_x;
  const Eigen::VectorXd norms = xc.colwise().squaredNorm().transpose();

  const double l1 = n * alpha * l1_ratio;
  const double l2 = n * alpha * (1.0 - l1_ratio);

  CoordinateDescentResult out;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd residual = y.array() - mean_y;
  for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < xc.cols(); ++j) {
      const double denom = norms[j] + l2;
      const double old = w[j];
      const double rho = xc.col(j).dot(residual) + norms[j] * old;
      const double updated = denom > 0.0 ? soft_threshold(rho, l1) / denom : 0.0;
      if (updated != old) {
        residual.noalias() -= (updated - old) * xc.col(j);
        w[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    if (max_change < tol) {
      out.converged = true;
      break;
    }
  }
  out.sweeps = std::min(out.sweeps, max_sweeps);
  out.params.weights = std::move(w);
  out.params.intercept = mean_y - mean_x.dot(out.params.weights);
  return out;
}

double huber_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LinearParams& params, double alpha,
                       double threshold) {
  const Eigen::VectorXd r = linear_residuals(x, y, params);
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double a = std::abs(r[i]);
    total += a <= threshold ? 0.5 * a * a : threshold * a - 0.5 * threshold * threshold;
  }
  return total + 0.5 * alpha * params.weights.squaredNorm();
}

HuberResult huber_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double threshold,
                       const LinearParams& init, double tol, std::size_t max_iterations) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd design(n, d + 1);
  design.leftCols(d) = x;
  design.col(d).setOnes();

  Eigen::VectorXd theta(d + 1);
  theta.head(d) = init.weights;
  theta[d] = init.intercept;

  HuberResult out;
  out.threshold = threshold;
  out.params = init;
  out.objective_trace.push_back(huber_objective(x, y, init, alpha, threshold));

  Eigen::VectorXd weights(n);
  for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
    const Eigen::VectorXd r = y - design * theta;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::abs(r[i]);
      weights[i] = a <= threshold ? 1.0 : threshold / a;
    }
    Eigen::MatrixXd normal = design.transpose() * weights.asDiagonal() * design;
    normal.diagonal().head(d).array() += alpha;
    const Eigen::VectorXd rhs = design.transpose() * weights.cwiseProduct(y);
    const Eigen::VectorXd next = normal.ldlt().solve(rhs);
    const double change = (next - theta).cwiseAbs().maxCoeff();
    theta = next;
    out.params.weights = theta.head(d);
    out.params.intercept = theta[d];
    out.objective_trace.push_back(huber_objective(x, y, out.params, alpha, threshold));
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, max_iterations);
  return out;
}

double robust_scale(const Eigen::VectorXd& residuals) {
  if (residuals.size() == 0) return 1e-9;
  std::vector<double> v(residuals.data(), residuals.data() + residuals.size());
  const double med = median_in_place(v);
  for (auto& e : v) e = std::abs(e - med);
  return std::max(1.4826 * median_in_place(v), 1e-9);
}

HuberResult huber(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double delta, double tol,
                  std::size_t max_iterations) {
  const LinearParams start = ridge(x, y, alpha);
  const double scale0 = robust_scale(linear_residuals(x, y, start));
  const HuberResult first = huber_irls(x, y, alpha * scale0, delta * scale0, start, tol, max_iterations);
  const double scale1 = robust_scale(linear_residuals(x, y, first.params));
  HuberResult second = huber_irls(x, y, alpha * scale1, delta * scale1, first.params, tol, max_iterations);
  second.iterations += first.iterations;
  second.converged = second.converged && first.converged;
  return second;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd k = -2.0 * a * b.transpose();
  k.colwise() += na;
  k.rowwise() += nb.transpose();
  return (-gamma * k.array().max(0.0)).exp().matrix();
}

KernelParams kernel_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double gamma) {
  KernelParams out;
  out.gamma = gamma;
  out.offset = y.mean();
  out.support = x;
  Eigen::MatrixXd k = rbf_kernel(x, x, gamma);
  k.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success || llt.rcond() < kSingularRcond) {
    fail(ErrorCode::SingularSystem, "kernel system is singular (alpha=" + std::to_string(alpha) + ")");
  }
  out.dual = llt.solve((y.array() - out.offset).matrix());
  return out;
}

double svr_dual_objective(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& centered_y,
                          const Eigen::VectorXd& beta, double tube) {
  return -0.5 * beta.dot(kernel * beta) + beta.dot(centered_y) - tube * beta.lpNorm<1>();
}

SvrResult svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double tube, double gamma,
              std::uint64_t seed, double tol, std::size_t max_sweeps) {
  const Eigen::Index n = x.rows();
  SvrResult out;
  out.params.gamma = gamma;
  out.params.offset = y.mean();
  out.params.support = x;

  const Eigen::MatrixXd k = rbf_kernel(x, x, gamma);
  const Eigen::VectorXd yc = y.array() - out.params.offset;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);  // K * beta

  const auto dual_value = [&] { return -0.5 * beta.dot(f) + beta.dot(yc) - tube * beta.lpNorm<1>(); };
  out.dual_trace.push_back(0.0);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
    std::shuffle(order.begin(), order.end(), rng);
    double max_step = 0.0;
    for (const Eigen::Index i : order) {
      const double kii = k(i, i);
      const double others = f[i] - kii * beta[i];
      const double updated = std::clamp(soft_threshold(yc[i] - others, tube) / kii, -c, c);
      const double step = updated - beta[i];
      if (step != 0.0) {
        f.noalias() += step * k.col(i);
        beta[i] = updated;
        max_step = std::max(max_step, std::abs(step) * kii);
      }
    }
    out.dual_trace.push_back(dual_value());
    if (max_step < tol) {
      out.converged = true;
      break;
    }
  }
  out.sweeps = std::min(out.sweeps, max_sweeps);
  out.params.dual = std::move(beta);
  return out;
}

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd hidden = x * params.hidden_weights.transpose();
  hidden.rowwise() += params.hidden_bias.transpose();
  return (hidden.array().tanh().matrix() * params.output_weights).array() + params.output_bias;
}

MlpParams mlp_init(std::size_t inputs, std::size_t hidden, double output_bias, std::uint64_t seed) {
  Rng rng(seed);
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto d = static_cast<Eigen::Index>(inputs);
  const double a = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
  const double b = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  std::uniform_real_distribution<double> ua(-a, a);
  std::uniform_real_distribution<double> ub(-b, b);
  MlpParams p;
  p.hidden_weights.resize(h, d);
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.hidden_weights(i, j) = ua(rng);
  }
  p.hidden_bias = Eigen::VectorXd::Zero(h);
  p.output_weights.resize(h);
  for (Eigen::Index i = 0; i < h; ++i) p.output_weights[i] = ub(rng);
  p.output_bias = output_bias;
  return p;
}

namespace {

/// Gradient of (1/2b) sum r^2 + (decay / 2)(|W|^2 + |v|^2) over the rows in `x`.
double batch_gradient(const MlpParams& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double decay,
                      MlpParams& grad, Eigen::MatrixXd& act) {
  const auto b = static_cast<double>(x.rows());
  act.noalias() = x * p.hidden_weights.transpose();
  act.rowwise() += p.hidden_bias.transpose();
  act = act.array().tanh();
  const Eigen::VectorXd r = ((act * p.output_weights).array() + p.output_bias - y.array()).matrix();
  const Eigen::VectorXd dout = r / b;

  grad.output_weights.noalias() = act.transpose() * dout;
  grad.output_weights += decay * p.output_weights;
  grad.output_bias = dout.sum();
  // act <- dL/dz = (dout w') .* (1 - tanh^2)
  act = ((dout * p.output_weights.transpose()).array() * (1.0 - act.array().square())).matrix();
  grad.hidden_weights.noalias() = act.transpose() * x;
  grad.hidden_weights += decay * p.hidden_weights;
  grad.hidden_bias = act.colwise().sum().transpose();
  return 0.5 * r.squaredNorm() / b +
         0.5 * decay * (p.hidden_weights.squaredNorm() + p.output_weights.squaredNorm());
}

}  // namespace

double mlp_objective(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                     MlpParams* gradient) {
  const double decay = alpha / static_cast<double>(x.rows());
  if (gradient) {
    Eigen::MatrixXd act;
    return batch_gradient(params, x, y, decay, *gradient, act);
  }
  const Eigen::VectorXd r = mlp_forward(params, x) - y;
  return 0.5 * r.squaredNorm() / static_cast<double>(x.rows()) +
         0.5 * decay * (params.hidden_weights.squaredNorm() + params.output_weights.squaredNorm());
}

namespace {

// Per-column mean and spread; constant columns keep unit spread.
std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> column_moments(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd spread = ((x.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < spread.size(); ++j) {
    if (!(spread[j] > 1e-12)) spread[j] = 1.0;
  }
  return {mean, spread};
}

}  // namespace

MlpResult mlp_train(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y_in, const MlpTraining& config) {
  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(x_in.cols());
  Eigen::RowVectorXd x_spread = Eigen::RowVectorXd::Ones(x_in.cols());
  double y_mean = 0.0;
  double y_spread = 1.0;
  if (config.standardize && x_in.rows() > 0) {
    std::tie(x_mean, x_spread) = column_moments(x_in);
    const auto [ym, ys] = column_moments(y_in);
    y_mean = ym[0];
    y_spread = ys[0];
  }
  const Eigen::MatrixXd x = (x_in.rowwise() - x_mean).array().rowwise() / x_spread.array();
  const Eigen::VectorXd y = (y_in.array() - y_mean) / y_spread;

  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  MlpResult out;
  out.params = mlp_init(static_cast<std::size_t>(d), config.hidden, y.mean(), config.seed);
  const MlpParams initial = out.params;
  MlpParams& p = out.params;

  MlpParams velocity;
  velocity.hidden_weights = Eigen::MatrixXd::Zero(p.hidden_weights.rows(), p.hidden_weights.cols());
  velocity.hidden_bias = Eigen::VectorXd::Zero(p.hidden_bias.size());
  velocity.output_weights = Eigen::VectorXd::Zero(p.output_weights.size());
  MlpParams grad = velocity;

  const double decay = config.alpha / static_cast<double>(n);
  const auto batch = static_cast<Eigen::Index>(std::max<std::size_t>(1, std::min<std::size_t>(config.batch_size, n)));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(splitmix64(config.seed));

  Eigen::MatrixXd xb(batch, d);
  Eigen::VectorXd yb(batch);
  Eigen::MatrixXd act;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min(batch, n - start);
      if (xb.rows() != m) {
        xb.resize(m, d);
        yb.resize(m);
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x.row(src);
        yb[i] = y[src];
      }
      epoch_loss += static_cast<double>(m) * batch_gradient(p, xb, yb, decay, grad, act);
      velocity.hidden_weights = config.momentum * velocity.hidden_weights - config.learning_rate * grad.hidden_weights;
      velocity.hidden_bias = config.momentum * velocity.hidden_bias - config.learning_rate * grad.hidden_bias;
      velocity.output_weights = config.momentum * velocity.output_weights - config.learning_rate * grad.output_weights;
      velocity.output_bias = config.momentum * velocity.output_bias - config.learning_rate * grad.output_bias;
      p.hidden_weights += velocity.hidden_weights;
      p.hidden_bias += velocity.hidden_bias;
      p.output_weights += velocity.output_weights;
      p.output_bias += velocity.output_bias;
    }
    out.epochs_run = epoch + 1;
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) break;
    stale = epoch_loss > best - config.tol ? stale + 1 : 0;
    best = std::min(best, epoch_loss);
    if (stale >= config.patience) {
      out.converged = true;
      break;
    }
  }
  out.finite = p.hidden_weights.allFinite() && p.hidden_bias.allFinite() && p.output_weights.allFinite() &&
               std::isfinite(p.output_bias);
  if (!out.finite) {
    out.params = initial;
    out.converged = false;
  }
  // Fold the standardization back so the parameters act on raw inputs.
  p.hidden_weights = (p.hidden_weights.array().rowwise() / x_spread.array()).matrix();
  p.hidden_bias -= p.hidden_weights * x_mean.transpose();
  p.output_weights *= y_spread;
  p.output_bias = p.output_bias * y_spread + y_mean;
  return out;
}

}  // namespace regpoison::solvers
