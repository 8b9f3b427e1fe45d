#include "plantmf/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "plantmf/error.hpp"

namespace plantmf {

void DenseOutput::push(double t0, double h, std::span<const double> coeffs) {
  t0_.push_back(t0);
  h_.push_back(h);
  coeffs_.insert(coeffs_.end(), coeffs.begin(), coeffs.end());
}

std::size_t DenseOutput::locate(double t, double& theta) const {
  // Last segment whose start is <= t.
  auto it = std::upper_bound(t0_.begin(), t0_.end(), t);
  std::size_t k = it == t0_.begin() ? 0 : static_cast<std::size_t>(it - t0_.begin()) - 1;
  theta = std::clamp((t - t0_[k]) / h_[k], 0.0, 1.0);
  return k;
}

void DenseOutput::eval(double t, std::span<double> out) const {
  double th = 0.0;
  const std::size_t k = locate(t, th);
  const double th1 = 1.0 - th;
  const double* c = coeffs_.data() + k * 5 * dim_;
  const double* c1 = c;
  const double* c2 = c + dim_;
  const double* c3 = c + 2 * dim_;
  const double* c4 = c + 3 * dim_;
  const double* c5 = c + 4 * dim_;
  for (std::size_t i = 0; i < dim_; ++i) {
    out[i] = c1[i] + th * (c2[i] + th1 * (c3[i] + th * (c4[i] + th1 * c5[i])));
  }
}

double DenseOutput::eval(double t, std::size_t i) const {
  double th = 0.0;
  const std::size_t k = locate(t, th);
  const double th1 = 1.0 - th;
  const double* c = coeffs_.data() + k * 5 * dim_;
  return c[i] + th * (c[dim_ + i] +
                      th1 * (c[2 * dim_ + i] + th * (c[3 * dim_ + i] + th1 * c[4 * dim_ + i])));
}

namespace {

// Dormand-Prince 5(4) tableau with Hairer's dense-output weights.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Workspace {
  explicit Workspace(std::size_t n)
      : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y1(n), err(n), coeffs(5 * n) {}
  std::vector<double> k1, k2, k3, k4, k5, k6, k7, tmp, y1, err, coeffs;
};

double initial_step(const OdeRhs& f, double t0, std::span<const double> y0,
                    std::span<const double> f0, const OdeOptions& o, Workspace& w,
                    std::size_t& evals) {
  // Hairer-Norsett-Wanner starting step heuristic.
  const std::size_t n = y0.size();
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = o.abs_tol + o.rel_tol * std::abs(y0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y0[i] / sk) * (y0[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
  for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y0[i] + h * f0[i];
  f(t0 + h, w.tmp, w.k2);
  ++evals;
  double der2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = o.abs_tol + o.rel_tol * std::abs(y0[i]);
    const double d = (w.k2[i] - f0[i]) / sk;
    der2 += d * d;
  }
  der2 = std::sqrt(der2 / static_cast<double>(n)) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf / static_cast<double>(n)));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min(100.0 * h, h1);
}

}  // namespace

OdeResult integrate_ode(const OdeRhs& f, double t0, double t1, std::span<const double> y0,
                        const OdeOptions& o, const StepObserver& observer) {
  if (!(t1 > t0)) throw DomainError("integrate_ode: t1 must exceed t0");
  const std::size_t n = y0.size();
  OdeResult res;
  res.dense = DenseOutput(n);
  Workspace w(n);
  std::vector<double> y(y0.begin(), y0.end());

  f(t0, y, w.k1);
  ++res.rhs_evals;

  double h = o.dt_init;
  if (o.method == OdeMethod::rk4_fixed) {
    if (!(h > 0.0)) throw DomainError("integrate_ode: rk4-fixed requires dt_init > 0");
  } else if (!(h > 0.0)) {
    h = initial_step(f, t0, y, w.k1, o, w, res.rhs_evals);
  }

  double t = t0;
  bool last_rejected = false;
  std::size_t steps = 0;
  const double span = t1 - t0;

  while (t < t1) {
    if (steps++ >= o.max_steps) {
      throw StepUnderflow("integrate_ode: step budget exhausted at t=" + std::to_string(t));
    }
    double hs = h;
    bool final_step = false;
    if (t + hs >= t1 - 1e-14 * span) {
      hs = t1 - t;
      final_step = true;
    }
    if (hs < 1e-14 * std::max(1.0, std::abs(t))) {
      throw StepUnderflow("integrate_ode: step size underflow at t=" + std::to_string(t));
    }

    if (o.method == OdeMethod::rk4_fixed) {
      for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + 0.5 * hs * w.k1[i];
      f(t + 0.5 * hs, w.tmp, w.k2);
      for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + 0.5 * hs * w.k2[i];
      f(t + 0.5 * hs, w.tmp, w.k3);
      for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + hs * w.k3[i];
      f(t + hs, w.tmp, w.k4);
      for (std::size_t i = 0; i < n; ++i) {
        w.y1[i] = y[i] + hs / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
      }
      const double tn = final_step ? t1 : t + hs;
      if (observer) observer(res.accepted + 1, tn, w.y1);
      f(tn, w.y1, w.k7);
      res.rhs_evals += 4;
      for (std::size_t i = 0; i < n; ++i) {
        const double dy = w.y1[i] - y[i];
        const double b = hs * w.k1[i] - dy;
        w.coeffs[i] = y[i];
        w.coeffs[n + i] = dy;
        w.coeffs[2 * n + i] = b;
        w.coeffs[3 * n + i] = dy - hs * w.k7[i] - b;
        w.coeffs[4 * n + i] = 0.0;
      }
      res.dense.push(t, hs, w.coeffs);
      ++res.accepted;
      t = tn;
      y.swap(w.y1);
      w.k1.swap(w.k7);
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + hs * a21 * w.k1[i];
    f(t + c2 * hs, w.tmp, w.k2);
    for (std::size_t i = 0; i < n; ++i) w.tmp[i] = y[i] + hs * (a31 * w.k1[i] + a32 * w.k2[i]);
    f(t + c3 * hs, w.tmp, w.k3);
    for (std::size_t i = 0; i < n; ++i) {
      w.tmp[i] = y[i] + hs * (a41 * w.k1[i] + a42 * w.k2[i] + a43 * w.k3[i]);
    }
    f(t + c4 * hs, w.tmp, w.k4);
    for (std::size_t i = 0; i < n; ++i) {
      w.tmp[i] = y[i] + hs * (a51 * w.k1[i] + a52 * w.k2[i] + a53 * w.k3[i] + a54 * w.k4[i]);
    }
    f(t + c5 * hs, w.tmp, w.k5);
    for (std::size_t i = 0; i < n; ++i) {
      w.tmp[i] = y[i] + hs * (a61 * w.k1[i] + a62 * w.k2[i] + a63 * w.k3[i] + a64 * w.k4[i] +
                              a65 * w.k5[i]);
    }
    f(t + hs, w.tmp, w.k6);
    for (std::size_t i = 0; i < n; ++i) {
      w.y1[i] = y[i] + hs * (a71 * w.k1[i] + a73 * w.k3[i] + a74 * w.k4[i] + a75 * w.k5[i] +
                             a76 * w.k6[i]);
    }
    const double tn = final_step ? t1 : t + hs;
    f(tn, w.y1, w.k7);
    res.rhs_evals += 6;

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = hs * (e1 * w.k1[i] + e3 * w.k3[i] + e4 * w.k4[i] + e5 * w.k5[i] +
                             e6 * w.k6[i] + e7 * w.k7[i]);
      const double sk = o.abs_tol + o.rel_tol * std::max(std::abs(y[i]), std::abs(w.y1[i]));
      err += (e / sk) * (e / sk);
    }
    err = std::sqrt(err / static_cast<double>(std::max<std::size_t>(n, 1)));
    if (!std::isfinite(err)) err = std::numeric_limits<double>::max();

    if (err <= 1.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double dy = w.y1[i] - y[i];
        const double b = hs * w.k1[i] - dy;
        w.coeffs[i] = y[i];
        w.coeffs[n + i] = dy;
        w.coeffs[2 * n + i] = b;
        w.coeffs[3 * n + i] = dy - hs * w.k7[i] - b;
        w.coeffs[4 * n + i] = hs * (d1 * w.k1[i] + d3 * w.k3[i] + d4 * w.k4[i] + d5 * w.k5[i] +
                                    d6 * w.k6[i] + d7 * w.k7[i]);
      }
      if (observer) {
        observer(res.accepted + 1, tn, w.y1);
      }
      res.dense.push(t, hs, w.coeffs);
      ++res.accepted;
      t = tn;
      y.swap(w.y1);
      w.k1.swap(w.k7);
      double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      h = hs * fac;
      last_rejected = false;
    } else {
      ++res.rejected;
      h = hs * std::max(0.2, 0.9 * std::pow(err, -0.2));
      last_rejected = true;
    }
  }
  res.y_end = std::move(y);
  return res;
}

}  // namespace plantmf
