#pragma once

// Explicit Runge-Kutta integration with dense output.
//
// Both methods store, per accepted step, the five coefficient vectors of
//   y(t0 + th h) = c1 + th (c2 + (1-th) (c3 + th (c4 + (1-th) c5)))
// which is the Dormand-Prince order-4 continuous extension for the adaptive
// pair and the cubic Hermite interpolant (c5 = 0) for fixed-step RK4.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace plantmf {

enum class OdeMethod { rk4_fixed, rk45_adaptive };

struct OdeOptions {
  OdeMethod method = OdeMethod::rk45_adaptive;
  double dt_init = 0.0;  // 0 selects an automatic first step
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::size_t max_steps = 1'000'000;
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

// Called after every accepted step with the step counter, time and a mutable
// view of the new state (observers may clamp roundoff or throw).
using StepObserver = std::function<void(std::size_t step, double t, std::span<double> y)>;

class DenseOutput {
 public:
  DenseOutput() = default;
  explicit DenseOutput(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t segments() const { return t0_.size(); }
  double t_begin() const { return t0_.empty() ? 0.0 : t0_.front(); }
  double t_end() const { return t0_.empty() ? 0.0 : t0_.back() + h_.back(); }

  // Appends one step; coeffs holds 5 * dim values laid out c1..c5.
  void push(double t0, double h, std::span<const double> coeffs);

  // Evaluates every component at t (clamped to the covered range).
  void eval(double t, std::span<double> out) const;
  double eval(double t, std::size_t component) const;

 private:
  std::size_t locate(double t, double& theta) const;

  std::size_t dim_ = 0;
  std::vector<double> t0_;
  std::vector<double> h_;
  std::vector<double> coeffs_;
};

struct OdeResult {
  DenseOutput dense;
  std::vector<double> y_end;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

// Integrates y' = f(t, y) from t0 to t1 (> t0). Throws StepUnderflow when
// the adaptive step collapses or the step budget is exhausted.
OdeResult integrate_ode(const OdeRhs& f, double t0, double t1, std::span<const double> y0,
                        const OdeOptions& opts, const StepObserver& observer = {});

}  // namespace plantmf
