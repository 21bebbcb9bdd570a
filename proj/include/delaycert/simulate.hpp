#pragma once

// Method-of-steps integration of delay equations and quadrature evaluation of
// Lyapunov-Krasovskii functionals along the resulting segments.

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "delaycert/stability.hpp"
#include "delaycert/system.hpp"

namespace delaycert::simulate {

/// Initial history phi(theta), theta in [-tau_K, 0] (seconds).
using History = std::function<Eigen::VectorXd(double)>;

History constant_history(const Eigen::VectorXd& value);
/// Component c is phi[c] evaluated at the symbol "theta".
History polynomial_history(const std::vector<poly::DPoly>& phi);

/// A state segment theta -> x(t + theta) on [-length, 0]. `breaks` are the
/// points where it may fail to be smooth (quadrature cells end there).
struct Segment {
    double length = 0;
    std::function<Eigen::VectorXd(double)> at;
    std::vector<double> breaks;
};

Segment history_segment(const History& phi, double length);

struct Trajectory {
    int n = 0;
    double h = 0;
    double max_delay = 0;
    std::vector<double> t;
    std::vector<Eigen::VectorXd> x, dx;  // samples and right-hand side on the grid
    History history;
    bool blow_up = false;
    double escape_time = std::numeric_limits<double>::quiet_NaN();
    /// max-norm endpoint difference against a run with step 2h, divided by 15.
    double error_estimate = std::numeric_limits<double>::quiet_NaN();

    double t_end() const { return t.empty() ? 0.0 : t.back(); }
    /// x(s) for s in [-max_delay, t_end]: history for s <= 0, cubic Hermite on the grid.
    Eigen::VectorXd at(double s) const;
    /// x_t as a segment of length max_delay.
    Segment segment(double time) const;
    void write_csv(std::ostream& os) const;
};

struct IntegrateOptions {
    double blow_up = 1e8;        // |x|_inf beyond this stops the run
    bool error_estimate = false;  // also integrate with 2h
};

/// Classical RK4 on a uniform grid; delayed arguments come from the history or the
/// dense output of already computed steps. Requires h <= tau_1 and fixed parameters.
Trajectory integrate(const SystemSpec& spec, const History& phi, double t_end, double h,
                     const IntegrateOptions& opts = {});

/// tau_1 / 50 for delay systems, 0.01 for ODEs.
double default_step(const SystemSpec& spec);

/// V(x_t) for a certificate in seconds coordinates. Single integrals use
/// Gauss-Legendre on every cell between breaks; double integrals factor into moments.
double functional_value(const stability::Certificate& cert, const Segment& seg);

struct DecreaseReport {
    int samples = 0;
    double max_increase = 0;     // largest V(t+h) - V(t), relative to V at the first sample
    double worst_violation = 0;  // largest dV/dt + (rate/2)|x|^2r, relative
    int violations = 0;
    bool passed = false;
};

/// Samples V(x_t) on the grid for t >= tau_K and checks monotone decrease and the
/// decay bound dV/dt <= -(decay_rate/2)|x(t)|^(2r) with centred differences.
DecreaseReport decrease_check(const stability::Certificate& cert, const Trajectory& traj, double tolerance);

}  // namespace delaycert::simulate
