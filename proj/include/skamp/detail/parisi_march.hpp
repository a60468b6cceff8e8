#pragma once

// Shared marching internals for the backward equation.  The minimizer uses
// these directly so its finite-difference probes can restart from cached rows
// instead of re-marching the whole time axis.

#include <functional>
#include <span>
#include <vector>

#include "skamp/parisi.hpp"

namespace skamp::detail {

struct MarchContext {
    std::vector<double> lines;  // ascending time lines covering [0, 1]
    double x_min = 0.0;
    double dx = 0.0;
    std::size_t nx = 0;
    double s_star = 1.0;    // where the cdf saturates at exactly 1
    std::size_t s_idx = 0;  // index of s_star in `lines`

    std::size_t zero_index() const { return nx / 2; }
    std::size_t line_index(double t) const;  // exact hit expected
};

MarchContext make_march_context(double beta, const ParisiMeasure& mu,
                                const PdeGrid& grid);

// Closed-form row log 2cosh(x) + beta^2 (1-t)/2, valid wherever mu == 1
// above t.
std::vector<double> closed_form_row(double beta, double t, const MarchContext& ctx);

using RowSink = std::function<void(std::size_t line_idx, std::span<const double> row)>;

// Marches `row` (the solution at lines[from_idx]) down to t = 0 under the
// given distribution function, invoking `sink` (if non-null) after each line
// is reached.  Returns phi(0, 0).
double march_phi(double beta, const ParisiMeasure& mu, const MarchContext& ctx,
                 std::size_t from_idx, std::vector<double>& row, const RowSink* sink);

// phi(0,0) for the measure, using the closed-form start at its saturation
// point.  No tables are kept.
double phi_at_zero(double beta, const ParisiMeasure& mu, const PdeGrid& grid);

// Full-axis march from the exact terminal row plus the exact gradient of the
// discrete phi(0,0) with respect to each step's averaged distribution value:
// one backward march recording the slope rows the quadratic term saw, then
// one forward pass of the transposed step (resolvent-transpose solve plus the
// nonlinearity's Jacobian).  d_mu_bar[i] belongs to the step
// [lines[i], lines[i+1]).  Exact to roundoff, so the minimizer's line search
// and stationarity test agree to machine precision.
struct MarchGradient {
    double phi0 = 0.0;
    std::vector<double> d_mu_bar;
};
MarchGradient march_phi_with_gradient(double beta, const ParisiMeasure& mu,
                                      const MarchContext& ctx);

}  // namespace skamp::detail
