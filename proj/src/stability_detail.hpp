#pragma once

// Shared assembly helpers for the stability builders.

#include "delaycert/stability.hpp"

namespace delaycert::stability::detail {

using poly::LinExpr;
using poly::LMatrix;
using poly::LPoly;
using poly::Rational;
using poly::RMatrix;
using poly::RPoly;

LMatrix at(const LMatrix& m, int v, const Rational& value);
LMatrix diff(const LMatrix& m, int v);
/// R(value, s): first argument fixed, second renamed to theta.
LMatrix kernel_trace(const LMatrix& r, int theta, int omega, const Rational& value);
LMatrix identity_times(std::size_t n, const LinExpr& e);
LMatrix add_identity(const LMatrix& m, const LinExpr& e);
/// Fresh 1x1 PSD block standing for the margin.
LinExpr margin_variable(Build& b);
/// Trace normalization sum_blocks tr(X) + slack = 1 and objective max margin.
void finalize(Build& b, double scale);

}  // namespace delaycert::stability::detail
