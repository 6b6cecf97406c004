#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace ringflow::quad {

/// Fixed-order Gauss-Legendre rule on [a, b]; exact for polynomials of degree < 40.
template <typename Fn>
double gauss_legendre(Fn&& fn, double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss<double, 20>::integrate(fn, a, b);
}

/// Adaptive 15-point Gauss-Kronrod on [a, b]; `rel_tol` is relative to the L1 norm.
template <typename Fn>
double adaptive(Fn&& fn, double a, double b, double rel_tol = 1e-14) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(fn, a, b, 15, rel_tol);
}

}  // namespace ringflow::quad
