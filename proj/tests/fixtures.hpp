#pragma once

#include "luenid/ltisys.hpp"
#include "luenid/observer.hpp"

namespace luenid::testing {

// Third-order benchmark plant used across the suites.
inline StateSpace benchmark_plant() {
  StateSpace sys;
  sys.A.resize(3, 3);
  sys.A << -2.31, -0.17, -0.16,
           -0.17, -1.02, 0.04,
           -0.15, 0.04, -0.26;
  sys.B.resize(3);
  sys.B << 0.0, 0.88, 0.0;
  sys.C.resize(3);
  sys.C << 1.18, -0.78, -0.96;
  return sys;
}

// Characteristic polynomial and numerator of the benchmark plant, worked out
// in exact rational arithmetic.
inline CanonicalTheta benchmark_theta() {
  Vector a(3), b(3);
  a << 3.59, 3.1675, 0.574814;
  b << -0.6864, -1.974368, -0.5479232;
  return {a, b};
}

inline Vector benchmark_markov() {
  Vector m(3);
  m << -0.6864, 0.489808, -0.13216192;
  return m;
}

// Plant eigenvalues, ascending (30-digit root finding).
inline Vector benchmark_eigenvalues() {
  Vector e(3);
  e << -2.342628009303279342, -1.0026487695362775469, -0.24472322116044311111;
  return e;
}

inline ObserverSpec benchmark_observer(double k) {
  ObserverSpec spec;
  spec.lambda_tilde = uniform_lambda_tilde(11, 0.1);
  spec.k = k;
  spec.n = 3;
  return spec;
}

}  // namespace luenid::testing
