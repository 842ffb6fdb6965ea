#pragma once

#include "nnet/error.hpp"
#include "nnet/scalar.hpp"

namespace nnet {

inline BigInt factorial(unsigned k) {
  BigInt out = 1;
  for (unsigned i = 2; i <= k; ++i) out *= i;
  return out;
}

inline BigInt binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  BigInt out = 1;
  for (unsigned i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

namespace detail {
inline void require_at_least_three(unsigned n) {
  if (n < 3) throw InputError("counting identities need n >= 3");
}
}  // namespace detail

// Distinct circular orderings of n taxa up to rotation and reflection.
inline BigInt count_distinct_orderings(unsigned n) {
  detail::require_at_least_three(n);
  return factorial(n - 1) / 2;
}

// Catalan number C_{n-2}: triangulations of an n-gon.
inline BigInt count_associahedron_vertices(unsigned n) {
  detail::require_at_least_three(n);
  return binomial(2 * n - 4, n - 2) / (n - 1);
}

// Distinct (ordering, tree) outputs the agglomeration can produce.
inline BigInt count_nnet_outputs(unsigned n) {
  detail::require_at_least_three(n);
  return factorial(2 * n - 5) / factorial(n - 3);
}

}  // namespace nnet
