#pragma once

#include <algorithm>
#include <cmath>

#include "iclflow/types.hpp"

namespace iclflow {

// Families of equilibria of the flows in this library.
//  O: the origin.
//  A: equilibria carrying a nonzero readout/query pairing (the attracting
//     family on each conserved-quantity leaf, plus its swap-symmetric twin
//     in the scalar system).
//  B: equilibria whose attracting-family pairing vanishes (saddle-type).
enum class CriticalKind { O, A, B };

// Stability summary derived from the eigenvalues of the flow linearization.
//  attractor_on_leaf: a single neutral direction (transverse to the leaves
//    of the conserved quantity), every other eigenvalue negative.
//  degenerate_saddle: unstable and stable directions present alongside a
//    multi-dimensional neutral subspace.
//  saddle: unstable and stable directions with at most one neutral direction.
enum class Classification {
  attractor_on_leaf,
  degenerate_saddle,
  saddle,
  unrecognized,
};

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::O: return "O";
    case CriticalKind::A: return "A";
    case CriticalKind::B: return "B";
  }
  return "?";
}

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::attractor_on_leaf: return "attractor_on_leaf";
    case Classification::degenerate_saddle: return "degenerate_saddle";
    case Classification::saddle: return "saddle";
    case Classification::unrecognized: return "unrecognized";
  }
  return "?";
}

// Classifies a spectrum.  Eigenvalues within 1e-8 * max(1, spectral radius)
// of zero count as neutral.
inline Classification classify(const Vec& eigenvalues,
                               int* zero_multiplicity = nullptr) {
  double radius = 0.0;
  for (int i = 0; i < eigenvalues.size(); ++i)
    radius = std::max(radius, std::abs(eigenvalues[i]));
  const double zero_tol = 1e-8 * std::max(1.0, radius);
  int zeros = 0, pos = 0, neg = 0;
  for (int i = 0; i < eigenvalues.size(); ++i) {
    const double mu = eigenvalues[i];
    if (std::abs(mu) <= zero_tol)
      ++zeros;
    else if (mu > 0.0)
      ++pos;
    else
      ++neg;
  }
  if (zero_multiplicity) *zero_multiplicity = zeros;
  if (pos == 0 && zeros == 1 && neg > 0) return Classification::attractor_on_leaf;
  if (pos > 0 && neg > 0 && zeros > 1) return Classification::degenerate_saddle;
  if (pos > 0 && neg > 0) return Classification::saddle;
  return Classification::unrecognized;
}

}  // namespace iclflow
