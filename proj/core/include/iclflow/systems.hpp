#pragma once

#include "iclflow/d1.hpp"
#include "iclflow/integrate.hpp"
#include "iclflow/model.hpp"
#include "iclflow/simplified.hpp"

namespace iclflow {

// Flat-vector layouts used by the integrator:
//   full:       [U row-major (d^2), z (d), Z (d), v]      -> d^2 + 2d + 1
//   simplified: [U row-major (d^2), v]                    -> d^2 + 1
//   scalar:     [U, z, Z, v]                              -> 4
Vec pack_full(const FullState& s);
FullState unpack_full(const Vec& x, int d);

Vec pack_simplified(const SimplifiedState& s);
SimplifiedState unpack_simplified(const Vec& x, int d);

Vec pack_d1(const D1State& s);
D1State unpack_d1(const Vec& x);

// Negative-gradient flow of the full population loss.  The returned system
// owns copies of the spec and derived curvature data.
FlowSystem make_full_system(const ModelSpec& spec);

// The same flow restricted to the invariant subspace z = Z = 0.
FlowSystem make_simplified_system(const ModelSpec& spec);

// The scalar one-feature flow with context length N.
FlowSystem make_d1_system(int N);

}  // namespace iclflow
