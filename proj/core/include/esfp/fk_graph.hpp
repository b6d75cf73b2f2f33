#pragma once

#include "esfp/graph.hpp"
#include "esfp/skeleton.hpp"

namespace esfp::graphfk {

using ad::Value;

// Batched quaternion algebra inside the autodiff graph.
// Quaternions are (N, 4) rows in (w, x, y, z) order; vectors are (N, 3).
Value quat_normalize(const Value& q);
Value quat_multiply(const Value& a, const Value& b);
Value quat_rotate(const Value& q, const Value& v);
Value cross3(const Value& a, const Value& b);

// Forward kinematics replayed inside the graph so gradients flow through the
// manifold decode. root_t: (N, 3); quats: (N, J, 4) with the root slot holding
// the root orientation (rows need not be pre-normalized); bones: (N, J).
// Returns global positions (N, J, 3).
Value forward_kinematics_graph(const SkeletonDefinition& skeleton, const Value& root_t,
                               const Value& quats, const Value& bones);

}  // namespace esfp::graphfk
