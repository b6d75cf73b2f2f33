#include "esfp/fk_graph.hpp"

#include <stdexcept>

namespace esfp::graphfk {

using ad::Tensor;

namespace {

Value col(const Value& m, std::size_t i) { return ad::slice(m, 1, i, 1); }

}  // namespace

Value cross3(const Value& a, const Value& b) {
    Value a0 = col(a, 0), a1 = col(a, 1), a2 = col(a, 2);
    Value b0 = col(b, 0), b1 = col(b, 1), b2 = col(b, 2);
    return ad::concat({a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0}, 1);
}

Value quat_normalize(const Value& q) {
    Value n = ad::sqrt_(ad::sum(ad::mul(q, q), {q.val().rank() - 1}, true));
    return ad::div(q, n);
}

Value quat_multiply(const Value& a, const Value& b) {
    Value aw = col(a, 0), ax = col(a, 1), ay = col(a, 2), az = col(a, 3);
    Value bw = col(b, 0), bx = col(b, 1), by = col(b, 2), bz = col(b, 3);
    return ad::concat({aw * bw - ax * bx - ay * by - az * bz,
                       aw * bx + ax * bw + ay * bz - az * by,
                       aw * by - ax * bz + ay * bw + az * bx,
                       aw * bz + ax * by - ay * bx + az * bw},
                      1);
}

Value quat_rotate(const Value& q, const Value& v) {
    Value w = col(q, 0);
    Value u = ad::slice(q, 1, 1, 3);
    Value t = ad::scale(cross3(u, v), 2.0);
    return v + w * t + cross3(u, t);
}

Value forward_kinematics_graph(const SkeletonDefinition& skeleton, const Value& root_t,
                               const Value& quats, const Value& bones) {
    const std::size_t joints = skeleton.joint_count();
    const auto& qshape = quats.val().shape();
    if (qshape.size() != 3 || qshape[1] != joints || qshape[2] != 4)
        throw std::invalid_argument("fk_graph: quats must be (N, J, 4)");
    const std::size_t n = qshape[0];
    if (root_t.val().shape() != std::vector<std::size_t>{n, 3})
        throw std::invalid_argument("fk_graph: root_t must be (N, 3)");
    if (bones.val().shape() != std::vector<std::size_t>{n, joints})
        throw std::invalid_argument("fk_graph: bones must be (N, J)");

    std::vector<Value> pos(joints);
    std::vector<Value> global(joints);
    for (std::size_t j = 0; j < joints; ++j) {
        Value qj = quat_normalize(ad::reshape(ad::slice(quats, 1, j, 1), {n, 4}));
        if (skeleton.is_root(j)) {
            pos[j] = root_t;
            global[j] = qj;
        } else {
            const std::size_t p = static_cast<std::size_t>(skeleton.parent(j));
            const Vec3& dir = skeleton.rest_directions()[j];
            Value dir_c = Value::constant(Tensor({1, 3}, {dir[0], dir[1], dir[2]}));
            Value offset = ad::mul(ad::slice(bones, 1, j, 1), dir_c);  // (N,1)*(1,3)->(N,3)
            pos[j] = pos[p] + quat_rotate(global[p], offset);
            global[j] = quat_normalize(quat_multiply(global[p], qj));
        }
    }
    std::vector<Value> stacked;
    stacked.reserve(joints);
    for (std::size_t j = 0; j < joints; ++j) stacked.push_back(ad::reshape(pos[j], {n, 1, 3}));
    return ad::concat(stacked, 1);
}

}  // namespace esfp::graphfk
