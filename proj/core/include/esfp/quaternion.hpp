#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace esfp {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

// Unit quaternion, storage order (w, x, y, z). Normalized on construction;
// (w,x,y,z) and (-w,-x,-y,-z) encode the same rotation.
struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    Quaternion() = default;
    Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {
        normalize();
    }

    static Quaternion identity() { return Quaternion(); }

    static Quaternion from_axis_angle(const Vec3& axis, double angle_rad) {
        const double n = norm(axis);
        if (n < 1e-12) throw std::invalid_argument("from_axis_angle: zero axis");
        const double h = 0.5 * angle_rad;
        const double s = std::sin(h) / n;
        return Quaternion(std::cos(h), s * axis[0], s * axis[1], s * axis[2]);
    }

    double norm2() const { return w * w + x * x + y * y + z * z; }

    void normalize() {
        const double n = std::sqrt(norm2());
        if (n < 1e-12) throw std::invalid_argument("degenerate rotation");
        w /= n;
        x /= n;
        y /= n;
        z /= n;
    }

    Quaternion conjugate() const {
        Quaternion q;
        q.w = w;
        q.x = -x;
        q.y = -y;
        q.z = -z;
        return q;
    }

    // Canonical representative of the double cover: w >= 0.
    Quaternion canonical() const {
        Quaternion q = *this;
        if (q.w < 0) {
            q.w = -q.w;
            q.x = -q.x;
            q.y = -q.y;
            q.z = -q.z;
        }
        return q;
    }
};

inline Vec3 rotate_by_quaternion(const Quaternion& q_in, const Vec3& v) {
    Quaternion q = q_in;
    q.normalize();
    // v' = v + 2 w (u x v) + 2 u x (u x v), u = (x,y,z)
    const Vec3 u = {q.x, q.y, q.z};
    const Vec3 t = cross(u, v);
    const Vec3 tt = cross(u, t);
    return {v[0] + 2.0 * (q.w * t[0] + tt[0]), v[1] + 2.0 * (q.w * t[1] + tt[1]),
            v[2] + 2.0 * (q.w * t[2] + tt[2])};
}

// Hamilton product, renormalized.
inline Quaternion compose_quaternions(const Quaternion& a, const Quaternion& b) {
    return Quaternion(a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w);
}

inline std::array<std::array<double, 3>, 3> quaternion_to_matrix(const Quaternion& q_in) {
    Quaternion q = q_in;
    q.normalize();
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
             {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
             {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

}  // namespace esfp
