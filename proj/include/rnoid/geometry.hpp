#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace rnoid {

template<typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template<typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

using Point = Vec2<double>;

template<typename Scalar>
Scalar cross2(const Vec2<Scalar>& a, const Vec2<Scalar>& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

// Rotation by +pi/2.
template<typename Scalar>
Vec2<Scalar> perp(const Vec2<Scalar>& a)
{
    return Vec2<Scalar>(-a.y(), a.x());
}

template<typename Scalar>
Vec2<Scalar> rotate(const Vec2<Scalar>& a, Scalar angle)
{
    using std::cos;
    using std::sin;
    const Scalar c = cos(angle), s = sin(angle);
    return Vec2<Scalar>(c * a.x() - s * a.y(), s * a.x() + c * a.y());
}

template<typename Scalar>
Scalar orient(const Vec2<Scalar>& a, const Vec2<Scalar>& b, const Vec2<Scalar>& c)
{
    return cross2<Scalar>(b - a, c - a);
}

template<typename Scalar>
Scalar signed_area(const Vec2<Scalar>& a, const Vec2<Scalar>& b, const Vec2<Scalar>& c)
{
    return Scalar(0.5) * orient(a, b, c);
}

// Gradients of the three P1 hat functions on a counterclockwise triangle.
template<typename Scalar>
std::array<Vec2<Scalar>, 3> hat_gradients(const Vec2<Scalar>& a, const Vec2<Scalar>& b,
                                          const Vec2<Scalar>& c)
{
    const Scalar twice = orient(a, b, c);
    return {perp<Scalar>(c - b) / twice, perp<Scalar>(a - c) / twice, perp<Scalar>(b - a) / twice};
}

template<typename Scalar>
Vec2<Scalar> p1_gradient(const std::array<Vec2<Scalar>, 3>& grads, Scalar ua, Scalar ub, Scalar uc)
{
    return ua * grads[0] + ub * grads[1] + uc * grads[2];
}

// Smallest interior angle of a triangle, in radians.
template<typename Scalar>
Scalar min_angle(const Vec2<Scalar>& a, const Vec2<Scalar>& b, const Vec2<Scalar>& c)
{
    using std::acos;
    using std::min;
    auto angle = [](const Vec2<Scalar>& p, const Vec2<Scalar>& q, const Vec2<Scalar>& r) {
        const Vec2<Scalar> u = q - p, v = r - p;
        Scalar t = u.dot(v) / (u.norm() * v.norm());
        t = t > Scalar(1) ? Scalar(1) : (t < Scalar(-1) ? Scalar(-1) : t);
        return acos(t);
    };
    return min(angle(a, b, c), min(angle(b, c, a), angle(c, a, b)));
}

template<typename Scalar>
Vec2<Scalar> circumcenter(const Vec2<Scalar>& a, const Vec2<Scalar>& b, const Vec2<Scalar>& c)
{
    const Vec2<Scalar> ab = b - a, ac = c - a;
    const Scalar d = Scalar(2) * cross2(ab, ac);
    const Scalar ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
    return a + Vec2<Scalar>(ac.y() * ab2 - ab.y() * ac2, ab.x() * ac2 - ac.x() * ab2) / d;
}

// Distance from p to segment [a, b].
template<typename Scalar>
Scalar segment_distance(const Vec2<Scalar>& p, const Vec2<Scalar>& a, const Vec2<Scalar>& b)
{
    const Vec2<Scalar> ab = b - a;
    Scalar t = (p - a).dot(ab) / ab.squaredNorm();
    t = t < Scalar(0) ? Scalar(0) : (t > Scalar(1) ? Scalar(1) : t);
    return (a + t * ab - p).norm();
}

// Angle in (-pi, pi] turning from a to b.
template<typename Scalar>
Scalar turn_angle(const Vec2<Scalar>& a, const Vec2<Scalar>& b)
{
    using std::atan2;
    return atan2(cross2(a, b), a.dot(b));
}

} // namespace rnoid
