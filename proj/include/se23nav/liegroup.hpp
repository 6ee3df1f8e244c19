// SO(3) and SE2(3) operations on plain Eigen dense types.
//
// Conventions used throughout:
//  - Rotations are 3x3 matrices C with C*C^T = I, det C = +1.
//  - An extended pose packs (rotation, velocity column, position column); its 5x5
//    embedding is [[C, v, p], [0 0 0 1 0], [0 0 0 0 1]].
//  - right error: truth * inverse(estimate);  left error: inverse(estimate) * truth.
//  - Small-angle branches switch at 1e-6 rad; series are accurate to well below
//    double roundoff there.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>  // cross products
#include <cmath>
#include <stdexcept>

namespace se23nav {

template <typename S> using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S> using Mat3 = Eigen::Matrix<S, 3, 3>;
template <typename S> using Mat5 = Eigen::Matrix<S, 5, 5>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Mat5d = Mat5<double>;

inline constexpr double kSmallAngle = 1e-6;   // series branch threshold (rad)
inline constexpr double kNearPi = 1e-6;       // distance to pi that flags axis ambiguity

// Extended pose (element of SE2(3)): rotation, velocity column, position column.
template <typename S>
struct ExtendedPose {
  Mat3<S> rot = Mat3<S>::Identity();
  Vec3<S> vel = Vec3<S>::Zero();
  Vec3<S> pos = Vec3<S>::Zero();

  Mat5<S> matrix() const {
    Mat5<S> m = Mat5<S>::Identity();
    m.template block<3, 3>(0, 0) = rot;
    m.template block<3, 1>(0, 3) = vel;
    m.template block<3, 1>(0, 4) = pos;
    return m;
  }
  static ExtendedPose FromMatrix(const Mat5<S>& m) {
    ExtendedPose x;
    x.rot = m.template block<3, 3>(0, 0);
    x.vel = m.template block<3, 1>(0, 3);
    x.pos = m.template block<3, 1>(0, 4);
    return x;
  }
};

// Element of the Lie algebra se2(3): rotation, velocity and position parts.
template <typename S>
struct Twist {
  Vec3<S> phi = Vec3<S>::Zero();
  Vec3<S> nu = Vec3<S>::Zero();
  Vec3<S> rho = Vec3<S>::Zero();

  Eigen::Matrix<S, 9, 1> vector() const {
    Eigen::Matrix<S, 9, 1> v;
    v << phi, nu, rho;
    return v;
  }
};

using ExtendedPosed = ExtendedPose<double>;
using Twistd = Twist<double>;

template <typename D>
Mat3<typename D::Scalar> skew(const Eigen::MatrixBase<D>& v) {
  using S = typename D::Scalar;
  Mat3<S> m;
  m << S(0), -v(2), v(1),
       v(2), S(0), -v(0),
      -v(1), v(0), S(0);
  return m;
}

template <typename D>
Vec3<typename D::Scalar> vee(const Eigen::MatrixBase<D>& m) {
  return Vec3<typename D::Scalar>(m(2, 1), m(0, 2), m(1, 0));
}

// Rodrigues formula; the sin/cos coefficients fall back to their series below the
// small-angle threshold so the map is smooth through zero.
template <typename D>
Mat3<typename D::Scalar> so3_exp(const Eigen::MatrixBase<D>& phi) {
  using S = typename D::Scalar;
  const S t2 = phi.squaredNorm();
  const S t = std::sqrt(t2);
  S a, b;  // sin(t)/t and (1-cos(t))/t^2
  if (t < S(kSmallAngle)) {
    a = S(1) - t2 / S(6);
    b = S(0.5) - t2 / S(24);
  } else {
    a = std::sin(t) / t;
    b = (S(1) - std::cos(t)) / t2;
  }
  const Mat3<S> px = skew(phi);
  return Mat3<S>::Identity() + a * px + b * px * px;
}

// Inverse of so3_exp. The returned angle is in [0, pi], recovered as
// atan2(|sin t * axis|, cos t) so it stays accurate where acos of the trace would
// lose digits. Within kNearPi of pi the axis is recovered from the largest diagonal
// of (R + I)/2 and the sign is fixed so that the largest-magnitude component is
// nonnegative; *near_pi (when given) reports that the sign is conventional rather
// than determined by R.
template <typename D>
Vec3<typename D::Scalar> so3_log(const Eigen::MatrixBase<D>& R, bool* near_pi = nullptr) {
  using S = typename D::Scalar;
  if (near_pi) *near_pi = false;
  const S pi = S(EIGEN_PI);
  const S c = (R.trace() - S(1)) / S(2);
  const Vec3<S> w = vee((R - R.transpose()).eval()) / S(2);  // = sin(t) * axis
  const S s = w.norm();
  const S t = std::atan2(s, c);
  if (t > pi - S(kNearPi)) {
    if (near_pi) *near_pi = true;
    const Mat3<S> B = (R + Mat3<S>::Identity()) / S(2);  // = a a^T at angle pi
    int j = 0;
    B.diagonal().maxCoeff(&j);
    Vec3<S> a = B.col(j) / std::sqrt(B(j, j));
    int k = 0;
    a.cwiseAbs().maxCoeff(&k);
    if (a(k) < S(0)) a = -a;
    return t * a;
  }
  if (t < S(kSmallAngle)) {
    return (S(1) + t * t / S(6)) * w;
  }
  return (t / s) * w;
}

// Left Jacobian of SO(3): J_l(phi) = I + (1-cos)/t^2 (phi x) + (t - sin)/t^3 (phi x)^2.
template <typename D>
Mat3<typename D::Scalar> left_jacobian(const Eigen::MatrixBase<D>& phi) {
  using S = typename D::Scalar;
  const S t2 = phi.squaredNorm();
  const S t = std::sqrt(t2);
  S b, c;  // (1-cos)/t^2 and (t-sin)/t^3
  if (t < S(kSmallAngle)) {
    b = S(0.5) - t2 / S(24);
    c = S(1) / S(6) - t2 / S(120);
  } else {
    b = (S(1) - std::cos(t)) / t2;
    c = (t - std::sin(t)) / (t2 * t);
  }
  const Mat3<S> px = skew(phi);
  return Mat3<S>::Identity() + b * px + c * px * px;
}

// Inverse left Jacobian, closed form
//   (t/2)cot(t/2) I + (1 - (t/2)cot(t/2)) a a^T - (t/2)(a x),
// written with (phi x) powers to avoid normalizing the axis. Diverges at 2*pi.
template <typename D>
Mat3<typename D::Scalar> left_jacobian_inv(const Eigen::MatrixBase<D>& phi) {
  using S = typename D::Scalar;
  const S t2 = phi.squaredNorm();
  const S t = std::sqrt(t2);
  if (t >= S(2) * S(EIGEN_PI) - S(1e-3)) {
    throw std::domain_error("left_jacobian_inv: rotation magnitude too close to 2*pi");
  }
  const Mat3<S> px = skew(phi);
  if (t < S(kSmallAngle)) {
    return Mat3<S>::Identity() - px / S(2) + px * px / S(12);
  }
  const S h = t / S(2);
  const S cot = std::cos(h) / std::sin(h);
  const S c = (S(1) - h * cot) / t2;  // coefficient of (phi x)^2
  return Mat3<S>::Identity() - px / S(2) + c * px * px;
}

template <typename S>
ExtendedPose<S> se23_exp(const Twist<S>& xi) {
  ExtendedPose<S> x;
  x.rot = so3_exp(xi.phi);
  const Mat3<S> J = left_jacobian(xi.phi);
  x.vel = J * xi.nu;
  x.pos = J * xi.rho;
  return x;
}

template <typename S>
Twist<S> se23_log(const ExtendedPose<S>& x, bool* near_pi = nullptr) {
  Twist<S> xi;
  xi.phi = so3_log(x.rot, near_pi);
  const Mat3<S> Jinv = left_jacobian_inv(xi.phi);
  xi.nu = Jinv * x.vel;
  xi.rho = Jinv * x.pos;
  return xi;
}

template <typename S>
ExtendedPose<S> se23_inverse(const ExtendedPose<S>& x) {
  ExtendedPose<S> y;
  y.rot = x.rot.transpose();
  y.vel = -(y.rot * x.vel);
  y.pos = -(y.rot * x.pos);
  return y;
}

template <typename S>
ExtendedPose<S> se23_compose(const ExtendedPose<S>& a, const ExtendedPose<S>& b) {
  ExtendedPose<S> c;
  c.rot = a.rot * b.rot;
  c.vel = a.rot * b.vel + a.vel;
  c.pos = a.rot * b.pos + a.pos;
  return c;
}

template <typename S>
ExtendedPose<S> operator*(const ExtendedPose<S>& a, const ExtendedPose<S>& b) {
  return se23_compose(a, b);
}

template <typename S>
ExtendedPose<S> right_error(const ExtendedPose<S>& truth, const ExtendedPose<S>& estimate) {
  return se23_compose(truth, se23_inverse(estimate));
}

template <typename S>
ExtendedPose<S> left_error(const ExtendedPose<S>& truth, const ExtendedPose<S>& estimate) {
  return se23_compose(se23_inverse(estimate), truth);
}

// Frobenius distance of R^T R from the identity.
template <typename D>
typename D::Scalar orthogonality_defect(const Eigen::MatrixBase<D>& R) {
  using S = typename D::Scalar;
  return (R.transpose() * R - Mat3<S>::Identity()).norm();
}

// Polar projection onto SO(3) by Newton iteration X <- X (3I - X^T X)/2, which
// converges quadratically for nearly orthonormal input. Used to absorb roundoff
// accumulated by long products; not meant to repair arbitrary matrices.
template <typename D>
Mat3<typename D::Scalar> reorthonormalize(const Eigen::MatrixBase<D>& R) {
  using S = typename D::Scalar;
  Mat3<S> X = R;
  for (int i = 0; i < 3; ++i) {
    X = X * (S(3) * Mat3<S>::Identity() - X.transpose() * X) / S(2);
    if (orthogonality_defect(X) < S(1e-15)) break;
  }
  return X;
}

}  // namespace se23nav
