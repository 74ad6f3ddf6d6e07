#pragma once

// Axis-aligned box geometry in center format b = (x, y, w, h).

#include "relcap/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace relcap {

template <typename Scalar>
struct Box {
  Scalar x{};  ///< center x
  Scalar y{};  ///< center y
  Scalar w{};
  Scalar h{};

  Scalar left() const { return x - w / Scalar(2); }
  Scalar right() const { return x + w / Scalar(2); }
  Scalar top() const { return y - h / Scalar(2); }
  Scalar bottom() const { return y + h / Scalar(2); }
  Scalar area() const { return w * h; }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > Scalar(0) &&
           h > Scalar(0);
  }

  static Box from_corners(Scalar x1, Scalar y1, Scalar x2, Scalar y2) {
    return {(x1 + x2) / Scalar(2), (y1 + y2) / Scalar(2), x2 - x1, y2 - y1};
  }
  std::array<Scalar, 4> corners() const { return {left(), top(), right(), bottom()}; }

  Box translated(Scalar dx, Scalar dy) const { return {x + dx, y + dy, w, h}; }
  /// Scales positions and extents about the origin.
  Box scaled(Scalar s) const { return {x * s, y * s, w * s, h * s}; }

  friend bool operator==(const Box&, const Box&) = default;
};

using BoundingBox = Box<double>;

template <typename Scalar>
Scalar intersection_area(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const Scalar ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= Scalar(0) || ih <= Scalar(0)) return Scalar(0);
  return iw * ih;
}

/// Intersection over union; 0 for disjoint or touching boxes.
template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  // Edge arithmetic in center form need not reproduce w exactly.
  if (a == b && a.valid()) return Scalar(1);
  const Scalar inter = intersection_area(a, b);
  if (inter <= Scalar(0)) return Scalar(0);
  return inter / (a.area() + b.area() - inter);
}

/// Smallest box covering both.
template <typename Scalar>
Box<Scalar> union_box(const Box<Scalar>& a, const Box<Scalar>& b) {
  return Box<Scalar>::from_corners(std::min(a.left(), b.left()), std::min(a.top(), b.top()),
                                   std::max(a.right(), b.right()), std::max(a.bottom(), b.bottom()));
}

/// True when `inner` lies within `outer` (boundaries may touch).
template <typename Scalar>
bool contains(const Box<Scalar>& outer, const Box<Scalar>& inner) {
  return inner.left() >= outer.left() && inner.right() <= outer.right() && inner.top() >= outer.top() &&
         inner.bottom() <= outer.bottom();
}

template <typename Scalar>
using GeometricFeatureT = std::array<Scalar, 6>;
using GeometricFeature = GeometricFeatureT<double>;

/// Relative geometry of an ordered (subject, object) pair:
///   [ (x_o − x_s)/√(w_s h_s), (y_o − y_s)/√(w_s h_s), √(w_o h_o / (w_s h_s)),
///     w_s/h_s, w_o/h_o, IoU(b_s, b_o) ]
template <typename Scalar>
GeometricFeatureT<Scalar> geometric_feature(const Box<Scalar>& s, const Box<Scalar>& o) {
  if (!(s.w > Scalar(0) && s.h > Scalar(0) && o.w > Scalar(0) && o.h > Scalar(0))) {
    throw ContractError("geometric_feature: degenerate box");
  }
  const Scalar scale = std::sqrt(s.w * s.h);
  return {(o.x - s.x) / scale,
          (o.y - s.y) / scale,
          std::sqrt((o.w * o.h) / (s.w * s.h)),
          s.w / s.h,
          o.w / o.h,
          iou(s, o)};
}

/// Regression targets taking `from` onto `to`, normalized by `from`:
/// ((x_t − x_f)/w_f, (y_t − y_f)/h_f, ln(w_t/w_f), ln(h_t/h_f)).
template <typename Scalar>
std::array<Scalar, 4> box_offsets(const Box<Scalar>& from, const Box<Scalar>& to) {
  return {(to.x - from.x) / from.w, (to.y - from.y) / from.h, std::log(to.w / from.w), std::log(to.h / from.h)};
}

/// Inverse of box_offsets.
template <typename Scalar>
Box<Scalar> apply_offsets(const Box<Scalar>& from, const std::array<Scalar, 4>& d) {
  return {from.x + d[0] * from.w, from.y + d[1] * from.h, from.w * std::exp(d[2]), from.h * std::exp(d[3])};
}

std::string to_string(const BoundingBox& b);

}  // namespace relcap
