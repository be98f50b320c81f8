#pragma once

#include "omnicount/box.hpp"
#include "omnicount/image.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>

namespace omnicount {

/// Donut geometry of a ceiling-mounted omni-directional frame.
struct OmniGeometry {
  int image_width = 876;
  int image_height = 876;
  double center_x = 438.0;
  double center_y = 438.0;
  double radius = 438.0;        // usable donut radius in pixels
  double angular_step = 0.5;    // degrees per pano column

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
  int pano_width() const;

  bool operator==(const OmniGeometry&) const = default;
};

/// Quadratic y-rectification y'(y) = a y^2 + b y + c of the unwarped panorama.
/// y counts source rows inward from the donut's outer edge.
struct RectifyPoly {
  double a = -0.001387;
  double b = 1.247;
  double c = -2.007;
  double y_min = 2.0;
  double y_max = 438.0;

  static RectifyPoly identity(double y_max) { return {0.0, 1.0, 0.0, 0.0, y_max}; }

  double operator()(double y) const { return (a * y + b) * y + c; }
  double derivative(double y) const { return 2.0 * a * y + b; }

  /// y' strictly increasing on [y_min, y_max]. The derivative is linear so
  /// checking both endpoints suffices.
  bool monotonic() const {
    return y_min < y_max && derivative(y_min) > 0 && derivative(y_max) > 0;
  }

  /// Root of y'(y) = value on the increasing branch; NaN when none exists.
  double inverse(double value) const;

  void validate() const;

  bool operator==(const RectifyPoly&) const = default;
};

inline double rectify_y(const RectifyPoly& poly, double y) { return poly(y); }
inline double inverse_rectify(const RectifyPoly& poly, double value) { return poly.inverse(value); }

/// Number of pano rows: floor of y' at the end of the valid range.
int pano_height(const RectifyPoly& poly);

/// Unit direction (cos, -sin) for an angle in degrees, image y axis pointing down.
/// Quadrant reduction keeps theta and theta + 90k bit-exact rotations of each other.
Eigen::Vector2d polar_direction(double degrees);

/// Continuous pano (column, row) -> omni pixel coordinates.
Eigen::Vector2d pano_to_omni(const OmniGeometry& geom, const RectifyPoly& poly,
                             const Eigen::Vector2d& pano);

/// Omni pixel -> pano (column in [0, pano_width), row). Empty when the point
/// lies outside the donut or its rectified row is undefined.
std::optional<Eigen::Vector2d> omni_to_pano(const OmniGeometry& geom, const RectifyPoly& poly,
                                            const Eigen::Vector2d& omni);

/// True when an omni coordinate falls inside the pixel area of the frame.
inline bool inside_frame(const OmniGeometry& geom, double x, double y) {
  return x >= -0.5 && y >= -0.5 && x <= geom.image_width - 0.5 && y <= geom.image_height - 0.5;
}

/// Axis-aligned omni hull of a pano box, computed from samples along all four
/// edges at no more than one omni pixel of arc between samples.
BoundingBox pano_to_omni_box(const OmniGeometry& geom, const RectifyPoly& poly,
                             const BoundingBox& pano_box);

/// Per-destination-pixel source coordinates. Out-of-image entries are NaN.
template <typename Scalar = float>
struct PixelMap {
  OmniGeometry geometry;
  RectifyPoly poly;
  Plane<Scalar> x;
  Plane<Scalar> y;

  int width() const { return static_cast<int>(x.cols()); }
  int height() const { return static_cast<int>(x.rows()); }
  int source_width() const { return geometry.image_width; }
  int source_height() const { return geometry.image_height; }
  bool in_image(int row, int col) const { return !std::isnan(x(row, col)); }
};

template <typename Scalar = float>
PixelMap<Scalar> build_unwarp_map(const OmniGeometry& geom, const RectifyPoly& poly) {
  geom.validate();
  poly.validate();
  const int width = geom.pano_width();
  const int height = pano_height(poly);
  if (height <= 0) throw std::invalid_argument("rectified pano has no rows");

  PixelMap<Scalar> map{geom, poly, Plane<Scalar>(height, width), Plane<Scalar>(height, width)};
  constexpr Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
  for (int row = 0; row < height; ++row) {
    const double rho = geom.radius - poly.inverse(row);
    for (int col = 0; col < width; ++col) {
      const Eigen::Vector2d dir = polar_direction(col * geom.angular_step);
      const double sx = geom.center_x + rho * dir.x();
      const double sy = geom.center_y + rho * dir.y();
      if (!(rho >= 0 && rho <= geom.radius) || !inside_frame(geom, sx, sy)) {
        map.x(row, col) = nan;
        map.y(row, col) = nan;
      } else {
        map.x(row, col) = static_cast<Scalar>(sx);
        map.y(row, col) = static_cast<Scalar>(sy);
      }
    }
  }
  return map;
}

enum class Interpolation { nearest, bilinear };

template <typename Scalar, typename MapScalar>
Image<Scalar> apply_map(const Image<Scalar>& src, const PixelMap<MapScalar>& map,
                        Interpolation interp = Interpolation::bilinear, Scalar fill = Scalar(0)) {
  if (src.width() != map.source_width() || src.height() != map.source_height()) {
    throw std::invalid_argument("source image does not match pixel map dimensions");
  }
  const int sw = src.width();
  const int sh = src.height();
  Image<Scalar> dst(map.width(), map.height(), src.channels(), fill);
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      if (!map.in_image(row, col)) continue;
      const double x = map.x(row, col);
      const double y = map.y(row, col);
      if (interp == Interpolation::nearest) {
        const int ix = std::clamp(static_cast<int>(std::nearbyint(x)), 0, sw - 1);
        const int iy = std::clamp(static_cast<int>(std::nearbyint(y)), 0, sh - 1);
        for (int c = 0; c < src.channels(); ++c) dst(col, row, c) = src(ix, iy, c);
        continue;
      }
      const double fx0 = std::floor(x);
      const double fy0 = std::floor(y);
      const double tx = x - fx0;
      const double ty = y - fy0;
      const int x0 = std::clamp(static_cast<int>(fx0), 0, sw - 1);
      const int y0 = std::clamp(static_cast<int>(fy0), 0, sh - 1);
      const int x1 = std::clamp(static_cast<int>(fx0) + 1, 0, sw - 1);
      const int y1 = std::clamp(static_cast<int>(fy0) + 1, 0, sh - 1);
      for (int c = 0; c < src.channels(); ++c) {
        const double top = (1 - tx) * src(x0, y0, c) + tx * src(x1, y0, c);
        const double bot = (1 - tx) * src(x0, y1, c) + tx * src(x1, y1, c);
        dst(col, row, c) = static_cast<Scalar>((1 - ty) * top + ty * bot);
      }
    }
  }
  return dst;
}

/// Binary sidecar: 8-byte magic, uint32 version, int32 dims, float64 geometry
/// and polynomial parameters, then row-major float32 (x, y) pairs with NaN for
/// out-of-image. Little-endian.
void save_pixel_map(const std::filesystem::path& path, const PixelMap<float>& map);
PixelMap<float> load_pixel_map(const std::filesystem::path& path);

/// Loads the sidecar when it matches geom/poly, otherwise builds and writes it.
PixelMap<float> cached_unwarp_map(const std::filesystem::path& path, const OmniGeometry& geom,
                                  const RectifyPoly& poly);

}  // namespace omnicount
