#include "omnicount/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <numbers>

namespace omnicount {

namespace {

constexpr std::array<char, 8> kMapMagic = {'O', 'M', 'N', 'I', 'M', 'A', 'P', '\0'};
constexpr std::uint32_t kMapVersion = 1;

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0) w += 360.0;
  return w;
}

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated pixel map file");
  return value;
}

}  // namespace

void OmniGeometry::validate() const {
  if (image_width <= 0 || image_height <= 0) {
    throw std::invalid_argument("omni frame dimensions must be positive");
  }
  if (image_width != image_height) {
    throw std::invalid_argument("omni frame must be square");
  }
  if (!(radius > 0) || radius > image_width / 2.0) {
    throw std::invalid_argument("radius must lie in (0, width/2]");
  }
  if (!(angular_step > 0)) throw std::invalid_argument("angular step must be positive");
  const double columns = 360.0 / angular_step;
  if (std::abs(columns - std::round(columns)) > 1e-9) {
    throw std::invalid_argument("360 must be an integer multiple of the angular step");
  }
}

int OmniGeometry::pano_width() const {
  return static_cast<int>(std::lround(360.0 / angular_step));
}

double RectifyPoly::inverse(double value) const {
  // Root on the increasing branch, written in the cancellation-free form
  // 2(v - c) / (b + sqrt(b^2 - 4a(c - v))), which also covers a == 0.
  const double disc = b * b - 4.0 * a * (c - value);
  if (disc < 0) return std::numeric_limits<double>::quiet_NaN();
  const double denom = b + std::sqrt(disc);
  if (denom <= 0) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * (value - c) / denom;
}

void RectifyPoly::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    throw std::invalid_argument("rectification coefficients must be finite");
  }
  if (!monotonic()) {
    throw std::invalid_argument("rectification polynomial is not strictly increasing over its valid range");
  }
}

int pano_height(const RectifyPoly& poly) {
  return static_cast<int>(std::floor(poly(poly.y_max)));
}

Eigen::Vector2d polar_direction(double degrees) {
  const double wrapped = wrap_degrees(degrees);
  const int quadrant = std::min(3, static_cast<int>(wrapped / 90.0));
  const double rad = (wrapped - 90.0 * quadrant) * std::numbers::pi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  // Rotate (c, s) by quadrant * 90 degrees exactly.
  double cx = c, sy = s;
  switch (quadrant) {
    case 1: cx = -s; sy = c; break;
    case 2: cx = -c; sy = -s; break;
    case 3: cx = s; sy = -c; break;
    default: break;
  }
  return {cx, -sy};
}

Eigen::Vector2d pano_to_omni(const OmniGeometry& geom, const RectifyPoly& poly,
                             const Eigen::Vector2d& pano) {
  const double rho = geom.radius - poly.inverse(pano.y());
  const Eigen::Vector2d center(geom.center_x, geom.center_y);
  return center + rho * polar_direction(pano.x() * geom.angular_step);
}

std::optional<Eigen::Vector2d> omni_to_pano(const OmniGeometry& geom, const RectifyPoly& poly,
                                            const Eigen::Vector2d& omni) {
  const double dx = omni.x() - geom.center_x;
  const double dy = geom.center_y - omni.y();
  const double rho = std::hypot(dx, dy);
  if (rho > geom.radius) return std::nullopt;
  const double theta = wrap_degrees(std::atan2(dy, dx) * 180.0 / std::numbers::pi);
  double col = theta / geom.angular_step;
  if (col >= geom.pano_width()) col -= geom.pano_width();
  const double row = poly(geom.radius - rho);
  if (!std::isfinite(row)) return std::nullopt;
  return Eigen::Vector2d(col, row);
}

BoundingBox pano_to_omni_box(const OmniGeometry& geom, const RectifyPoly& poly,
                             const BoundingBox& pano_box) {
  const double rows = pano_height(poly);
  if (pano_box.bottom() <= 0 || pano_box.y >= rows || pano_box.w < 0 || pano_box.h < 0) {
    throw std::invalid_argument("box lies outside the valid pano area");
  }
  const double y0 = std::max(0.0, pano_box.y);
  const double y1 = std::min(rows, pano_box.bottom());
  const double x0 = pano_box.x;
  const double x1 = pano_box.right();

  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  auto add = [&](double col, double row) {
    const Eigen::Vector2d p = pano_to_omni(geom, poly, {col, row});
    if (!p.allFinite()) return;
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };

  // Horizontal edges trace arcs: one sample per omni pixel of arc at the
  // outermost radius in the box, which is the top edge.
  const double rho_max = geom.radius - poly.inverse(y0);
  const double arc = (x1 - x0) * geom.angular_step * std::numbers::pi / 180.0 * std::max(rho_max, 1.0);
  const int n_arc = std::max(1, static_cast<int>(std::ceil(arc)));
  for (int i = 0; i <= n_arc; ++i) {
    const double col = x0 + (x1 - x0) * i / n_arc;
    add(col, y0);
    add(col, y1);
  }
  // Vertical edges are radial segments; rows map to at most ~1.25 px of radius.
  const double radial = std::abs(poly.inverse(y1) - poly.inverse(y0));
  const int n_rad = std::max(1, static_cast<int>(std::ceil(std::isfinite(radial) ? radial : 1.0)));
  for (int i = 0; i <= n_rad; ++i) {
    const double row = y0 + (y1 - y0) * i / n_rad;
    add(x0, row);
    add(x1, row);
  }
  if (!lo.allFinite()) throw std::invalid_argument("box lies outside the valid pano area");

  // Sub-pixel hulls (a single mapped point) are inflated to 1x1.
  for (int k = 0; k < 2; ++k) {
    if (hi[k] - lo[k] < 1.0) {
      const double mid = 0.5 * (lo[k] + hi[k]);
      lo[k] = mid - 0.5;
      hi[k] = mid + 0.5;
    }
  }
  BoundingBox hull = BoundingBox::from_corners(lo.x(), lo.y(), hi.x(), hi.y(), Space::omni);
  return clip_box(hull, geom.image_width, geom.image_height);
}

void save_pixel_map(const std::filesystem::path& path, const PixelMap<float>& map) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMapMagic.data(), kMapMagic.size());
  write_pod(out, kMapVersion);
  write_pod<std::int32_t>(out, map.width());
  write_pod<std::int32_t>(out, map.height());
  write_pod<std::int32_t>(out, map.geometry.image_width);
  write_pod<std::int32_t>(out, map.geometry.image_height);
  for (double v : {map.geometry.center_x, map.geometry.center_y, map.geometry.radius,
                   map.geometry.angular_step, map.poly.a, map.poly.b, map.poly.c, map.poly.y_min,
                   map.poly.y_max}) {
    write_pod(out, v);
  }
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      write_pod(out, map.x(row, col));
      write_pod(out, map.y(row, col));
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PixelMap<float> load_pixel_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMapMagic) throw std::runtime_error(path.string() + " is not a pixel map file");
  if (read_pod<std::uint32_t>(in) != kMapVersion) {
    throw std::runtime_error(path.string() + ": unsupported pixel map version");
  }
  const auto width = read_pod<std::int32_t>(in);
  const auto height = read_pod<std::int32_t>(in);
  PixelMap<float> map;
  map.geometry.image_width = read_pod<std::int32_t>(in);
  map.geometry.image_height = read_pod<std::int32_t>(in);
  map.geometry.center_x = read_pod<double>(in);
  map.geometry.center_y = read_pod<double>(in);
  map.geometry.radius = read_pod<double>(in);
  map.geometry.angular_step = read_pod<double>(in);
  map.poly.a = read_pod<double>(in);
  map.poly.b = read_pod<double>(in);
  map.poly.c = read_pod<double>(in);
  map.poly.y_min = read_pod<double>(in);
  map.poly.y_max = read_pod<double>(in);
  if (width <= 0 || height <= 0) throw std::runtime_error(path.string() + ": bad map dimensions");
  map.x.resize(height, width);
  map.y.resize(height, width);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      map.x(row, col) = read_pod<float>(in);
      map.y(row, col) = read_pod<float>(in);
    }
  }
  return map;
}

PixelMap<float> cached_unwarp_map(const std::filesystem::path& path, const OmniGeometry& geom,
                                  const RectifyPoly& poly) {
  if (std::filesystem::exists(path)) {
    try {
      PixelMap<float> cached = load_pixel_map(path);
      if (cached.geometry == geom && cached.poly == poly) return cached;
    } catch (const std::runtime_error&) {
      // stale or corrupt sidecar; rebuild below
    }
  }
  PixelMap<float> map = build_unwarp_map<float>(geom, poly);
  save_pixel_map(path, map);
  return map;
}

}  // namespace omnicount
