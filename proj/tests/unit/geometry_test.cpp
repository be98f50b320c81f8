#include "omnicount/geometry.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <random>

using namespace omnicount;

namespace {

OmniGeometry default_geometry() { return {}; }

}  // namespace

TEST_CASE("rectify_y evaluates the quadratic") {
  const RectifyPoly poly;
  CHECK(rectify_y(poly, 0.0) == doctest::Approx(-2.007).epsilon(1e-12));
  CHECK(rectify_y(poly, 100.0) == doctest::Approx(108.823).epsilon(1e-12));
  CHECK(rectify_y(poly, 438.0) == doctest::Approx(278.091372).epsilon(1e-9));
  const auto id = RectifyPoly::identity(438);
  for (double y : {0.0, 1.5, 77.25, 438.0}) CHECK(rectify_y(id, y) == y);
}

TEST_CASE("default polynomial is strictly increasing on a 1 px grid") {
  const RectifyPoly poly;
  CHECK(poly.monotonic());
  for (int y = static_cast<int>(poly.y_min); y < static_cast<int>(poly.y_max); ++y) {
    CHECK(poly(y + 1) - poly(y) > 0);
  }
}

TEST_CASE("inverse_rectify undoes rectify_y") {
  const RectifyPoly poly;
  for (double y = poly.y_min; y <= poly.y_max; y += 0.37) {
    CHECK(inverse_rectify(poly, rectify_y(poly, y)) == doctest::Approx(y).epsilon(1e-10));
  }
  const auto id = RectifyPoly::identity(100);
  CHECK(inverse_rectify(id, 42.5) == 42.5);
}

TEST_CASE("build_unwarp_map dimensions") {
  SUBCASE("default geometry gives 720 x 278") {
    const auto map = build_unwarp_map(default_geometry(), RectifyPoly{});
    CHECK(map.width() == 720);
    CHECK(map.height() == 278);
  }
  SUBCASE("identity polynomial gives radius rows") {
    OmniGeometry g;
    g.radius = 300;
    const auto map = build_unwarp_map(g, RectifyPoly::identity(300));
    CHECK(map.height() == 300);
    CHECK(map.width() == 720);
  }
  SUBCASE("non-monotonic polynomial is rejected") {
    RectifyPoly bad{-0.01, 1.247, -2.007, 2, 438};
    CHECK_THROWS_AS(build_unwarp_map(default_geometry(), bad), std::invalid_argument);
  }
  SUBCASE("geometry invariants") {
    OmniGeometry g;
    g.image_height = 800;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = {};
    g.radius = 439;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = {};
    g.angular_step = 0.7;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  }
}

TEST_CASE("row 0 is the outer edge, column 0 the +x axis, angles counter-clockwise") {
  const OmniGeometry g;
  const RectifyPoly id = RectifyPoly::identity(438);
  const Eigen::Vector2d outer = pano_to_omni(g, id, {0, 0});
  CHECK(outer.x() == doctest::Approx(876.0));
  CHECK(outer.y() == doctest::Approx(438.0));
  // 90 degrees = column 180 points up in the image.
  const Eigen::Vector2d up = pano_to_omni(g, id, {180, 38});
  CHECK(up.x() == doctest::Approx(438.0));
  CHECK(up.y() == doctest::Approx(38.0));
}

TEST_CASE("apply_map on a constant image") {
  const auto map = build_unwarp_map(default_geometry(), RectifyPoly{});
  const Image<float> gray(876, 876, 1, 128.0f);
  for (auto interp : {Interpolation::nearest, Interpolation::bilinear}) {
    const auto pano = apply_map(gray, map, interp, 128.0f);
    CHECK(pano.width() == 720);
    CHECK(pano.height() == 278);
    CHECK((pano.plane(0) == 128.0f).all());
  }
}

TEST_CASE("apply_map places a single bright pixel by the map formula") {
  // Pixel 100 px right of centre, identity polynomial: theta = 0 -> column 0,
  // rho = 100 -> row radius - 100.
  const OmniGeometry g;
  const auto map = build_unwarp_map(g, RectifyPoly::identity(438));
  Image<float> src(876, 876, 1, 0.0f);
  src(538, 438) = 255.0f;
  for (auto interp : {Interpolation::nearest, Interpolation::bilinear}) {
    const auto pano = apply_map(src, map, interp);
    CHECK(pano(0, 338) == doctest::Approx(255.0f));
    Eigen::Index r, c;
    pano.plane(0).maxCoeff(&r, &c);
    CHECK(r == 338);
    CHECK(c == 0);
  }
}

TEST_CASE("apply_map rejects a mismatched source") {
  const auto map = build_unwarp_map(default_geometry(), RectifyPoly{});
  CHECK_THROWS_AS(apply_map(Image<float>(800, 800), map), std::invalid_argument);
}

TEST_CASE("out-of-image rows form a contiguous edge band") {
  auto check_band = [](const PixelMap<float>& map, bool expect_top) {
    std::vector<int> rows;
    for (int r = 0; r < map.height(); ++r) {
      bool any_out = false;
      for (int c = 0; c < map.width(); ++c) any_out = any_out || !map.in_image(r, c);
      if (any_out) rows.push_back(r);
    }
    REQUIRE(!rows.empty());
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i] == rows[i - 1] + 1);
    if (expect_top) CHECK(rows.front() == 0);
    else CHECK(rows.back() == map.height() - 1);
  };
  // Outer ring touches the frame edge at theta = 0.
  check_band(build_unwarp_map(OmniGeometry{}, RectifyPoly::identity(438)), true);
  // Valid range extends past the centre: the lost bottom portion.
  OmniGeometry g;
  g.radius = 400;
  check_band(build_unwarp_map(g, RectifyPoly::identity(450)), false);
}

TEST_CASE("pano -> omni -> pano round trip within half a pixel") {
  const OmniGeometry g;
  const RectifyPoly poly;
  const int rows = pano_height(poly);
  double worst = 0;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 25; ++j) {
      const Eigen::Vector2d p(0.3 + i * 719.0 / 40, 0.5 + j * (rows - 1.0) / 25);
      const auto back = omni_to_pano(g, poly, pano_to_omni(g, poly, p));
      REQUIRE(back.has_value());
      worst = std::max(worst, (*back - p).norm());
    }
  }
  CHECK(worst <= 0.5);
  CHECK(worst < 1e-6);
}

TEST_CASE("rotation by quarter turns shifts the pano exactly under nearest sampling") {
  const OmniGeometry g;
  const RectifyPoly poly;
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> value(0, 255);
  Image<float> src(876, 876, 1, 0.0f);
  for (int y = 1; y < 876; ++y)
    for (int x = 1; x < 876; ++x) src(x, y) = static_cast<float>(value(rng));

  // Counter-clockwise 90 degree rotation about (438, 438): R(x', y') = src(876 - y', x').
  auto rotate = [](const Image<float>& img) {
    Image<float> out(876, 876, 1, 0.0f);
    for (int y = 1; y < 876; ++y)
      for (int x = 1; x < 876; ++x) out(x, y) = img(876 - y, x);
    return out;
  };

  const auto map = build_unwarp_map(g, poly);
  const auto base = apply_map(src, map, Interpolation::nearest);
  Image<float> rotated = src;
  for (int quarter = 1; quarter <= 3; ++quarter) {
    rotated = rotate(rotated);
    const auto pano = apply_map(rotated, map, Interpolation::nearest);
    const int shift = quarter * 180;
    long mismatches = 0;
    for (int r = 0; r < base.height(); ++r)
      for (int c = 0; c < base.width(); ++c)
        mismatches += pano((c + shift) % 720, r) != base(c, r);
    CHECK(mismatches == 0);
  }
}

TEST_CASE("pano_to_omni_box") {
  const OmniGeometry g;
  const RectifyPoly poly;

  // Dense interior sampling is the oracle for the boundary-sampled hull.
  auto brute_hull = [&](const BoundingBox& b) {
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e9), hi = -lo;
    for (int i = 0; i <= 200; ++i)
      for (int j = 0; j <= 200; ++j) {
        const Eigen::Vector2d p = pano_to_omni(g, poly, {b.x + b.w * i / 200, b.y + b.h * j / 200});
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    return BoundingBox::from_corners(lo.x(), lo.y(), hi.x(), hi.y(), Space::omni);
  };

  SUBCASE("ordinary box matches the dense hull") {
    const BoundingBox b{100, 20, 40, 120};
    const auto hull = pano_to_omni_box(g, poly, b);
    const auto ref = brute_hull(b);
    CHECK(hull.space == Space::omni);
    CHECK(hull.x == doctest::Approx(ref.x).epsilon(1e-3));
    CHECK(hull.y == doctest::Approx(ref.y).epsilon(1e-3));
    CHECK(hull.right() == doctest::Approx(ref.right()).epsilon(1e-3));
    CHECK(hull.bottom() == doctest::Approx(ref.bottom()).epsilon(1e-3));
  }

  SUBCASE("tiny box collapses to a 1x1 hull at the mapped point") {
    const auto hull = pano_to_omni_box(g, poly, {300, 100, 1e-6, 1e-6});
    const Eigen::Vector2d p = pano_to_omni(g, poly, {300, 100});
    CHECK(hull.w == doctest::Approx(1.0));
    CHECK(hull.h == doctest::Approx(1.0));
    CHECK(hull.center_x() == doctest::Approx(p.x()));
    CHECK(hull.center_y() == doctest::Approx(p.y()));
  }

  SUBCASE("box across the seam yields one hull around theta = 0") {
    // Columns 719..721 = 359.5 deg .. 0.5 deg.
    const BoundingBox b{719, 10, 2, 50};
    const auto hull = pano_to_omni_box(g, poly, b);
    const Eigen::Vector2d a = pano_to_omni(g, poly, {719, 10});
    const Eigen::Vector2d c = pano_to_omni(g, poly, {1, 10});
    CHECK(hull.x <= std::min(a.x(), c.x()));
    CHECK(hull.right() >= std::max(a.x(), c.x()));
    CHECK(hull.y <= std::min(a.y(), c.y()));
    CHECK(hull.bottom() >= std::max(a.y(), c.y()));
    CHECK(hull.w < 120);  // not the whole frame
    CHECK(hull.center_x() > 438);
    const auto ref = brute_hull(b);
    CHECK(hull.x == doctest::Approx(ref.x).epsilon(1e-3));
    CHECK(hull.h == doctest::Approx(ref.h).epsilon(1e-2));
  }

  SUBCASE("full-width box covers the annulus bounding square") {
    // Edges are sampled every pixel of arc, so extremes can fall short by the
    // sagitta of a 1 px chord (< 1e-3 px).
    const auto hull = pano_to_omni_box(g, poly, {0, 0, 720, 278});
    const double rho = g.radius - poly.inverse(0);
    CHECK(std::abs(hull.x - (438 - rho)) < 1e-3);
    CHECK(std::abs(hull.y - (438 - rho)) < 1e-3);
    CHECK(std::abs(hull.right() - (438 + rho)) < 1e-3);
    CHECK(std::abs(hull.bottom() - (438 + rho)) < 1e-3);
  }

  SUBCASE("box outside the pano is rejected") {
    CHECK_THROWS_AS(pano_to_omni_box(g, poly, {10, 300, 20, 20}), std::invalid_argument);
    CHECK_THROWS_AS(pano_to_omni_box(g, poly, {10, -40, 20, 20}), std::invalid_argument);
  }
}

TEST_CASE("scale_box") {
  const BoundingBox b{100, 100, 100, 100, Space::omni};
  const auto s = scale_box(b, 876, 876, 96, 96);
  CHECK(s.x == doctest::Approx(10.9589041).epsilon(1e-7));
  CHECK(s.right() == doctest::Approx(21.9178082).epsilon(1e-7));
  CHECK(scale_box(b, 876, 876, 876, 876) == b);
  const auto full = scale_box({0, 0, 876, 876, Space::omni}, 876, 876, 96, 96);
  CHECK(full.x == 0);
  CHECK(full.w == doctest::Approx(96));
  CHECK_THROWS_AS(scale_box(b, 0, 876, 96, 96), std::invalid_argument);
}

TEST_CASE("pixel map sidecar round trip") {
  const auto dir = omnicount::testing::temp_dir("pixelmap");
  OmniGeometry g;
  g.radius = 438;
  const auto map = build_unwarp_map(g, RectifyPoly::identity(438));
  save_pixel_map(dir / "m.map", map);
  const auto back = load_pixel_map(dir / "m.map");
  CHECK(back.geometry == map.geometry);
  CHECK(back.poly == map.poly);
  REQUIRE(back.width() == map.width());
  REQUIRE(back.height() == map.height());
  long diffs = 0;
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      if (map.in_image(r, c) != back.in_image(r, c)) ++diffs;
      else if (map.in_image(r, c) && (map.x(r, c) != back.x(r, c) || map.y(r, c) != back.y(r, c))) ++diffs;
    }
  CHECK(diffs == 0);

  // A cache built for other parameters is replaced.
  const auto rebuilt = cached_unwarp_map(dir / "m.map", OmniGeometry{}, RectifyPoly{});
  CHECK(rebuilt.height() == 278);
  CHECK(load_pixel_map(dir / "m.map").poly == RectifyPoly{});
  CHECK_THROWS(load_pixel_map(dir / "missing.map"));
}
