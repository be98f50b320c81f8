#pragma once

#include <string_view>

namespace omnicount {

/// Coordinate space a box or frame lives in.
enum class Space { omni, pano, downscaled };

std::string_view to_string(Space space);
Space space_from_string(std::string_view name);

/// Axis-aligned box, top-left corner plus extents, in subpixel units.
///
/// In pano space a box may cross the 360 -> 0 degree seam; this is encoded as
/// x + w > pano width (the box continues from column 0).
struct BoundingBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
  Space space = Space::pano;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }

  static BoundingBox from_corners(double x0, double y0, double x1, double y1,
                                  Space space = Space::pano) {
    return {x0, y0, x1 - x0, y1 - y0, space};
  }

  bool operator==(const BoundingBox&) const = default;
};

/// Intersection over union; 0 for disjoint or degenerate pairs.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Clip to [0, width] x [0, height]. The result may have zero extent.
BoundingBox clip_box(const BoundingBox& box, double width, double height);

/// Per-axis linear rescale from one frame size to another.
BoundingBox scale_box(const BoundingBox& box, double from_width, double from_height,
                      double to_width, double to_height);

}  // namespace omnicount
