#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace omnicount {

template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Planar multi-channel raster. Each channel is a height x width row-major array.
template <typename Scalar>
class Image {
 public:
  using PlaneType = Plane<Scalar>;

  Image() = default;
  Image(int width, int height, int channels = 1, Scalar fill = Scalar(0)) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw std::invalid_argument("image dimensions must be positive");
    }
    planes_.assign(channels, PlaneType::Constant(height, width, fill));
  }
  explicit Image(std::vector<PlaneType> planes) : planes_(std::move(planes)) {
    for (const auto& p : planes_) {
      if (p.rows() != planes_.front().rows() || p.cols() != planes_.front().cols()) {
        throw std::invalid_argument("image planes differ in size");
      }
    }
  }

  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_.front().cols()); }
  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_.front().rows()); }
  int channels() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty(); }

  PlaneType& plane(int c) { return planes_[c]; }
  const PlaneType& plane(int c) const { return planes_[c]; }

  Scalar& operator()(int x, int y, int c = 0) { return planes_[c](y, x); }
  Scalar operator()(int x, int y, int c = 0) const { return planes_[c](y, x); }

  bool operator==(const Image& other) const {
    if (channels() != other.channels() || width() != other.width() ||
        height() != other.height()) {
      return false;
    }
    for (int c = 0; c < channels(); ++c) {
      if (!(planes_[c] == other.planes_[c]).all()) return false;
    }
    return true;
  }

 private:
  std::vector<PlaneType> planes_;
};

namespace detail {

// Row i of the result holds the fraction of source cell j covered by
// destination cell i, normalised so each row sums to one.
inline Eigen::MatrixXd area_weights(int src, int dst) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dst, src);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    const int j0 = static_cast<int>(std::floor(lo));
    const int j1 = std::min(src, static_cast<int>(std::ceil(hi)));
    for (int j = j0; j < j1; ++j) {
      const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
      if (overlap > 0) w(i, j) = overlap / scale;
    }
  }
  return w;
}

}  // namespace detail

/// Area-averaging (box filter) resample to an arbitrary smaller or larger size.
template <typename Scalar>
Image<Scalar> downscale_area(const Image<Scalar>& src, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("target size must be positive");
  if (src.empty()) throw std::invalid_argument("empty source image");
  const Eigen::MatrixXd wy = detail::area_weights(src.height(), height);
  const Eigen::MatrixXd wx = detail::area_weights(src.width(), width);
  std::vector<Plane<Scalar>> planes;
  planes.reserve(src.channels());
  for (int c = 0; c < src.channels(); ++c) {
    const Eigen::MatrixXd p = src.plane(c).matrix().template cast<double>();
    const Eigen::MatrixXd out = wy * p * wx.transpose();
    planes.push_back(out.array().template cast<Scalar>());
  }
  return Image<Scalar>(std::move(planes));
}

}  // namespace omnicount
