#include "omnicount/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace omnicount {

Image<float> load_image(const std::filesystem::path& path) {
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw std::runtime_error("unreadable image " + path.string());
  cv::Mat mat;
  raw.convertTo(mat, CV_32F, raw.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
  std::vector<cv::Mat> channels;
  cv::split(mat, channels);
  std::vector<Plane<float>> planes;
  for (const auto& ch : channels) {
    Plane<float> p(ch.rows, ch.cols);
    for (int y = 0; y < ch.rows; ++y) {
      const float* row = ch.ptr<float>(y);
      std::copy(row, row + ch.cols, p.row(y).data());
    }
    planes.push_back(std::move(p));
  }
  return Image<float>(std::move(planes));
}

void save_png(const std::filesystem::path& path, const Image<float>& image) {
  if (image.empty()) throw std::invalid_argument("cannot write an empty image");
  std::vector<cv::Mat> channels;
  for (int c = 0; c < image.channels(); ++c) {
    cv::Mat ch(image.height(), image.width(), CV_8U);
    const auto& p = image.plane(c);
    for (int y = 0; y < image.height(); ++y) {
      auto* row = ch.ptr<unsigned char>(y);
      for (int x = 0; x < image.width(); ++x) {
        row[x] = static_cast<unsigned char>(std::clamp(std::nearbyint(p(y, x)), 0.0f, 255.0f));
      }
    }
    channels.push_back(ch);
  }
  cv::Mat merged;
  cv::merge(channels, merged);
  if (!cv::imwrite(path.string(), merged)) throw std::runtime_error("failed writing " + path.string());
}

bool is_image_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace omnicount
