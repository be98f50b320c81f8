#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace omnicount {

struct ConvLayer {
  int kernel;
  int stride;
  int in_channels;
  int out_channels;
  int pad;
};

struct MaxPoolLayer {
  int size;
  int stride;
};

/// Reorg shortcut: take layer `from`'s output, optionally project it with a
/// 1x1 conv to `projection` channels, space-to-depth it down to the current
/// grid and concatenate onto the current tensor.
struct PassthroughLayer {
  int from;
  int projection = 0;  // 0 = no projection
};

struct HeadLayer {};

using Layer = std::variant<ConvLayer, MaxPoolLayer, PassthroughLayer, HeadLayer>;

/// Ordered layer list of a single-shot detector backbone.
struct NetSpec {
  std::vector<Layer> layers;
  int input_channels = 3;

  /// Product of conv and pool strides.
  int downsample_factor() const;

  /// Throws std::invalid_argument on broken channel chaining or bad references.
  void validate() const;
};

/// Text form: one layer per line,
///   conv <k> <s> <c_in> <c_out> <pad>
///   maxpool <k> <s>
///   passthrough <from> [projection]
///   head
/// `#` starts a comment. Layer indices count layer lines from 0.
NetSpec parse_netspec(std::string_view text);
NetSpec load_netspec(const std::filesystem::path& path);

class IllegalResolution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Smallest square input leaving a 3x3 grid at the head: 3 * downsample factor.
int min_input_resolution(const NetSpec& net);

/// Conv FLOPs, two ops per multiply-add, bias/BN/activation excluded.
/// Throws IllegalResolution below the minimum or off the stride grid.
std::int64_t flops(const NetSpec& net, int input_height, int input_width);
inline std::int64_t flops(const NetSpec& net, int input_resolution) {
  return flops(net, input_resolution, input_resolution);
}

/// round(sensor / net): the blur kernel whose privacy effect matches downsampling.
int equivalent_blur_kernel(int sensor_resolution, int net_resolution);

struct ResolutionProfile {
  int input_resolution;
  bool legal;
  std::optional<std::int64_t> flops;
  int equivalent_blur_kernel;
};

std::vector<ResolutionProfile> profile_sweep(const NetSpec& net, int sensor_resolution,
                                             std::span<const int> resolutions);

/// CSV with header `resolution,legal,flops,blur_kernel`; flops empty when illegal.
std::string sweep_csv(std::span<const ResolutionProfile> profiles);

}  // namespace omnicount
