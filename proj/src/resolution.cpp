#include "omnicount/resolution.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace omnicount {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct Shape {
  int h;
  int w;
  int c;
};

int conv_out(int in, const ConvLayer& l) { return (in + 2 * l.pad - l.kernel) / l.stride + 1; }
int pool_out(int in, const MaxPoolLayer& l) { return (in + l.stride - 1) / l.stride; }

// Walks the net, calling on_conv(layer, out_h, out_w) for every conv
// (including passthrough projections). Returns per-layer output shapes.
template <typename OnConv>
std::vector<Shape> walk(const NetSpec& net, int h, int w, OnConv&& on_conv) {
  std::vector<Shape> shapes;
  shapes.reserve(net.layers.size());
  Shape cur{h, w, net.input_channels};
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const std::string where = fmt::format("layer {}", i);
    std::visit(overloaded{
                   [&](const ConvLayer& l) {
                     if (l.in_channels != cur.c) {
                       throw std::invalid_argument(fmt::format(
                           "{}: conv expects {} input channels, previous layer gives {}", where,
                           l.in_channels, cur.c));
                     }
                     cur = {conv_out(cur.h, l), conv_out(cur.w, l), l.out_channels};
                     if (cur.h <= 0 || cur.w <= 0) throw std::invalid_argument(where + ": grid vanished");
                     on_conv(l, cur.h, cur.w);
                   },
                   [&](const MaxPoolLayer& l) { cur = {pool_out(cur.h, l), pool_out(cur.w, l), cur.c}; },
                   [&](const PassthroughLayer& l) {
                     if (l.from < 0 || static_cast<std::size_t>(l.from) >= i) {
                       throw std::invalid_argument(where + ": passthrough must reference an earlier layer");
                     }
                     const Shape src = shapes[l.from];
                     int channels = src.c;
                     if (l.projection > 0) {
                       on_conv(ConvLayer{1, 1, src.c, l.projection, 0}, src.h, src.w);
                       channels = l.projection;
                     }
                     if (src.h % cur.h != 0 || src.w % cur.w != 0 || src.h / cur.h != src.w / cur.w) {
                       throw std::invalid_argument(where + ": passthrough source grid is not an integer multiple");
                     }
                     const int s = src.h / cur.h;
                     cur.c += channels * s * s;
                   },
                   [&](const HeadLayer&) {},
               },
               net.layers[i]);
    shapes.push_back(cur);
  }
  return shapes;
}

}  // namespace

int NetSpec::downsample_factor() const {
  int f = 1;
  for (const auto& layer : layers) {
    if (const auto* c = std::get_if<ConvLayer>(&layer)) f *= c->stride;
    if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) f *= p->stride;
  }
  return f;
}

void NetSpec::validate() const {
  for (const auto& layer : layers) {
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      if (c->kernel <= 0 || c->stride <= 0 || c->in_channels <= 0 || c->out_channels <= 0 || c->pad < 0) {
        throw std::invalid_argument("conv parameters must be positive");
      }
    }
    if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
      if (p->size <= 0 || p->stride <= 0) throw std::invalid_argument("maxpool parameters must be positive");
    }
  }
  // A large multiple of the downsample factor exercises chaining without
  // tripping grid-size limits.
  const int probe = 64 * downsample_factor();
  walk(*this, probe, probe, [](const ConvLayer&, int, int) {});
}

NetSpec parse_netspec(std::string_view text) {
  NetSpec net;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    auto bad = [&](const std::string& what) {
      return std::invalid_argument(fmt::format("line {}: {}", lineno, what));
    };
    if (kind == "conv") {
      ConvLayer l{};
      if (!(fields >> l.kernel >> l.stride >> l.in_channels >> l.out_channels >> l.pad)) {
        throw bad("expected 'conv k s c_in c_out pad'");
      }
      net.layers.emplace_back(l);
    } else if (kind == "maxpool") {
      MaxPoolLayer l{};
      if (!(fields >> l.size >> l.stride)) throw bad("expected 'maxpool k s'");
      net.layers.emplace_back(l);
    } else if (kind == "passthrough") {
      PassthroughLayer l{};
      if (!(fields >> l.from)) throw bad("expected 'passthrough <from> [projection]'");
      if (!(fields >> l.projection)) l.projection = 0;
      net.layers.emplace_back(l);
    } else if (kind == "head") {
      net.layers.emplace_back(HeadLayer{});
    } else {
      throw bad("unknown layer '" + kind + "'");
    }
    std::string extra;
    if (fields.clear(), fields >> extra) throw bad("trailing text '" + extra + "'");
  }
  if (net.layers.empty()) throw std::invalid_argument("architecture has no layers");
  net.validate();
  return net;
}

NetSpec load_netspec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open architecture file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_netspec(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

int min_input_resolution(const NetSpec& net) { return 3 * net.downsample_factor(); }

std::int64_t flops(const NetSpec& net, int input_height, int input_width) {
  const int min_res = min_input_resolution(net);
  const int factor = net.downsample_factor();
  for (int dim : {input_height, input_width}) {
    if (dim < min_res || dim % factor != 0) {
      throw IllegalResolution(fmt::format(
          "input {} is illegal: need a multiple of {} no smaller than 3 x {} = {}", dim, factor,
          factor, min_res));
    }
  }
  std::int64_t total = 0;
  walk(net, input_height, input_width, [&](const ConvLayer& l, int h, int w) {
    total += std::int64_t{2} * l.kernel * l.kernel * l.in_channels * l.out_channels * h * w;
  });
  return total;
}

int equivalent_blur_kernel(int sensor_resolution, int net_resolution) {
  if (sensor_resolution <= 0 || net_resolution <= 0) {
    throw std::invalid_argument("resolutions must be positive");
  }
  return static_cast<int>(std::lround(static_cast<double>(sensor_resolution) / net_resolution));
}

std::vector<ResolutionProfile> profile_sweep(const NetSpec& net, int sensor_resolution,
                                             std::span<const int> resolutions) {
  std::vector<ResolutionProfile> out;
  out.reserve(resolutions.size());
  for (int r : resolutions) {
    ResolutionProfile p{r, false, std::nullopt, r > 0 ? equivalent_blur_kernel(sensor_resolution, r) : 0};
    try {
      p.flops = flops(net, r);
      p.legal = true;
    } catch (const IllegalResolution&) {
    }
    out.push_back(p);
  }
  return out;
}

std::string sweep_csv(std::span<const ResolutionProfile> profiles) {
  std::string out = "resolution,legal,flops,blur_kernel\n";
  for (const auto& p : profiles) {
    out += fmt::format("{},{},{},{}\n", p.input_resolution, p.legal ? "true" : "false",
                       p.flops ? fmt::to_string(*p.flops) : "", p.equivalent_blur_kernel);
  }
  return out;
}

}  // namespace omnicount
