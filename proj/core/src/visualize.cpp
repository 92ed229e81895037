#include "gmrw/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gmrw {

namespace {

// Middlebury-style color wheel.
struct ColorWheel {
  std::vector<std::array<double, 3>> colors;

  ColorWheel() {
    const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    auto push_ramp = [&](int count, int from, int to, bool up) {
      for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / count;
        std::array<double, 3> c{0.0, 0.0, 0.0};
        c[from] = up ? 1.0 : 1.0 - t;
        c[to] = up ? t : 1.0;
        colors.push_back(c);
      }
    };
    push_ramp(RY, 0, 1, true);   // red -> yellow
    push_ramp(YG, 0, 1, false);  // yellow -> green
    push_ramp(GC, 1, 2, true);   // green -> cyan
    push_ramp(CB, 1, 2, false);  // cyan -> blue
    push_ramp(BM, 2, 0, true);   // blue -> magenta
    push_ramp(MR, 2, 0, false);  // magenta -> red
  }

  std::array<double, 3> sample(double fx, double fy) const {
    const double rad = std::hypot(fx, fy);
    const double angle = std::atan2(-fy, -fx) / 3.14159265358979323846;
    const double fk = (angle + 1.0) / 2.0 * (colors.size() - 1);
    const int k0 = static_cast<int>(std::floor(fk));
    const int k1 = (k0 + 1) % static_cast<int>(colors.size());
    const double f = fk - k0;
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
      double col = (1.0 - f) * colors[k0][c] + f * colors[k1][c];
      col = 1.0 - std::min(rad, 1.0) * (1.0 - col);  // desaturate toward white
      out[c] = col;
    }
    return out;
  }
};

}  // namespace

Image flow_to_color(const MotionField& field, double max_magnitude) {
  static const ColorWheel wheel;
  const CoordinateGrid& g = field.grid;
  double max_mag = max_magnitude;
  if (max_mag <= 0.0) {
    for (Eigen::Index i = 0; i < field.flow.rows(); ++i) {
      max_mag = std::max(max_mag, field.flow.row(i).norm());
    }
    max_mag = std::max(max_mag, 1e-3);
  }
  Image out(g.rows, g.cols, 3);
  for (int r = 0; r < g.rows; ++r) {
    for (int q = 0; q < g.cols; ++q) {
      const int i = g.index(r, q);
      const auto rgb = wheel.sample(field.flow(i, 0) / max_mag,
                                    field.flow(i, 1) / max_mag);
      for (int c = 0; c < 3; ++c) out.at(r, q, c) = rgb[c];
    }
  }
  return out;
}

}  // namespace gmrw
