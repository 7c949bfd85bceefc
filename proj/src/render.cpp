#include "tde3/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace tde3 {

Rgb flow_color(double vx, double vy, double v_max) {
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  const double mag = std::hypot(vx, vy);
  if (mag == 0.0 || !std::isfinite(mag)) return {};
  double hue = std::atan2(-vy, vx) * 180.0 / std::numbers::pi;
  if (hue < 0.0) hue += 360.0;
  const double value = std::min(mag / v_max, 1.0);

  // HSV to RGB with S = 1.
  const double h6 = hue / 60.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = 0.0, q = value * (1.0 - f), t = value * f;
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = value, g = t, b = p; break;
    case 1: r = q, g = value, b = p; break;
    case 2: r = p, g = value, b = t; break;
    case 3: r = p, g = q, b = value; break;
    case 4: r = t, g = p, b = value; break;
    default: r = value, g = p, b = q; break;
  }
  auto byte = [](double c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
  };
  return {byte(r), byte(g), byte(b)};
}

std::vector<Rgb> render_flow(const FlowField& flow, std::size_t bin, double v_max) {
  if (bin >= flow.bins()) throw std::out_of_range("flow bin out of range");
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  std::vector<Rgb> img(static_cast<std::size_t>(flow.width()) * flow.height());
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      const std::size_t i = flow.index(bin, y, x);
      if (flow.valid(i))
        img[static_cast<std::size_t>(y) * flow.width() + x] =
            flow_color(flow.vx(i), flow.vy(i), v_max);
    }
  return img;
}

void render_flow_png(const FlowField& flow, std::size_t bin, double v_max,
                     const std::filesystem::path& path) {
  const auto img = render_flow(flow, bin, v_max);
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(flow.width()),
               static_cast<png_uint_32>(flow.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(flow.width()) * 3);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const Rgb& c = img[static_cast<std::size_t>(y) * flow.width() + x];
      row[3 * x] = c.r;
      row[3 * x + 1] = c.g;
      row[3 * x + 2] = c.b;
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace tde3
