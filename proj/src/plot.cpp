#include "perturbench/plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace perturbench {
namespace {

struct Color {
  unsigned char r, g, b;
};

constexpr Color kWhite{255, 255, 255};
constexpr Color kBlack{20, 20, 20};
constexpr Color kGrid{225, 225, 225};
constexpr Color kAxis{90, 90, 90};

const std::array<Color, 6> kSeriesColors = {{
    {214, 69, 65},
    {31, 119, 180},
    {44, 160, 44},
    {255, 127, 14},
    {148, 103, 189},
    {23, 163, 152},
}};

// 5x7 glyphs, one byte per row, low five bits left-to-right from bit 4.
using Glyph = std::array<unsigned char, 7>;

const Glyph* find_glyph(char c) {
  static const struct {
    char c;
    Glyph rows;
  } table[] = {
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
      {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
      {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
      {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
      {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
      {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
      {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
      {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
      {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
      {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
      {'B', {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e}},
      {'C', {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}},
      {'D', {0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c}},
      {'E', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}},
      {'F', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10}},
      {'G', {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}},
      {'H', {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
      {'I', {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f}},
      {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
      {'P', {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10}},
      {'Q', {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}},
      {'R', {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11}},
      {'S', {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}},
      {'T', {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a}},
      {'X', {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04}},
      {'Z', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
      {',', {0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x08}},
      {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
      {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
      {':', {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00}},
      {'/', {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'%', {0x19, 0x1a, 0x02, 0x04, 0x08, 0x0b, 0x13}},
      {'=', {0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
  };
  const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& entry : table)
    if (entry.c == upper) return &entry.rows;
  return nullptr;
}

class Canvas {
 public:
  Canvas(int width, int height)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * height * 3, 255) {}

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<unsigned char>& pixels() const { return pixels_; }

  void set(int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    const std::size_t at = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[at] = c.r;
    pixels_[at + 1] = c.g;
    pixels_[at + 2] = c.b;
  }

  void fill_rect(int x, int y, int w, int h, Color c) {
    for (int j = y; j < y + h; ++j)
      for (int i = x; i < x + w; ++i) set(i, j, c);
  }

  void line(int x0, int y0, int x1, int y1, Color c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }

  void thick_line(int x0, int y0, int x1, int y1, Color c) {
    line(x0, y0, x1, y1, c);
    line(x0, y0 + 1, x1, y1 + 1, c);
  }

  void text(int x, int y, const std::string& s, Color c, int scale = 1) {
    static const Glyph box = {0x1f, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1f};
    for (char ch : s) {
      const Glyph* glyph = find_glyph(ch);
      if (glyph == nullptr) glyph = &box;
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if ((*glyph)[static_cast<std::size_t>(row)] & (0x10 >> col))
            fill_rect(x + col * scale, y + row * scale, scale, scale, c);
      x += 6 * scale;
    }
  }

  static int text_width(const std::string& s, int scale = 1) {
    return static_cast<int>(s.size()) * 6 * scale - (s.empty() ? 0 : scale);
  }

 private:
  int width_, height_;
  std::vector<unsigned char> pixels_;
};

void put_chunk(std::vector<unsigned char>& out, const char type[5],
               const std::vector<unsigned char>& data) {
  auto put_be32 = [&](std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>(v & 0xff));
  };
  put_be32(static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_be32(static_cast<std::uint32_t>(crc));
}

void write_png(const std::filesystem::path& path, const Canvas& canvas) {
  const int w = canvas.width(), h = canvas.height();
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + 3 * static_cast<std::size_t>(w)));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    const auto* row = canvas.pixels().data() + static_cast<std::size_t>(y) * w * 3;
    raw.insert(raw.end(), row, row + static_cast<std::size_t>(w) * 3);
  }

  uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png: deflate failed");
  compressed.resize(compressed_size);

  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr(13, 0);
  ihdr[0] = static_cast<unsigned char>(w >> 24);
  ihdr[1] = static_cast<unsigned char>((w >> 16) & 0xff);
  ihdr[2] = static_cast<unsigned char>((w >> 8) & 0xff);
  ihdr[3] = static_cast<unsigned char>(w & 0xff);
  ihdr[4] = static_cast<unsigned char>(h >> 24);
  ihdr[5] = static_cast<unsigned char>((h >> 16) & 0xff);
  ihdr[6] = static_cast<unsigned char>((h >> 8) & 0xff);
  ihdr[7] = static_cast<unsigned char>(h & 0xff);
  ihdr[8] = 8;  // bit depth
  ihdr[9] = 2;  // truecolor
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", {});

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write png: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("short write on png: " + path.string());
}

double nice_step(double range, int target_ticks) {
  const double raw = range / std::max(target_ticks, 1);
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  const double normalized = raw / magnitude;
  double step;
  if (normalized < 1.5) step = 1.0;
  else if (normalized < 3.5) step = 2.0;
  else if (normalized < 7.5) step = 5.0;
  else step = 10.0;
  return step * magnitude;
}

std::string format_tick(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%g", v);
  return buffer;
}

}  // namespace

void render_line_plot(const std::vector<PlotSeries>& series,
                      const PlotOptions& options,
                      const std::filesystem::path& path) {
  for (const PlotSeries& s : series)
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("render_line_plot: series '" + s.label +
                                  "' has mismatched x/y lengths");

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const PlotSeries& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  if (!(x_min <= x_max)) { x_min = 0; x_max = 1; y_min = 0; y_max = 1; }
  if (x_min == x_max) { x_min -= 0.5; x_max += 0.5; }
  if (y_min == y_max) {
    const double pad = y_min == 0 ? 1.0 : std::abs(y_min) * 0.1;
    y_min -= pad; y_max += pad;
  }
  const double y_pad = (y_max - y_min) * 0.06;
  y_min -= y_pad;
  y_max += y_pad;

  Canvas canvas(options.width, options.height);
  const int left = 78, right = options.width - 24;
  const int top = 46, bottom = options.height - 56;

  auto to_px = [&](double x) {
    return left + static_cast<int>(std::lround((x - x_min) / (x_max - x_min) *
                                               (right - left)));
  };
  auto to_py = [&](double y) {
    return bottom - static_cast<int>(std::lround((y - y_min) / (y_max - y_min) *
                                                 (bottom - top)));
  };

  const double x_step = nice_step(x_max - x_min, 6);
  for (double t = std::ceil(x_min / x_step) * x_step; t <= x_max + 1e-12;
       t += x_step) {
    const int px = to_px(t);
    canvas.line(px, top, px, bottom, kGrid);
    const std::string label = format_tick(t);
    canvas.text(px - Canvas::text_width(label) / 2, bottom + 8, label, kAxis);
  }
  const double y_step = nice_step(y_max - y_min, 6);
  for (double t = std::ceil(y_min / y_step) * y_step; t <= y_max + 1e-12;
       t += y_step) {
    const int py = to_py(t);
    canvas.line(left, py, right, py, kGrid);
    const std::string label = format_tick(t);
    canvas.text(left - Canvas::text_width(label) - 8, py - 3, label, kAxis);
  }
  canvas.line(left, top, left, bottom, kBlack);
  canvas.line(left, bottom, right, bottom, kBlack);

  canvas.text((options.width - Canvas::text_width(options.title, 2)) / 2, 12,
              options.title, kBlack, 2);
  canvas.text((left + right) / 2 - Canvas::text_width(options.x_label) / 2,
              options.height - 22, options.x_label, kBlack);
  canvas.text(8, top - 22, options.y_label, kBlack);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color color = kSeriesColors[s % kSeriesColors.size()];
    const auto& xs = series[s].x;
    const auto& ys = series[s].y;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
      canvas.thick_line(to_px(xs[i]), to_py(ys[i]), to_px(xs[i + 1]),
                        to_py(ys[i + 1]), color);
    if (xs.size() == 1)
      canvas.fill_rect(to_px(xs[0]) - 2, to_py(ys[0]) - 2, 5, 5, color);
  }

  int legend_y = top + 8;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color color = kSeriesColors[s % kSeriesColors.size()];
    const int label_width = Canvas::text_width(series[s].label);
    const int legend_x = right - label_width - 26;
    canvas.fill_rect(legend_x, legend_y, 14, 4, color);
    canvas.text(legend_x + 20, legend_y - 2, series[s].label, kBlack);
    legend_y += 14;
  }

  write_png(path, canvas);
}

}  // namespace perturbench
