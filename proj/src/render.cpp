#include "jsat/render.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <vector>

#include <json.hpp>

#include "jsat/errors.hpp"

namespace jsat {

namespace {

// ---------------------------------------------------------------------------
// minimal PNG writer (8-bit RGB, zlib-compressed)

void push_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

void push_chunk(std::string& out, const char type[4], const std::string& payload) {
  push_u32(out, static_cast<std::uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  push_u32(out, static_cast<std::uint32_t>(crc));
}

std::string encode_png(const std::vector<std::uint8_t>& rgb, int width, int height) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * width));
  for (int y = 0; y < height; ++y) {
    raw.push_back('\0');  // filter: none
    raw.append(reinterpret_cast<const char*>(&rgb[static_cast<std::size_t>(y) * width * 3]),
               static_cast<std::size_t>(width) * 3);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<Bytef> compressed(bound);
  if (compress2(compressed.data(), &bound, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw io_error("PNG compression failed");
  }

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  push_u32(ihdr, static_cast<std::uint32_t>(width));
  push_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  push_chunk(out, "IHDR", ihdr);
  push_chunk(out, "IDAT", std::string(reinterpret_cast<char*>(compressed.data()), bound));
  push_chunk(out, "IEND", "");
  return out;
}

// ---------------------------------------------------------------------------
// 5x7 glyphs for tick labels ("signal/idler nm", digits, sign, dot)

struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kGlyphs[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'s', {0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E}},
    {'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
    {'g', {0x00, 0x00, 0x0F, 0x11, 0x0F, 0x01, 0x0E}},
    {'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
    {'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
    {'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'d', {0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F}},
    {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
    {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
    {'m', {0x00, 0x00, 0x1A, 0x15, 0x15, 0x15, 0x15}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char c) {
  for (const Glyph& g : kGlyphs)
    if (g.ch == c) return &g;
  return nullptr;
}

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), rgb_(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    const std::size_t o = (static_cast<std::size_t>(y) * w_ + x) * 3;
    rgb_[o] = r;
    rgb_[o + 1] = g;
    rgb_[o + 2] = b;
  }

  void text(int x, int y, const std::string& s) {
    for (char c : s) {
      if (const Glyph* g = find_glyph(c)) {
        for (int ry = 0; ry < 7; ++ry)
          for (int rx = 0; rx < 5; ++rx)
            if (g->rows[ry] & (1 << (4 - rx))) set(x + rx, y + ry, 32, 32, 32);
      }
      x += 6;
    }
  }

  /// Rotated 90 deg counter-clockwise, for the vertical axis caption.
  void text_vertical(int x, int y, const std::string& s) {
    for (char c : s) {
      if (const Glyph* g = find_glyph(c)) {
        for (int ry = 0; ry < 7; ++ry)
          for (int rx = 0; rx < 5; ++rx)
            if (g->rows[ry] & (1 << (4 - rx))) set(x + ry, y - rx, 32, 32, 32);
      }
      y -= 6;
    }
  }

  int width() const { return w_; }
  int height() const { return h_; }
  const std::vector<std::uint8_t>& pixels() const { return rgb_; }

 private:
  int w_, h_;
  std::vector<std::uint8_t> rgb_;
};

struct Rgb {
  double r, g, b;
};

constexpr Rgb kViridis[] = {
    {0.267004, 0.004874, 0.329415}, {0.282623, 0.140926, 0.457517},
    {0.253935, 0.265254, 0.529983}, {0.206756, 0.371758, 0.553117},
    {0.163625, 0.471133, 0.558148}, {0.127568, 0.566949, 0.550556},
    {0.134692, 0.658636, 0.517649}, {0.266941, 0.748751, 0.440573},
    {0.477504, 0.821444, 0.318195}, {0.741388, 0.873449, 0.149561},
    {0.993248, 0.906157, 0.143936}};

constexpr Rgb kCoolwarm[] = {{0.230, 0.299, 0.754}, {0.865, 0.865, 0.865}, {0.706, 0.016, 0.150}};

Rgb sample_map(const Rgb* stops, int n, double t) {
  t = std::min(1.0, std::max(0.0, t));
  const double pos = t * (n - 1);
  const int i = std::min(n - 2, static_cast<int>(pos));
  const double f = pos - i;
  return {stops[i].r + f * (stops[i + 1].r - stops[i].r),
          stops[i].g + f * (stops[i + 1].g - stops[i].g),
          stops[i].b + f * (stops[i + 1].b - stops[i].b)};
}

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void render_heatmap(const MatrixCsv& matrix, const std::filesystem::path& out_png,
                    const RenderOptions& options) {
  const ArrayXXd& m = matrix.values;
  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      if (std::isfinite(m(r, c))) {
        lo = std::min(lo, m(r, c));
        hi = std::max(hi, m(r, c));
      }
  if (!(hi >= lo)) throw validation_error("matrix has no finite values to render");

  std::string cmap = options.colormap;
  if (cmap == "auto") cmap = lo < 0.0 && hi > 0.0 ? "coolwarm" : "viridis";
  const bool diverging = cmap == "coolwarm";
  double vmin = lo, vmax = hi;
  if (diverging) {
    const double a = std::max(std::abs(lo), std::abs(hi));
    vmin = -a;
    vmax = a;
  }
  if (vmax == vmin) vmax = vmin + 1.0;

  const int cell = std::max(1, options.cell_px);
  const int left = 58, bottom = 30, top = 8, right = 10;
  const int plot_w = static_cast<int>(m.cols()) * cell;
  const int plot_h = static_cast<int>(m.rows()) * cell;
  Canvas canvas(left + plot_w + right, top + plot_h + bottom);

  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      Rgb col{0.5, 0.5, 0.5};  // NaN cells stay gray
      if (std::isfinite(m(r, c))) {
        const double t = (m(r, c) - vmin) / (vmax - vmin);
        col = diverging ? sample_map(kCoolwarm, 3, t) : sample_map(kViridis, 11, t);
      }
      const auto r8 = static_cast<std::uint8_t>(std::lround(col.r * 255));
      const auto g8 = static_cast<std::uint8_t>(std::lround(col.g * 255));
      const auto b8 = static_cast<std::uint8_t>(std::lround(col.b * 255));
      // row 0 (smallest signal wavelength) at the bottom
      const int y0 = top + plot_h - static_cast<int>(r + 1) * cell;
      const int x0 = left + static_cast<int>(c) * cell;
      for (int dy = 0; dy < cell; ++dy)
        for (int dx = 0; dx < cell; ++dx)
          canvas.set(x0 + dx, y0 + dy, r8, g8, b8);
    }
  }

  // frame
  for (int x = left - 1; x <= left + plot_w; ++x) {
    canvas.set(x, top - 1, 0, 0, 0);
    canvas.set(x, top + plot_h, 0, 0, 0);
  }
  for (int y = top - 1; y <= top + plot_h; ++y) {
    canvas.set(left - 1, y, 0, 0, 0);
    canvas.set(left + plot_w, y, 0, 0, 0);
  }

  // ticks in nm when the CSV carried axis headers
  if (matrix.has_axes) {
    for (int tick = 0; tick <= 2; ++tick) {
      const Index c = tick * (m.cols() - 1) / 2;
      const double value = matrix.col_start_nm + matrix.col_step_nm * static_cast<double>(c);
      const int x = left + static_cast<int>(c) * cell + cell / 2;
      for (int dy = 0; dy < 4; ++dy) canvas.set(x, top + plot_h + dy, 0, 0, 0);
      const std::string label = format_tick(value);
      canvas.text(x - static_cast<int>(label.size()) * 3, top + plot_h + 6, label);
    }
    for (int tick = 0; tick <= 2; ++tick) {
      const Index r = tick * (m.rows() - 1) / 2;
      const double value = matrix.row_start_nm + matrix.row_step_nm * static_cast<double>(r);
      const int y = top + plot_h - static_cast<int>(r) * cell - cell / 2;
      for (int dx = 0; dx < 4; ++dx) canvas.set(left - 1 - dx, y, 0, 0, 0);
      const std::string label = format_tick(value);
      canvas.text(left - 6 - static_cast<int>(label.size()) * 6, y - 3, label);
    }
    canvas.text(left + plot_w / 2 - 33, top + plot_h + 18, "idler nm");
    canvas.text_vertical(2, top + plot_h / 2 + 27, "signal nm");
  }

  atomic_write(out_png, encode_png(canvas.pixels(), canvas.width(), canvas.height()));

  nlohmann::json sidecar{{"min", vmin},
                         {"max", vmax},
                         {"data_min", lo},
                         {"data_max", hi},
                         {"colormap", cmap},
                         {"centered_at_zero", diverging}};
  atomic_write(out_png.string() + ".json", sidecar.dump(2) + "\n");
}

}  // namespace jsat
