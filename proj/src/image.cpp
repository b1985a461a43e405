#include "binlite/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "binlite/error.hpp"

namespace binlite {

namespace {

RawImage decode_ppm(const std::uint8_t* data, std::size_t size, const std::string& name) {
  std::size_t pos = 2; // caller checked the "P6" magic
  auto skip_ws = [&] {
    while (pos < size) {
      if (data[pos] == '#') {
        while (pos < size && data[pos] != '\n') ++pos;
      } else if (std::isspace(data[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_ws();
    if (pos >= size || !std::isdigit(data[pos]))
      throw DecodeError(name + ": malformed PPM header");
    long v = 0;
    while (pos < size && std::isdigit(data[pos])) v = v * 10 + (data[pos++] - '0');
    return v;
  };
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w < 1 || h < 1) throw DecodeError(name + ": PPM with non-positive extents");
  if (maxval != 255) throw DecodeError(name + ": only maxval 255 PPM is supported");
  if (pos >= size || !std::isspace(data[pos]))
    throw DecodeError(name + ": malformed PPM header");
  ++pos; // single whitespace before the raster
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (size - pos < need) throw DecodeError(name + ": truncated PPM raster");
  RawImage img;
  img.w = static_cast<int>(w);
  img.h = static_cast<int>(h);
  img.rgb.assign(data + pos, data + pos + need);
  return img;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

RawImage decode_png(const std::uint8_t* data, std::size_t size, const std::string& name) {
  static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  if (size < 8 || std::memcmp(data, sig, 8) != 0)
    throw DecodeError(name + ": bad PNG signature");

  std::size_t pos = 8;
  int w = 0, h = 0, color_type = -1, channels = 0;
  std::vector<std::uint8_t> idat;
  bool saw_ihdr = false, saw_iend = false;

  while (pos + 12 <= size) {
    const std::uint32_t len = be32(data + pos);
    const char* type = reinterpret_cast<const char*>(data + pos + 4);
    if (pos + 12 + len > size) throw DecodeError(name + ": truncated PNG chunk");
    const std::uint8_t* body = data + pos + 8;
    const std::uint32_t want_crc = be32(data + pos + 8 + len);
    std::uint32_t crc = static_cast<std::uint32_t>(crc32(0L, Z_NULL, 0));
    crc = static_cast<std::uint32_t>(crc32(crc, data + pos + 4, len + 4));
    if (crc != want_crc) throw DecodeError(name + ": PNG chunk CRC mismatch");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw DecodeError(name + ": bad IHDR");
      w = static_cast<int>(be32(body));
      h = static_cast<int>(be32(body + 4));
      const int depth = body[8];
      color_type = body[9];
      const int interlace = body[12];
      if (depth != 8) throw DecodeError(name + ": only 8-bit PNG is supported");
      if (interlace != 0) throw DecodeError(name + ": interlaced PNG is not supported");
      if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
        throw DecodeError(name + ": unsupported PNG color type " + std::to_string(color_type));
      channels = color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 4 ? 2 : 4;
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), body, body + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
      break;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend || idat.empty())
    throw DecodeError(name + ": truncated PNG (missing chunks)");
  if (w < 1 || h < 1) throw DecodeError(name + ": PNG with non-positive extents");

  const std::size_t stride = static_cast<std::size_t>(w) * static_cast<std::size_t>(channels);
  const std::size_t raw_size = (stride + 1) * static_cast<std::size_t>(h);
  std::vector<std::uint8_t> raw(raw_size);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw DecodeError(name + ": inflate init failed");
  zs.next_in = idat.data();
  zs.avail_in = static_cast<uInt>(idat.size());
  zs.next_out = raw.data();
  zs.avail_out = static_cast<uInt>(raw.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != raw_size)
    throw DecodeError(name + ": PNG image data is corrupt or truncated");

  // undo the per-row filters in place
  std::vector<std::uint8_t> prev(stride, 0);
  std::vector<std::uint8_t> rowbuf(stride);
  RawImage img;
  img.w = w;
  img.h = h;
  img.rgb.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
  const int bpp = channels;
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    const int filter = src[0];
    const std::uint8_t* line = src + 1;
    for (std::size_t x = 0; x < stride; ++x) {
      const int a = x >= static_cast<std::size_t>(bpp) ? rowbuf[x - bpp] : 0;
      const int b = prev[x];
      const int c = x >= static_cast<std::size_t>(bpp) ? prev[x - bpp] : 0;
      int v = line[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw DecodeError(name + ": unknown PNG filter " + std::to_string(filter));
      }
      rowbuf[x] = static_cast<std::uint8_t>(v);
    }
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* px = rowbuf.data() + static_cast<std::size_t>(x) * bpp;
      std::uint8_t* out = img.rgb.data() + (static_cast<std::size_t>(y) * w + x) * 3;
      if (channels >= 3) {
        out[0] = px[0];
        out[1] = px[1];
        out[2] = px[2];
      } else {
        out[0] = out[1] = out[2] = px[0];
      }
    }
    prev = rowbuf;
  }
  return img;
}

} // namespace

RawImage decode_image(const std::uint8_t* data, std::size_t size, const std::string& name) {
  if (size >= 2 && data[0] == 'P' && data[1] == '6') return decode_ppm(data, size, name);
  if (size >= 8 && data[0] == 137 && data[1] == 'P') return decode_png(data, size, name);
  throw DecodeError(name + ": unrecognized image format (PPM P6 or PNG expected)");
}

RawImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DecodeError(path + ": cannot open file");
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(buf.data()), size);
  if (!in) throw DecodeError(path + ": short read");
  return decode_image(buf.data(), buf.size(), path);
}

void write_ppm(const std::string& path, const RawImage& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "P6\n" << img.w << " " << img.h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

Tensor image_to_tensor(const RawImage& img) {
  Tensor t({img.h, img.w, 3});
  const std::int64_t n = t.numel();
  for (std::int64_t i = 0; i < n; ++i)
    t[i] = static_cast<float>(img.rgb[static_cast<std::size_t>(i)]) / 255.0f;
  return t;
}

Tensor resize_bilinear(const Tensor& hwc, int out_h, int out_w) {
  if (hwc.rank() != 3) throw ShapeError("resize_bilinear: input must be [h,w,c]");
  const int h = hwc.extent(0), w = hwc.extent(1), c = hwc.extent(2);
  if (h == out_h && w == out_w) return hwc;
  Tensor out({out_h, out_w, c});
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const float ty = static_cast<float>(fy - y0);
    for (int ox = 0; ox < out_w; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      fx = std::min(std::max(fx, 0.0), static_cast<double>(w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const float tx = static_cast<float>(fx - x0);
      for (int cc = 0; cc < c; ++cc) {
        const float v00 = hwc.at(y0, x0, cc);
        const float v01 = hwc.at(y0, x1, cc);
        const float v10 = hwc.at(y1, x0, cc);
        const float v11 = hwc.at(y1, x1, cc);
        const float top = v00 + tx * (v01 - v00);
        const float bot = v10 + tx * (v11 - v10);
        out.at(oy, ox, cc) = top + ty * (bot - top);
      }
    }
  }
  return out;
}

} // namespace binlite
