#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "binlite/tensor.hpp"

namespace binlite {

// Decoded 8-bit RGB image, row-major [h][w][3].
struct RawImage {
  int h = 0, w = 0;
  std::vector<std::uint8_t> rgb;
};

// Decode a PPM(P6, maxval 255) or PNG (8-bit gray / gray+alpha / RGB / RGBA,
// non-interlaced) file. Grayscale is replicated to three channels, alpha is
// dropped. Throws DecodeError naming the file on anything else.
RawImage load_image(const std::string& path);
RawImage decode_image(const std::uint8_t* data, std::size_t size, const std::string& name);

void write_ppm(const std::string& path, const RawImage& img);

// [h,w,3] float tensor with values pixel/255.
Tensor image_to_tensor(const RawImage& img);

// Half-pixel-center bilinear resampling: src = (dst + 0.5) * (in/out) - 0.5,
// clamped to the image, lerp form a + f*(b - a). Identity when extents match.
Tensor resize_bilinear(const Tensor& hwc, int out_h, int out_w);

} // namespace binlite
