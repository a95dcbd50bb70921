#include "nvis/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nvis/error.hpp"

namespace nvis {

namespace {

std::uint8_t quantize(double v, double lo, double hi) {
  const double scaled = (v - lo) / (hi - lo) * 255.0;
  return static_cast<std::uint8_t>(std::clamp(std::floor(scaled + 0.5), 0.0, 255.0));
}

}  // namespace

GrayImage render_feature_map(const Tensor& t, std::size_t channel) {
  std::span<const float> values;
  GrayImage image;
  if (t.rank() == 3) {
    values = t.channel(channel);  // throws kRange
    image.height = t.dim(1);
    image.width = t.dim(2);
  } else if (t.rank() == 2 || t.rank() == 1) {
    if (channel != 0) {
      throw Error(ErrorKind::kRange, "channel " + std::to_string(channel) +
                                         " out of range for shape " +
                                         shape_to_string(t.shape()));
    }
    values = t.values();
    image.height = t.rank() == 2 ? t.dim(0) : 1;
    image.width = t.rank() == 2 ? t.dim(1) : t.dim(0);
  } else {
    throw Error(ErrorKind::kInvalidShape,
                "cannot render tensor of shape " + shape_to_string(t.shape()));
  }

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  image.pixels.resize(values.size());
  if (lo == hi) {
    std::fill(image.pixels.begin(), image.pixels.end(), std::uint8_t{128});
    return image;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    image.pixels[i] = quantize(values[i], lo, hi);
  }
  return image;
}

GrayImage render_heatmap(const DiffReport& report, std::size_t channel) {
  return render_feature_map(report.heatmap, channel);
}

std::vector<std::byte> encode_png(const GrayImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encode failed: ") + png.message);
  }
  std::vector<std::byte> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

Tensor decode_png(std::span<const std::byte> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::kInvalidInput, std::string("not a readable PNG: ") + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  const std::size_t h = png.height, w = png.width;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(png));
  const png_color black{0, 0, 0};
  if (!png_image_finish_read(&png, &black, raw.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorKind::kInvalidInput, std::string("PNG decode failed: ") + png.message);
  }

  // Interleaved HWC bytes to planar CHW floats.
  std::vector<float> data(channels * h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        data[(c * h + y) * w + x] =
            static_cast<float>(raw[(y * w + x) * channels + c]) / 255.0f;
      }
    }
  }
  return Tensor({channels, h, w}, std::move(data));
}

}  // namespace nvis
