#include <png.h>

#include <cstring>

#include "scadscope/error.hpp"
#include "scadscope/renderer.hpp"

namespace scadscope {

std::string encode_png(const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGBA;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.rgba.data(), 0, nullptr))
    throw Error(ErrorCode::kRenderFailed, "cannot size PNG", img.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.rgba.data(), 0, nullptr))
    throw Error(ErrorCode::kRenderFailed, "cannot encode PNG", img.message);
  out.resize(size);
  return out;
}

Image decode_png(std::string_view bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw Error(ErrorCode::kRenderFailed, "not a PNG image", img.message);
  img.format = PNG_FORMAT_RGBA;
  Image out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.rgba.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.rgba.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::kRenderFailed, "corrupt PNG image", img.message);
  }
  return out;
}

}  // namespace scadscope
