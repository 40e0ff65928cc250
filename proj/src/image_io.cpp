#include "ssgan/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include <jpeglib.h>
#include <png.h>

namespace ssgan {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  check(f != nullptr, Error::Kind::io, "cannot open ", path.string());
  return f;
}

RawImage decode_png(std::FILE* fp, const std::filesystem::path& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check(png != nullptr, Error::Kind::io, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(Error::Kind::io, "libpng info init failed");
  }
  std::vector<png_bytep> row_ptrs;
  RawImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Error::Kind::io, "corrupt PNG: ", path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_set_expand(png);  // palette -> rgb, gray<8 -> 8, tRNS -> alpha
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Error::Kind::io, "unsupported PNG channel count in ", path.string());
  }
  img.pixels.resize(img.width * img.height * img.channels);
  row_ptrs.resize(img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    row_ptrs[y] = img.pixels.data() + y * img.width * img.channels;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

RawImage decode_jpeg(std::FILE* fp, const std::filesystem::path& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(Error::Kind::io, "corrupt JPEG: ", path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  RawImage img;
  img.width = cinfo.output_width;
  img.height = cinfo.output_height;
  img.channels = cinfo.output_components;
  img.pixels.resize(img.width * img.height * img.channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + cinfo.output_scanline * img.width * img.channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

RawImage decode_image(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  unsigned char magic[3] = {0, 0, 0};
  const std::size_t got = std::fread(magic, 1, sizeof(magic), f.get());
  check(got == sizeof(magic), Error::Kind::io, "file too short: ", path.string());
  std::rewind(f.get());
  if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N') return decode_png(f.get(), path);
  if (magic[0] == 0xFF && magic[1] == 0xD8) return decode_jpeg(f.get(), path);
  fail(Error::Kind::io, "unrecognized image format: ", path.string());
}

void encode_png(const RawImage& img, const std::filesystem::path& path) {
  check(img.channels == 1 || img.channels == 3, Error::Kind::value,
        "PNG encoder supports 1 or 3 channels, got ", img.channels);
  check(img.width > 0 && img.height > 0, Error::Kind::value, "cannot encode empty image");
  check(img.pixels.size() == img.width * img.height * img.channels, Error::Kind::value,
        "pixel buffer size does not match dimensions");
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check(png != nullptr, Error::Kind::io, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(Error::Kind::io, "libpng info init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(Error::Kind::io, "PNG write failed: ", path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.pixels.data() + y * img.width * img.channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace ssgan
