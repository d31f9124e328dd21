#pragma once

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/image.hpp"

namespace fpb {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept
  {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_fail(png_structp png, png_const_charp msg)
{
  (void)png;
  throw Error(ErrorCode::IoError, std::string("png: ") + msg);
}

inline void png_warn(png_structp, png_const_charp) {}

}  // namespace detail

/// Lossless 8-bit RGB PNG. Compression level 1 keeps writing fast; the
/// encoder output is deterministic for a given libpng/zlib build.
inline void write_png(const Frame& f, const std::filesystem::path& path, int compression = 1)
{
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(ErrorCode::IoError, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_fail, detail::png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCode::IoError, "png: out of memory");
  }
  try {
    png_init_io(png, fp.get());
    png_set_compression_level(png, compression);
    png_set_IHDR(png, info, static_cast<png_uint_32>(f.width()), static_cast<png_uint_32>(f.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(f.width()) * 3;
    for (int y = 0; y < f.height(); ++y) {
      png_write_row(png, const_cast<png_bytep>(f.data().data() + y * stride));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

/// Reads any 8-bit or 16-bit PNG and converts it to 8-bit RGB.
inline Frame read_png(const std::filesystem::path& path)
{
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(ErrorCode::IoError, "cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorCode::IoError, path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_fail, detail::png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorCode::IoError, "png: out of memory");
  }
  Frame out;
  try {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int depth = png_get_bit_depth(png, info);
    const int type = png_get_color_type(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (type == PNG_COLOR_TYPE_GRAY || type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      png_set_gray_to_rgb(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) fail(ErrorCode::IoError, "png: unexpected row layout");
    out = Frame(w, h);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[y] = out.data().data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

inline std::string frame_file_name(int index)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05d.png", index);
  return buf;
}

/// Indexed frame files in a directory, sorted by index.
inline std::vector<std::pair<int, std::filesystem::path>> list_frame_files(const std::filesystem::path& dir)
{
  static const std::regex re(R"(frame_(\d{5,})\.png)");
  std::vector<std::pair<int, std::filesystem::path>> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && std::regex_match(name, m, re)) out.emplace_back(std::stoi(m[1].str()), e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Writes frame_00000.png ... into `dir`, replacing any frames already there.
inline void write_frames(const FrameSequence& seq, const std::filesystem::path& dir)
{
  validate_sequence(seq);
  std::filesystem::create_directories(dir);
  for (const auto& [idx, path] : list_frame_files(dir)) std::filesystem::remove(path);
  for (std::size_t i = 0; i < seq.size(); ++i) write_png(seq[i], dir / frame_file_name(static_cast<int>(i)));
}

inline FrameSequence read_frames(const std::filesystem::path& dir)
{
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::EmptySequence, "no frame directory at " + dir.string());
  const auto files = list_frame_files(dir);
  if (files.empty()) fail(ErrorCode::EmptySequence, "no frames in " + dir.string());
  FrameSequence seq;
  seq.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (files[i].first != static_cast<int>(i)) {
      fail(ErrorCode::MissingFrame, dir.string() + " is missing " + frame_file_name(static_cast<int>(i)));
    }
    seq.push_back(read_png(files[i].second));
    if (seq.back().width() != seq.front().width() || seq.back().height() != seq.front().height()) {
      fail(ErrorCode::ShapeMismatch, files[i].second.string() + " differs in size from frame 0");
    }
  }
  return seq;
}

}  // namespace fpb
