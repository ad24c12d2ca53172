#pragma once

#include <png.h>
#include <tiffio.h>

#include <csetjmp>
#include <cctype>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/error.hpp"
#include "holo/numeric_text.hpp"

/// Grayscale image files with embedded metadata.
///
/// Metadata travels as "key: value" lines, in the TIFF ImageDescription tag
/// or a PNG text chunk named "holo". Optical fields use reserved keys
/// (wavelength, medium_index, polarization, spacing, origin); everything
/// else lands in Hologram::meta.
namespace holo::io {

enum class PixelType { u8, u16, f32, f64 };

inline const char* pixel_type_name(PixelType t) {
  switch (t) {
    case PixelType::u8: return "u8";
    case PixelType::u16: return "u16";
    case PixelType::f32: return "f32";
    default: return "f64";
  }
}

namespace detail {

inline const char* const kReservedKeys[] = {"wavelength", "medium_index", "polarization", "spacing", "origin"};

inline bool is_reserved(const std::string& key) {
  for (const char* k : kReservedKeys) {
    if (key == k) return true;
  }
  return false;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

inline std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      ++i;
      out += s[i] == 'n' ? '\n' : s[i];
    } else {
      out += s[i];
    }
  }
  return out;
}

inline std::string encode_metadata(const Hologram& h) {
  std::string text;
  if (const auto& o = h.optics()) {
    text += "wavelength: " + format_double(o->wavelength()) + "\n";
    text += "medium_index: " + format_double(o->medium_index()) + "\n";
    text += "polarization: " + format_double(o->polarization()[0]) + " " + format_double(o->polarization()[1]) + "\n";
  }
  text += "spacing: " + format_double(h.grid().spacing()) + "\n";
  text += "origin: " + std::to_string(h.grid().origin_i()) + " " + std::to_string(h.grid().origin_j()) + "\n";
  for (const auto& [k, v] : h.meta()) {
    if (k.find(':') != std::string::npos || k.find('\n') != std::string::npos) {
      throw ValueError("metadata key '" + k + "' cannot contain ':' or a newline");
    }
    text += k + ": " + escape(v) + "\n";
  }
  return text;
}

inline Metadata decode_metadata(const std::string& text) {
  Metadata m;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key(trim(line.substr(0, colon)));
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value[0] == ' ') value.erase(0, 1);
    if (!key.empty()) m[key] = unescape(value);
  }
  return m;
}

struct RawImage {
  std::size_t nx = 0, ny = 0;
  std::vector<double> values;
  std::string description;  // embedded metadata text, possibly empty
  Metadata extra;           // other PNG text chunks
  PixelType type = PixelType::f64;
};

// Assembles a hologram from decoded pixels. Explicit arguments win over
// embedded values.
inline Hologram to_hologram(RawImage raw, const std::string& path, std::optional<OpticalTrain> optics,
                            std::optional<double> spacing) {
  Metadata meta = raw.extra;
  for (auto& [k, v] : decode_metadata(raw.description)) meta[k] = v;
  const std::string ctx = path + ": ";
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = meta.find(key);
    if (it == meta.end()) return std::nullopt;
    std::string v = it->second;
    meta.erase(it);
    return v;
  };
  const auto wl = take("wavelength");
  const auto mi = take("medium_index");
  const auto pol = take("polarization");
  const auto sp = take("spacing");
  const auto org = take("origin");
  if (!optics && wl && mi && pol) {
    const auto p = split_ws(*pol);
    if (p.size() != 2) throw IoError(ctx + "embedded polarization needs two components");
    optics = OpticalTrain(parse_double(*wl, ctx + "wavelength"), parse_double(*mi, ctx + "medium_index"),
                          {parse_double(p[0], ctx + "polarization"), parse_double(p[1], ctx + "polarization")});
  }
  if (!spacing && sp) spacing = parse_double(*sp, ctx + "spacing");
  if (!spacing) throw IoError(ctx + "pixel spacing neither given nor embedded in the file");
  std::size_t i0 = 0, j0 = 0;
  if (org) {
    const auto p = split_ws(*org);
    if (p.size() != 2) throw IoError(ctx + "embedded origin needs two integers");
    i0 = static_cast<std::size_t>(parse_uint(p[0], ctx + "origin"));
    j0 = static_cast<std::size_t>(parse_uint(p[1], ctx + "origin"));
  }
  meta["source_pixel_type"] = pixel_type_name(raw.type);
  return Hologram(std::move(raw.values), DetectorGrid(raw.nx, raw.ny, *spacing, i0, j0), optics, std::move(meta));
}

// libtiff reports through global handlers; the last message is kept per
// thread and attached to the exception.
inline std::string& tiff_last_error() {
  thread_local std::string msg;
  return msg;
}

inline void tiff_error_handler(const char* module, const char* fmt, va_list args) {
  char buf[1024];
  std::vsnprintf(buf, sizeof buf, fmt, args);
  tiff_last_error() = std::string(module ? module : "tiff") + ": " + buf;
}

inline void tiff_warning_handler(const char*, const char*, va_list) {}

inline void install_tiff_handlers() {
  static const bool once = [] {
    TIFFSetErrorHandler(tiff_error_handler);
    TIFFSetWarningHandler(tiff_warning_handler);
    return true;
  }();
  (void)once;
}

struct TiffCloser {
  void operator()(TIFF* t) const {
    if (t) TIFFClose(t);
  }
};

inline RawImage read_tiff(const std::string& path) {
  install_tiff_handlers();
  tiff_last_error().clear();
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.c_str(), "r"));
  if (!tif) throw IoError(path + ": cannot open TIFF (" + tiff_last_error() + ")");
  std::uint32_t w = 0, h = 0;
  std::uint16_t spp = 1, bps = 0, fmt = SAMPLEFORMAT_UINT, photometric = PHOTOMETRIC_MINISBLACK;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &fmt);
  TIFFGetField(tif.get(), TIFFTAG_PHOTOMETRIC, &photometric);
  if (spp != 1 || (photometric != PHOTOMETRIC_MINISBLACK && photometric != PHOTOMETRIC_MINISWHITE)) {
    throw UnsupportedError(path + ": only single-channel grayscale TIFF is supported (samples per pixel " +
                           std::to_string(spp) + ")");
  }
  if (TIFFIsTiled(tif.get())) throw UnsupportedError(path + ": tiled TIFF is not supported");
  RawImage img;
  if (fmt == SAMPLEFORMAT_UINT && bps == 8) {
    img.type = PixelType::u8;
  } else if (fmt == SAMPLEFORMAT_UINT && bps == 16) {
    img.type = PixelType::u16;
  } else if (fmt == SAMPLEFORMAT_IEEEFP && bps == 32) {
    img.type = PixelType::f32;
  } else if (fmt == SAMPLEFORMAT_IEEEFP && bps == 64) {
    img.type = PixelType::f64;
  } else {
    throw UnsupportedError(path + ": unsupported TIFF sample format (" + std::to_string(bps) + "-bit, format " +
                           std::to_string(fmt) + ")");
  }
  img.nx = w;
  img.ny = h;
  img.values.resize(static_cast<std::size_t>(w) * h);
  std::vector<unsigned char> line(static_cast<std::size_t>(TIFFScanlineSize(tif.get())));
  for (std::uint32_t row = 0; row < h; ++row) {
    if (TIFFReadScanline(tif.get(), line.data(), row, 0) < 0) {
      throw IoError(path + ": corrupt TIFF data at row " + std::to_string(row) + " (" + tiff_last_error() + ")");
    }
    double* out = img.values.data() + static_cast<std::size_t>(row) * w;
    for (std::uint32_t i = 0; i < w; ++i) {
      switch (img.type) {
        case PixelType::u8: out[i] = line[i]; break;
        case PixelType::u16: {
          std::uint16_t v;
          std::memcpy(&v, line.data() + 2 * i, 2);
          out[i] = v;
          break;
        }
        case PixelType::f32: {
          float v;
          std::memcpy(&v, line.data() + 4 * i, 4);
          out[i] = v;
          break;
        }
        case PixelType::f64: std::memcpy(out + i, line.data() + 8 * i, 8); break;
      }
    }
    if (photometric == PHOTOMETRIC_MINISWHITE && (img.type == PixelType::u8 || img.type == PixelType::u16)) {
      const double top = img.type == PixelType::u8 ? 255.0 : 65535.0;
      for (std::uint32_t i = 0; i < w; ++i) out[i] = top - out[i];
    }
  }
  char* desc = nullptr;
  if (TIFFGetField(tif.get(), TIFFTAG_IMAGEDESCRIPTION, &desc) && desc) img.description = desc;
  if (TIFFReadDirectory(tif.get())) throw UnsupportedError(path + ": multi-page TIFF is not supported");
  return img;
}

inline void write_tiff(const std::string& path, const std::vector<double>& values, std::size_t nx, std::size_t ny,
                       PixelType type, const std::string& description) {
  install_tiff_handlers();
  tiff_last_error().clear();
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.c_str(), "w"));
  if (!tif) throw IoError(path + ": cannot create TIFF (" + tiff_last_error() + ")");
  const std::uint16_t bps = type == PixelType::u8 ? 8 : type == PixelType::u16 ? 16 : type == PixelType::f32 ? 32 : 64;
  const bool is_float = type == PixelType::f32 || type == PixelType::f64;
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(nx));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(ny));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, std::uint16_t{1});
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, bps);
  TIFFSetField(tif.get(), TIFFTAG_SAMPLEFORMAT, is_float ? SAMPLEFORMAT_IEEEFP : SAMPLEFORMAT_UINT);
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_NONE);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(tif.get(), 0));
  if (!description.empty()) TIFFSetField(tif.get(), TIFFTAG_IMAGEDESCRIPTION, description.c_str());
  const std::size_t bytes = bps / 8;
  std::vector<unsigned char> line(nx * bytes);
  for (std::size_t row = 0; row < ny; ++row) {
    const double* in = values.data() + row * nx;
    for (std::size_t i = 0; i < nx; ++i) {
      switch (type) {
        case PixelType::u8: line[i] = static_cast<unsigned char>(in[i]); break;
        case PixelType::u16: {
          const auto v = static_cast<std::uint16_t>(in[i]);
          std::memcpy(line.data() + 2 * i, &v, 2);
          break;
        }
        case PixelType::f32: {
          const auto v = static_cast<float>(in[i]);
          std::memcpy(line.data() + 4 * i, &v, 4);
          break;
        }
        case PixelType::f64: std::memcpy(line.data() + 8 * i, in + i, 8); break;
      }
    }
    if (TIFFWriteScanline(tif.get(), line.data(), static_cast<std::uint32_t>(row), 0) < 0) {
      throw IoError(path + ": failed writing TIFF row " + std::to_string(row) + " (" + tiff_last_error() + ")");
    }
  }
}

// libpng reports errors by longjmp; the message is copied out first.
struct PngErrorState {
  std::jmp_buf jmp;
  char message[256] = {0};
};

inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg ? msg : "unknown error");
  std::longjmp(st->jmp, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

inline RawImage read_png(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError(path + ": cannot open PNG");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) throw IoError(path + ": not a PNG file");

  PngErrorState st;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, png_error_fn, png_warning_fn);
  if (!png) throw IoError(path + ": cannot initialise libpng");
  png_infop info = png_create_info_struct(png);
  RawImage img;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> pixels;
  int failure = 0;  // 1: libpng error, 2: unsupported layout
  std::string unsupported;
  if (setjmp(st.jmp)) {
    failure = 1;
  } else {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const auto w = png_get_image_width(png, info);
    const auto h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
      failure = 2;
      unsupported = "only grayscale PNG is supported (color type " + std::to_string(color) + ")";
    } else if (depth != 8 && depth != 16) {
      failure = 2;
      unsupported = "unsupported PNG bit depth " + std::to_string(depth);
    } else {
      img.nx = w;
      img.ny = h;
      img.type = depth == 8 ? PixelType::u8 : PixelType::u16;
      const std::size_t stride = png_get_rowbytes(png, info);
      pixels.resize(stride * h);
      rows.resize(h);
      for (std::size_t r = 0; r < h; ++r) rows[r] = pixels.data() + r * stride;
      png_read_image(png, rows.data());
      png_read_end(png, info);
      png_textp text = nullptr;
      int n_text = 0;
      png_get_text(png, info, &text, &n_text);
      for (int t = 0; t < n_text; ++t) {
        const std::string key = text[t].key;
        const std::string val(text[t].text, text[t].text_length);
        if (key == "holo") {
          img.description = val;
        } else {
          img.extra[key] = val;
        }
      }
      img.values.resize(static_cast<std::size_t>(w) * h);
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t i = 0; i < w; ++i) {
          img.values[r * w + i] = depth == 8 ? rows[r][i] : (rows[r][2 * i] << 8 | rows[r][2 * i + 1]);
        }
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (failure == 1) throw IoError(path + ": corrupt PNG (" + st.message + ")");
  if (failure == 2) throw UnsupportedError(path + ": " + unsupported);
  return img;
}

inline void write_png(const std::string& path, const std::vector<double>& values, std::size_t nx, std::size_t ny,
                      PixelType type, const std::string& description) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError(path + ": cannot create PNG");
  const int depth = type == PixelType::u8 ? 8 : 16;
  const std::size_t bytes = static_cast<std::size_t>(depth / 8);
  std::vector<unsigned char> pixels(nx * ny * bytes);
  for (std::size_t k = 0; k < nx * ny; ++k) {
    const auto v = static_cast<unsigned>(values[k]);
    if (depth == 8) {
      pixels[k] = static_cast<unsigned char>(v);
    } else {
      pixels[2 * k] = static_cast<unsigned char>(v >> 8);
      pixels[2 * k + 1] = static_cast<unsigned char>(v & 0xff);
    }
  }
  std::vector<png_bytep> rows(ny);
  for (std::size_t r = 0; r < ny; ++r) rows[r] = pixels.data() + r * nx * bytes;
  std::vector<char> key{'h', 'o', 'l', 'o', '\0'};
  std::vector<char> text(description.begin(), description.end());
  text.push_back('\0');

  PngErrorState st;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st, png_error_fn, png_warning_fn);
  if (!png) throw IoError(path + ": cannot initialise libpng");
  png_infop info = png_create_info_struct(png);
  bool failed = false;
  if (setjmp(st.jmp)) {
    failed = true;
  } else {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(nx), static_cast<png_uint_32>(ny), depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_text chunk{};
    chunk.compression = PNG_TEXT_COMPRESSION_NONE;
    chunk.key = key.data();
    chunk.text = text.data();
    chunk.text_length = description.size();
    if (!description.empty()) png_set_text(png, info, &chunk, 1);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, info);
  }
  png_destroy_write_struct(&png, &info);
  if (failed) throw IoError(path + ": failed writing PNG (" + st.message + ")");
}

inline std::string lower_extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

inline bool is_png(const std::string& path) { return lower_extension(path) == ".png"; }

inline bool is_tiff(const std::string& path) {
  const auto ext = lower_extension(path);
  return ext == ".tif" || ext == ".tiff";
}

}  // namespace detail

/// Reads a grayscale PNG (8/16-bit) or single-page TIFF (8/16-bit integer,
/// 32/64-bit float). Pixel values are returned as stored; optics and
/// spacing passed here override any embedded in the file.
inline Hologram load_image(const std::string& path, std::optional<OpticalTrain> optics = {},
                           std::optional<double> spacing = {}) {
  if (!std::filesystem::exists(path)) throw IoError(path + ": no such file");
  if (detail::is_png(path)) return detail::to_hologram(detail::read_png(path), path, std::move(optics), spacing);
  if (detail::is_tiff(path)) return detail::to_hologram(detail::read_tiff(path), path, std::move(optics), spacing);
  throw UnsupportedError(path + ": unrecognised image extension (expected .png, .tif or .tiff)");
}

/// Writes h with its optics, grid and meta embedded. PNG stores integers
/// only (u8/u16); TIFF also takes f32/f64. Integer types require every
/// value to be an integer in range, so nothing is silently rounded.
inline void save_image(const std::string& path, const Hologram& h, PixelType type = PixelType::f64) {
  const bool png = detail::is_png(path);
  if (!png && !detail::is_tiff(path)) {
    throw UnsupportedError(path + ": unrecognised image extension (expected .png, .tif or .tiff)");
  }
  if (png && (type == PixelType::f32 || type == PixelType::f64)) {
    throw UnsupportedError(path + ": PNG holds 8/16-bit integers only; use TIFF for floating-point data");
  }
  if (type == PixelType::u8 || type == PixelType::u16) {
    const double top = type == PixelType::u8 ? 255.0 : 65535.0;
    for (double v : h.data()) {
      if (v != std::floor(v) || v < 0.0 || v > top) {
        throw ValueError(path + ": value " + format_double(v) + " does not fit " + pixel_type_name(type) + " pixels");
      }
    }
  }
  Metadata meta = h.meta();
  meta.erase("source_pixel_type");
  const auto desc = detail::encode_metadata(Hologram(h.data(), h.grid(), h.optics(), std::move(meta)));
  if (png) {
    detail::write_png(path, h.data(), h.nx(), h.ny(), type, desc);
  } else {
    detail::write_tiff(path, h.data(), h.nx(), h.ny(), type, desc);
  }
}

/// Pixel type an image was loaded from, or f64 when unknown.
inline PixelType source_pixel_type(const Hologram& h) {
  auto it = h.meta().find("source_pixel_type");
  if (it == h.meta().end()) return PixelType::f64;
  for (auto t : {PixelType::u8, PixelType::u16, PixelType::f32, PixelType::f64}) {
    if (it->second == pixel_type_name(t)) return t;
  }
  return PixelType::f64;
}

/// Writes a bare float32 TIFF (one reconstruction slice, say).
inline void save_float_tiff(const std::string& path, const std::vector<double>& values, std::size_t nx,
                            std::size_t ny, const std::string& description = {}) {
  detail::write_tiff(path, values, nx, ny, PixelType::f32, description);
}

}  // namespace holo::io
