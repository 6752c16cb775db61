#include "lmr/image_io.hpp"

#include <png.h>

#include <fstream>
#include <sstream>
#include <string>

#include "lmr/error.hpp"

namespace lmr {
namespace {

// Skips whitespace and '#' comments between PGM header tokens.
void skip_pgm_separators(std::istream& in) {
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
}

int read_pgm_int(std::istream& in, const std::filesystem::path& path) {
  skip_pgm_separators(in);
  int v = 0;
  if (!(in >> v)) throw Error(Errc::malformed_metadata, "bad PGM header in " + path.string());
  return v;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") {
    throw Error(Errc::malformed_metadata, "not a PGM file: " + path.string());
  }
  GrayImage img;
  img.width = read_pgm_int(in, path);
  img.height = read_pgm_int(in, path);
  const int maxval = read_pgm_int(in, path);
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(Errc::malformed_metadata, "unsupported PGM geometry in " + path.string());
  }
  const std::size_t count = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.resize(count);
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(count));
    if (in.gcount() != static_cast<std::streamsize>(count)) {
      throw Error(Errc::malformed_metadata, "truncated PGM data in " + path.string());
    }
  } else {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(read_pgm_int(in, path));
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(p * 255 / maxval);
  }
  return img;
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const bool missing = !std::filesystem::exists(path);
    throw Error(missing ? Errc::missing_file : Errc::malformed_metadata,
                "cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage img;
  img.width = static_cast<int>(image.width);
  img.height = static_cast<int>(image.height);
  img.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(Errc::malformed_metadata, "cannot decode PNG " + path.string());
  }
  return img;
}

}  // namespace

GrayImage read_gray_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::missing_file, "no such file " + path.string());
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == ".png") return read_png(path);
  return read_pgm(path);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(Errc::io_error, "short write to " + path.string());
}

}  // namespace lmr
