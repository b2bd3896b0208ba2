#include "snerf/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "snerf/errors.hpp"

namespace snerf::io {
namespace {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

constexpr float kNan = std::numeric_limits<float>::quiet_NaN();

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_pfm_raw(const fs::path& path, int w, int h, int channels, const std::vector<float>& rows) {
  std::ostringstream os;
  os << (channels == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n-1.0\n";
  std::string data = os.str();
  // PFM stores rows bottom to top
  for (int y = h - 1; y >= 0; --y) {
    const char* p = reinterpret_cast<const char*>(rows.data() + static_cast<size_t>(y) * w * channels);
    data.append(p, sizeof(float) * w * channels);
  }
  write_text(path, data);
}

std::vector<float> read_pfm_raw(const fs::path& path, int& w, int& h, int channels) {
  const std::string data = read_text(path);
  std::istringstream is(data);
  std::string magic;
  double scale = 0.0;
  is >> magic >> w >> h >> scale;
  if (!is || (magic != "PF" && magic != "Pf")) throw IoError(path.string() + ": not a PFM file");
  const int got = magic == "PF" ? 3 : 1;
  if (got != channels)
    throw IoError(path.string() + ": expected " + std::to_string(channels) + "-channel PFM");
  if (scale >= 0.0) throw IoError(path.string() + ": big-endian PFM is not supported");
  if (w <= 0 || h <= 0) throw IoError(path.string() + ": bad PFM dimensions");
  is.get();  // single whitespace before the raster
  const size_t offset = static_cast<size_t>(is.tellg());
  const size_t n = static_cast<size_t>(w) * h * channels;
  if (data.size() < offset + n * sizeof(float)) throw IoError(path.string() + ": truncated PFM");
  std::vector<float> rows(n);
  for (int y = 0; y < h; ++y) {
    const size_t src = offset + static_cast<size_t>(h - 1 - y) * w * channels * sizeof(float);
    std::memcpy(rows.data() + static_cast<size_t>(y) * w * channels, data.data() + src,
                sizeof(float) * w * channels);
  }
  return rows;
}

struct PngFile {
  FILE* fp = nullptr;
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
};

void write_png_raw(const fs::path& path, int w, int h, int color_type, int channels,
                   const std::vector<std::uint8_t>& px) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  PngFile f;
  f.fp = std::fopen(path.string().c_str(), "wb");
  if (!f.fp) throw IoError(path.string() + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string() + ": PNG write failed");
  }
  png_init_io(png, f.fp);
  png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(px.data() + static_cast<size_t>(y) * w * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> read_png_raw(const fs::path& path, int& w, int& h, bool gray) {
  PngFile f;
  f.fp = std::fopen(path.string().c_str(), "rb");
  if (!f.fp) throw IoError(path.string() + ": cannot open");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.fp) != 8 || png_sig_cmp(sig, 0, 8))
    throw IoError(path.string() + ": not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  std::vector<std::uint8_t> px;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string() + ": PNG read failed");
  }
  png_init_io(png, f.fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  const int ct = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (ct == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (ct == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (ct & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (gray && (ct & PNG_COLOR_MASK_COLOR)) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (!gray && !(ct & PNG_COLOR_MASK_COLOR)) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int channels = gray ? 1 : 3;
  if (static_cast<int>(png_get_rowbytes(png, info)) != w * channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string() + ": unsupported PNG layout");
  }
  px.resize(static_cast<size_t>(w) * h * channels);
  for (int y = 0; y < h; ++y) png_read_row(png, px.data() + static_cast<size_t>(y) * w * channels, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return px;
}

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
}

std::uint64_t fnv1a(const void* data, size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError(path.string() + ": write failed");
  }
  fs::rename(tmp, path);
}

void write_pfm(const fs::path& path, const ScalarMap& map) {
  std::vector<float> rows(map.values.size());
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = map.valid[i] ? map.values[i] : kNan;
  write_pfm_raw(path, map.width(), map.height(), 1, rows);
}

ScalarMap read_pfm_scalar(const fs::path& path) {
  int w = 0, h = 0;
  const auto rows = read_pfm_raw(path, w, h, 1);
  ScalarMap out(w, h);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (std::isfinite(rows[i])) {
      out.values[i] = rows[i];
      out.valid[i] = 1;
    }
  }
  return out;
}

DepthMap read_depth(const fs::path& path) {
  DepthMap d;
  static_cast<ScalarMap&>(d) = read_pfm_scalar(path);
  for (size_t i = 0; i < d.values.size(); ++i)
    if (d.valid[i] && !(d.values[i] > 0.f)) throw IoError(path.string() + ": non-positive depth");
  return d;
}

ConfidenceMap read_confidence(const fs::path& path) {
  ConfidenceMap c;
  static_cast<ScalarMap&>(c) = read_pfm_scalar(path);
  return c;
}

void write_flow(const fs::path& path, const FlowField& flow) {
  std::vector<float> rows(flow.du.size() * 3);
  for (size_t i = 0; i < flow.du.size(); ++i) {
    rows[3 * i] = flow.valid[i] ? flow.du[i] : 0.f;
    rows[3 * i + 1] = flow.valid[i] ? flow.dv[i] : 0.f;
    rows[3 * i + 2] = flow.valid[i] ? 1.f : 0.f;
  }
  write_pfm_raw(path, flow.width(), flow.height(), 3, rows);
}

FlowField read_flow(const fs::path& path) {
  int w = 0, h = 0;
  const auto rows = read_pfm_raw(path, w, h, 3);
  FlowField flow(w, h);
  for (size_t i = 0; i < flow.du.size(); ++i)
    if (rows[3 * i + 2] > 0.5f) {
      flow.du[i] = rows[3 * i];
      flow.dv[i] = rows[3 * i + 1];
      flow.valid[i] = 1;
    }
  return flow;
}

void write_png(const fs::path& path, const RgbImage& img) {
  std::vector<std::uint8_t> px(img.size() * 3);
  for (size_t i = 0; i < img.size(); ++i) {
    px[3 * i] = quantize(img[i].r);
    px[3 * i + 1] = quantize(img[i].g);
    px[3 * i + 2] = quantize(img[i].b);
  }
  write_png_raw(path, img.width(), img.height(), PNG_COLOR_TYPE_RGB, 3, px);
}

RgbImage read_png(const fs::path& path) {
  int w = 0, h = 0;
  const auto px = read_png_raw(path, w, h, false);
  RgbImage img(w, h);
  for (size_t i = 0; i < img.size(); ++i)
    img[i] = {px[3 * i] / 255.f, px[3 * i + 1] / 255.f, px[3 * i + 2] / 255.f};
  return img;
}

void write_mask(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> px(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) px[i] = mask[i] ? 255 : 0;
  write_png_raw(path, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 1, px);
}

Mask read_mask(const fs::path& path) {
  int w = 0, h = 0;
  const auto px = read_png_raw(path, w, h, true);
  Mask m(w, h);
  for (size_t i = 0; i < m.size(); ++i) m[i] = px[i] >= 128 ? 1 : 0;
  return m;
}

std::string format_pose(const Pose& p) {
  std::string s;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) s += fmt_double(p.rotation(i, j)) + ",";
    s += fmt_double(p.translation[i]);
    if (i < 2) s += ",";
  }
  return s;
}

Pose parse_pose(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size() || !std::isfinite(x))
      throw InvalidArgument("bad pose component '" + item + "'");
    v.push_back(x);
  }
  if (v.size() != 12) throw InvalidArgument("pose needs 12 values");
  Pose p;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) p.rotation(i, j) = v[i * 4 + j];
    p.translation[i] = v[i * 4 + 3];
  }
  if (!p.is_valid(1e-6)) throw InvalidArgument("pose rotation is not orthonormal");
  return p;
}

void write_ply(const fs::path& path, const PointCloud& cloud) {
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\ncomment frame " << format_pose(cloud.frame) << "\nelement vertex "
     << cloud.size() << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  for (const auto& p : cloud.points)
    os << fmt_double(p.x()) << " " << fmt_double(p.y()) << " " << fmt_double(p.z()) << "\n";
  write_text(path, os.str());
}

PointCloud read_ply(const fs::path& path) {
  std::istringstream is(read_text(path));
  std::string line;
  if (!std::getline(is, line) || line != "ply") throw IoError(path.string() + ": not a PLY file");
  PointCloud cloud;
  size_t n = 0;
  bool have_count = false;
  while (std::getline(is, line)) {
    if (line == "end_header") break;
    if (line.rfind("format", 0) == 0 && line != "format ascii 1.0")
      throw IoError(path.string() + ": only ASCII PLY is supported");
    if (line.rfind("comment frame ", 0) == 0) {
      try {
        cloud.frame = parse_pose(line.substr(14));
      } catch (const InvalidArgument& e) {
        throw IoError(path.string() + ": " + e.what());
      }
    }
    if (line.rfind("element vertex ", 0) == 0) {
      n = std::stoul(line.substr(15));
      have_count = true;
    }
  }
  if (!have_count) throw IoError(path.string() + ": missing vertex count");
  cloud.points.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    double x, y, z;
    if (!(is >> x >> y >> z)) throw IoError(path.string() + ": truncated vertex list");
    is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

void write_labels(const fs::path& path, const std::vector<std::uint8_t>& labels) {
  std::string s;
  s.reserve(labels.size() * 2);
  for (auto l : labels) s += l ? "1\n" : "0\n";
  write_text(path, s);
}

std::vector<std::uint8_t> read_labels(const fs::path& path) {
  std::istringstream is(read_text(path));
  std::vector<std::uint8_t> out;
  int v;
  while (is >> v) out.push_back(v != 0);
  return out;
}

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  std::ostringstream os;
  os << "snerf-checkpoint 1\n";
  for (const auto& [k, v] : ckpt.header) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw InvalidArgument("bad checkpoint header entry '" + k + "'");
    os << k << "=" << v << "\n";
  }
  const size_t bytes = ckpt.blob.size() * sizeof(float);
  os << "blob_floats=" << ckpt.blob.size() << "\n";
  os << "blob_fnv1a=" << fnv1a(ckpt.blob.data(), bytes) << "\n";
  os << "end\n";
  std::string data = os.str();
  data.append(reinterpret_cast<const char*>(ckpt.blob.data()), bytes);
  write_text(path, data);
}

Checkpoint read_checkpoint(const fs::path& path) {
  const std::string data = read_text(path);
  const std::string magic = "snerf-checkpoint 1\n";
  if (data.compare(0, magic.size(), magic) != 0) throw IoError(path.string() + ": not a checkpoint");
  Checkpoint ckpt;
  size_t pos = magic.size();
  bool done = false;
  while (pos < data.size()) {
    const size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) break;
    const std::string line = data.substr(pos, eol - pos);
    pos = eol + 1;
    if (line == "end") {
      done = true;
      break;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path.string() + ": corrupt checkpoint header");
    ckpt.header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!done || !ckpt.header.count("blob_floats") || !ckpt.header.count("blob_fnv1a"))
    throw IoError(path.string() + ": corrupt checkpoint header");
  size_t n = 0;
  std::uint64_t sum = 0;
  try {
    n = std::stoull(ckpt.header["blob_floats"]);
    sum = std::stoull(ckpt.header["blob_fnv1a"]);
  } catch (const std::exception&) {
    throw IoError(path.string() + ": corrupt checkpoint header");
  }
  if (data.size() - pos != n * sizeof(float)) throw IoError(path.string() + ": checkpoint blob size mismatch");
  ckpt.blob.resize(n);
  std::memcpy(ckpt.blob.data(), data.data() + pos, n * sizeof(float));
  if (fnv1a(ckpt.blob.data(), n * sizeof(float)) != sum)
    throw IoError(path.string() + ": checkpoint checksum mismatch");
  ckpt.header.erase("blob_floats");
  ckpt.header.erase("blob_fnv1a");
  return ckpt;
}

}  // namespace snerf::io
