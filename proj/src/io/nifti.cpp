#include "apf/io/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include <fmt/format.h>
#include <zlib.h>

#include "apf/core/errors.hpp"
#include "apf/io/atomic_file.hpp"

namespace apf::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "NIfTI writer assumes a little-endian host");

namespace {

// NIfTI-1 header byte offsets
constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQuatern = 256;
constexpr std::size_t kOffQoffset = 268;
constexpr std::size_t kOffSrow = 280;
constexpr std::size_t kOffMagic = 344;
constexpr std::size_t kDataOffset = 352;

enum Datatype : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUint16 = 512,
  kUint32 = 768,
  kInt64 = 1024,
  kUint64 = 1280,
};

std::string read_maybe_gzipped(const fs::path &path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec))
    throw IoError(fmt::format("volume file not found: {}", path.string()));
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f)
    throw IoError(fmt::format("cannot open {}", path.string()));
  std::string out;
  char chunk[1 << 16];
  while (true) {
    const int n = gzread(f, chunk, sizeof(chunk));
    if (n < 0) {
      int errnum = 0;
      const std::string msg = gzerror(f, &errnum);
      gzclose(f);
      throw ParseError(fmt::format("{}: decompression failed: {}", path.string(), msg),
                       static_cast<long long>(out.size()));
    }
    if (n == 0)
      break;
    out.append(chunk, static_cast<std::size_t>(n));
  }
  gzclose(f);
  return out;
}

template <typename T>
T load(const std::string &buf, std::size_t off, bool swap) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  if (swap) {
    auto *p = reinterpret_cast<unsigned char *>(&v);
    std::reverse(p, p + sizeof(T));
  }
  return v;
}

// float header fields go through their shortest decimal form, so 0.4f reads back as 0.4
double widen(float f) { return std::stod(fmt::format("{}", f)); }

struct Header {
  bool swap = false;
  Index3 dims{};
  std::int16_t datatype = 0;
  std::int16_t bitpix = 0;
  Vec3 spacing{};
  double qfac = 1.0;
  std::size_t vox_offset = 0;
  double slope = 0.0;
  double inter = 0.0;
  Matrix4 affine{};
};

Matrix4 qform_matrix(const std::string &buf, bool swap, const Header &h) {
  const double b = widen(load<float>(buf, kOffQuatern, swap));
  const double c = widen(load<float>(buf, kOffQuatern + 4, swap));
  const double d = widen(load<float>(buf, kOffQuatern + 8, swap));
  const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
  const double r[3][3] = {
      {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
      {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
      {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b},
  };
  const double scale[3] = {h.spacing[0], h.spacing[1], h.spacing[2] * h.qfac};
  Matrix4 m{};
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col)
      m[row][col] = r[row][col] * scale[col];
    m[row][3] = widen(load<float>(buf, kOffQoffset + 4 * row, swap));
  }
  m[3] = {0, 0, 0, 1};
  return m;
}

Header parse_header(const std::string &buf, const fs::path &path) {
  const std::string name = path.string();
  if (buf.size() < kHeaderSize)
    throw ParseError(fmt::format("{}: file is {} bytes, shorter than a NIfTI-1 header", name, buf.size()),
                     static_cast<long long>(buf.size()));
  Header h;
  const auto raw = load<std::int32_t>(buf, 0, false);
  if (raw != 348) {
    if (load<std::int32_t>(buf, 0, true) != 348)
      throw ParseError(fmt::format("{}: sizeof_hdr is {}, expected 348 (not a NIfTI-1 file)", name, raw), 0);
    h.swap = true;
  }
  if (std::memcmp(buf.data() + kOffMagic, "n+1\0", 4) != 0)
    throw ParseError(fmt::format("{}: magic is not \"n+1\" (only single-file NIfTI-1 is supported)", name),
                     kOffMagic);

  const auto ndim = load<std::int16_t>(buf, kOffDim, h.swap);
  if (ndim < 1 || ndim > 7)
    throw ParseError(fmt::format("{}: dim[0] = {} is out of range", name, ndim), kOffDim);
  std::int16_t dim[8]{};
  for (int i = 0; i < 8; ++i)
    dim[i] = load<std::int16_t>(buf, kOffDim + 2 * i, h.swap);
  for (int i = 4; i <= ndim; ++i)
    if (dim[i] != 1)
      throw ParseError(fmt::format("{}: expected a 3-D volume, got {}-D data (dim[{}] = {})", name, ndim, i, dim[i]),
                       kOffDim + 2 * i);
  if (ndim < 3)
    throw ParseError(fmt::format("{}: expected a 3-D volume, got {}-D data", name, ndim), kOffDim);
  for (int a = 0; a < 3; ++a) {
    if (dim[a + 1] < 1)
      throw ParseError(fmt::format("{}: dim[{}] = {} must be positive", name, a + 1, dim[a + 1]), kOffDim + 2 * (a + 1));
    h.dims[a] = dim[a + 1];
  }

  h.datatype = load<std::int16_t>(buf, kOffDatatype, h.swap);
  h.bitpix = load<std::int16_t>(buf, kOffBitpix, h.swap);
  int expected_bits = 0;
  switch (h.datatype) {
  case kUint8:
  case kInt8:
    expected_bits = 8;
    break;
  case kInt16:
  case kUint16:
    expected_bits = 16;
    break;
  case kInt32:
  case kUint32:
  case kFloat32:
    expected_bits = 32;
    break;
  case kInt64:
  case kUint64:
  case kFloat64:
    expected_bits = 64;
    break;
  default:
    throw ParseError(fmt::format("{}: unsupported datatype code {}", name, h.datatype), kOffDatatype);
  }
  if (h.bitpix != expected_bits)
    throw ParseError(fmt::format("{}: bitpix {} does not match datatype {}", name, h.bitpix, h.datatype), kOffBitpix);

  const double pix0 = widen(load<float>(buf, kOffPixdim, h.swap));
  h.qfac = pix0 < 0.0 ? -1.0 : 1.0;
  for (int a = 0; a < 3; ++a) {
    const double v = std::abs(widen(load<float>(buf, kOffPixdim + 4 * (a + 1), h.swap)));
    if (!(v > 0.0) || !std::isfinite(v))
      throw ParseError(fmt::format("{}: pixdim[{}] = {} must be positive", name, a + 1, v), kOffPixdim + 4 * (a + 1));
    h.spacing[a] = v;
  }

  const double vox = load<float>(buf, kOffVoxOffset, h.swap);
  if (!(vox >= static_cast<double>(kHeaderSize)) || vox != std::floor(vox))
    throw ParseError(fmt::format("{}: vox_offset {} is invalid", name, vox), kOffVoxOffset);
  h.vox_offset = static_cast<std::size_t>(vox);
  h.slope = load<float>(buf, kOffSclSlope, h.swap);
  h.inter = load<float>(buf, kOffSclInter, h.swap);
  if (!std::isfinite(h.slope) || !std::isfinite(h.inter))
    throw ParseError(fmt::format("{}: scl_slope/scl_inter not finite", name), kOffSclSlope);

  const auto qcode = load<std::int16_t>(buf, kOffQformCode, h.swap);
  const auto scode = load<std::int16_t>(buf, kOffSformCode, h.swap);
  if (scode > 0) {
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 4; ++col)
        h.affine[row][col] = widen(load<float>(buf, kOffSrow + 16 * row + 4 * col, h.swap));
    h.affine[3] = {0, 0, 0, 1};
  } else if (qcode > 0) {
    h.affine = qform_matrix(buf, h.swap, h);
  } else {
    h.affine = Affine4::scaling(h.spacing).matrix();
  }
  return h;
}

template <typename T, typename Sink>
void decode_as(const std::string &buf, const Header &h, std::size_t n, Sink &&sink) {
  const char *p = buf.data() + h.vox_offset;
  const bool scaled = h.slope != 0.0 && !(h.slope == 1.0 && h.inter == 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    T x;
    std::memcpy(&x, p + v * sizeof(T), sizeof(T));
    if (h.swap) {
      auto *b = reinterpret_cast<unsigned char *>(&x);
      std::reverse(b, b + sizeof(T));
    }
    double value = static_cast<double>(x);
    if (scaled)
      value = value * h.slope + h.inter;
    sink(v, value);
  }
}

template <typename Sink>
Geometry decode(const fs::path &path, std::size_t &count, Sink &&make_sink) {
  const std::string buf = read_maybe_gzipped(path);
  const Header h = parse_header(buf, path);
  Geometry geometry = [&] {
    try {
      return Geometry(h.dims, h.spacing, Affine4(h.affine));
    } catch (const InvalidTransform &e) {
      throw ParseError(fmt::format("{}: orientation matrix is invalid: {}", path.string(), e.what()), kOffSrow);
    }
  }();
  count = geometry.voxel_count();
  const std::size_t nbytes = count * static_cast<std::size_t>(h.bitpix / 8);
  if (buf.size() < h.vox_offset + nbytes)
    throw ParseError(fmt::format("{}: truncated voxel data, need {} bytes from offset {} but file has {}",
                                 path.string(), nbytes, h.vox_offset, buf.size()),
                     static_cast<long long>(buf.size()));
  auto sink = make_sink(count);
  switch (h.datatype) {
  case kUint8:
    decode_as<std::uint8_t>(buf, h, count, sink);
    break;
  case kInt8:
    decode_as<std::int8_t>(buf, h, count, sink);
    break;
  case kInt16:
    decode_as<std::int16_t>(buf, h, count, sink);
    break;
  case kUint16:
    decode_as<std::uint16_t>(buf, h, count, sink);
    break;
  case kInt32:
    decode_as<std::int32_t>(buf, h, count, sink);
    break;
  case kUint32:
    decode_as<std::uint32_t>(buf, h, count, sink);
    break;
  case kInt64:
    decode_as<std::int64_t>(buf, h, count, sink);
    break;
  case kUint64:
    decode_as<std::uint64_t>(buf, h, count, sink);
    break;
  case kFloat32:
    decode_as<float>(buf, h, count, sink);
    break;
  case kFloat64:
    decode_as<double>(buf, h, count, sink);
    break;
  }
  return geometry;
}

template <typename T>
void store(std::string &buf, std::size_t off, T v) {
  std::memcpy(buf.data() + off, &v, sizeof(T));
}

bool is_gz(const fs::path &p) { return p.extension() == ".gz"; }

} // namespace

Volume3D read_volume(const fs::path &path) {
  std::vector<float> data;
  std::size_t count = 0;
  Geometry g = decode(path, count, [&](std::size_t n) {
    data.resize(n);
    return [&](std::size_t v, double value) { data[v] = static_cast<float>(value); };
  });
  return {std::move(g), std::move(data)};
}

BinaryMask read_mask(const fs::path &path) {
  std::vector<std::uint8_t> occ;
  std::size_t count = 0;
  Geometry g = decode(path, count, [&](std::size_t n) {
    occ.resize(n);
    return [&](std::size_t v, double value) { occ[v] = value > 0.5 ? 1 : 0; };
  });
  return {std::move(g), std::move(occ)};
}

void write_mask(const fs::path &path, const BinaryMask &mask) {
  const Geometry &g = mask.geometry();
  for (int a = 0; a < 3; ++a)
    if (g.dims()[a] > 32767)
      throw InvalidArgument(fmt::format("dimension {} exceeds the NIfTI-1 limit", g.dims()[a]));

  std::string buf(kDataOffset, '\0');
  store<std::int32_t>(buf, 0, 348);
  const std::int16_t dim[8] = {3, static_cast<std::int16_t>(g.dims()[0]), static_cast<std::int16_t>(g.dims()[1]),
                               static_cast<std::int16_t>(g.dims()[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i)
    store<std::int16_t>(buf, kOffDim + 2 * i, dim[i]);
  store<std::int16_t>(buf, kOffDatatype, kUint8);
  store<std::int16_t>(buf, kOffBitpix, 8);
  store<float>(buf, kOffPixdim, 1.0f);
  for (int a = 0; a < 3; ++a)
    store<float>(buf, kOffPixdim + 4 * (a + 1), static_cast<float>(g.spacing_mm()[a]));
  store<float>(buf, kOffVoxOffset, static_cast<float>(kDataOffset));
  store<float>(buf, kOffSclSlope, 1.0f);
  store<float>(buf, kOffSclInter, 0.0f);
  buf[kOffXyztUnits] = 2;  // millimetres
  store<std::int16_t>(buf, kOffQformCode, 0);
  store<std::int16_t>(buf, kOffSformCode, 1);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 4; ++col)
      store<float>(buf, kOffSrow + 16 * row + 4 * col, static_cast<float>(g.index_to_world()(row, col)));
  std::memcpy(buf.data() + kOffMagic, "n+1\0", 4);
  const auto occ = mask.occupancy();
  buf.append(reinterpret_cast<const char *>(occ.data()), occ.size());

  write_atomically(path, [&](const fs::path &tmp) {
    gzFile f = gzopen(tmp.c_str(), is_gz(path) ? "wb6" : "wbT");
    if (!f)
      throw IoError(fmt::format("cannot open {} for writing", tmp.string()));
    std::size_t done = 0;
    while (done < buf.size()) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(buf.size() - done, 1u << 30));
      if (gzwrite(f, buf.data() + done, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        throw IoError(fmt::format("failed writing {}", tmp.string()));
      }
      done += chunk;
    }
    if (gzclose(f) != Z_OK)
      throw IoError(fmt::format("failed closing {}", tmp.string()));
  });
}

} // namespace apf::io
