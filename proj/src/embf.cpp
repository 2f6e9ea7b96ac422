#include "mklvc/embf.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <unistd.h>

#include "mklvc/errors.hpp"

namespace mklvc::embf {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'F'};
constexpr std::uint8_t kDtypeFloat32 = 0;
constexpr std::size_t kReservedOffset = 17;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

std::uint32_t get_u32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::uint16_t get_u16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

const char* kind_name(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kEmbeddings: return "embedding sequence";
    case PayloadKind::kSortProfile: return "sort profile";
    case PayloadKind::kFactorizedMap: return "factorized map";
  }
  return "unknown";
}

void expect_kind(const Container& c, PayloadKind kind) {
  if (c.kind != kind)
    throw ParseError(std::string("expected a ") + kind_name(kind) + " payload, found a " +
                         kind_name(c.kind),
                     6);
}

float narrow(double v) {
  const auto f = static_cast<float>(v);
  if (!std::isfinite(f)) throw ValidationError("value does not fit a finite float32");
  return f;
}

std::uint32_t narrow_size(Eigen::Index n, const char* what) {
  if (n < 1 || n > static_cast<Eigen::Index>(UINT32_MAX))
    throw ValidationError(std::string(what) + " does not fit the EMBF header");
  return static_cast<std::uint32_t>(n);
}

float at(const Container& c, std::size_t row, std::size_t col) {
  return c.data[row * c.cols + col];
}

std::vector<Eigen::Index> read_permutation(const Container& c, std::size_t row) {
  std::vector<Eigen::Index> perm(c.cols);
  for (std::size_t j = 0; j < c.cols; ++j) {
    const float v = at(c, row, j);
    if (!(v >= 0.0f) || v != std::floor(v) || v >= static_cast<float>(c.cols))
      throw ParseError("permutation entry is not a valid dimension index",
                       kHeaderSize + 4 * (row * c.cols + j));
    perm[j] = static_cast<Eigen::Index>(v);
  }
  try {
    check_permutation(perm, static_cast<Eigen::Index>(c.cols));
  } catch (const ValidationError&) {
    throw ParseError("permutation row is not a bijection", kHeaderSize + 4 * row * c.cols);
  }
  return perm;
}

}  // namespace

std::string encode(const Container& c) {
  if (c.rows == 0 || c.cols == 0) throw ValidationError("EMBF payload must be non-empty");
  if (c.data.size() != static_cast<std::size_t>(c.rows) * c.cols)
    throw ValidationError("EMBF payload size does not match its shape");

  std::string out;
  out.reserve(kHeaderSize + 4 * c.data.size());
  out.append(kMagic, 4);
  put_u16(out, kVersion);
  put_u16(out, static_cast<std::uint16_t>(c.kind));
  put_u32(out, c.rows);
  put_u32(out, c.cols);
  out.push_back(static_cast<char>(kDtypeFloat32));
  out.append(7, '\0');
  for (float v : c.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Container decode(std::string_view bytes) {
  if (bytes.size() < kHeaderSize) {
    std::ostringstream msg;
    msg << "truncated header: expected " << kHeaderSize << " bytes, got " << bytes.size();
    throw ParseError(msg.str(), bytes.size());
  }
  if (bytes.substr(0, 4) != std::string_view(kMagic, 4)) throw ParseError("bad magic, expected 'EMBF'", 0);
  if (const auto version = get_u16(bytes, 4); version != kVersion)
    throw ParseError("unsupported version " + std::to_string(version), 4);

  Container c;
  const std::uint16_t kind = get_u16(bytes, 6);
  if (kind > static_cast<std::uint16_t>(PayloadKind::kFactorizedMap))
    throw ParseError("unknown payload kind " + std::to_string(kind), 6);
  c.kind = static_cast<PayloadKind>(kind);

  c.rows = get_u32(bytes, 8);
  if (c.rows == 0) throw ParseError("row count is zero", 8);
  c.cols = get_u32(bytes, 12);
  if (c.cols == 0) throw ParseError("column count is zero", 12);
  if (const auto dtype = static_cast<std::uint8_t>(bytes[16]); dtype != kDtypeFloat32)
    throw ParseError("unsupported dtype code " + std::to_string(dtype), 16);
  for (std::size_t i = kReservedOffset; i < kHeaderSize; ++i)
    if (bytes[i] != '\0') throw ParseError("reserved header byte is not zero", i);

  const std::uint64_t count = static_cast<std::uint64_t>(c.rows) * c.cols;
  const std::uint64_t expected = 4 * count;
  const std::uint64_t actual = bytes.size() - kHeaderSize;
  if (actual != expected) {
    std::ostringstream msg;
    msg << (actual < expected ? "truncated" : "oversized") << " payload: expected " << expected
        << " bytes, got " << actual;
    throw ParseError(msg.str(), kHeaderSize + std::min(actual, expected));
  }

  c.data.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < c.data.size(); ++i)
    c.data[i] = std::bit_cast<float>(get_u32(bytes, kHeaderSize + 4 * i));
  return c;
}

void write_file(const std::filesystem::path& path, const Container& c) {
  const std::string bytes = encode(c);

  std::random_device rd;
  std::filesystem::path tmp = path;
  tmp += ".partial-" + std::to_string(::getpid()) + "-" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw ValidationError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw ValidationError("cannot move output into place at " + path.string() + ": " +
                          ec.message());
  }
}

Container read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

Container to_container(const EmbeddingSequence& x) {
  Container c;
  c.kind = PayloadKind::kEmbeddings;
  c.rows = narrow_size(x.num_frames(), "frame count");
  c.cols = narrow_size(x.dim(), "dimension");
  c.data.reserve(static_cast<std::size_t>(c.rows) * c.cols);
  for (Eigen::Index i = 0; i < x.num_frames(); ++i)
    for (Eigen::Index j = 0; j < x.dim(); ++j) c.data.push_back(narrow(x.frames()(i, j)));
  return c;
}

Container to_container(const SortProfile& profile) {
  check_permutation(profile.permutation, profile.dim());
  Container c;
  c.kind = PayloadKind::kSortProfile;
  c.rows = 2;
  c.cols = narrow_size(profile.dim(), "dimension");
  c.data.reserve(2 * static_cast<std::size_t>(c.cols));
  for (Eigen::Index j = 0; j < profile.dim(); ++j) c.data.push_back(narrow(profile.std(j)));
  for (Eigen::Index p : profile.permutation) c.data.push_back(static_cast<float>(p));
  return c;
}

Container to_container(const FactorizedMap& map) {
  map.validate();
  const Eigen::Index d = map.dim();
  const Eigen::Index k = map.block_dim;
  Container c;
  c.kind = PayloadKind::kFactorizedMap;
  c.rows = narrow_size(4 + k, "block dimension");
  c.cols = narrow_size(d, "dimension");
  c.data.resize(static_cast<std::size_t>(c.rows) * c.cols);
  auto cell = [&](Eigen::Index row, Eigen::Index col) -> float& {
    return c.data[static_cast<std::size_t>(row * d + col)];
  };
  for (Eigen::Index j = 0; j < d; ++j) {
    cell(0, j) = static_cast<float>(map.permutation[static_cast<std::size_t>(j)]);
    cell(1, j) = narrow(map.source_means(j));
    cell(2, j) = narrow(map.target_means(j));
  }
  for (std::size_t i = 0; i < map.blocks.size(); ++i) {
    const auto start = static_cast<Eigen::Index>(i) * k;
    const AffineMap& block = map.blocks[i];
    for (Eigen::Index r = 0; r < k; ++r) {
      cell(3, start + r) = narrow(block.offset()(r));
      for (Eigen::Index col = 0; col < k; ++col) cell(4 + r, start + col) = narrow(block.matrix()(r, col));
    }
  }
  return c;
}

EmbeddingSequence embeddings_from(const Container& c) {
  expect_kind(c, PayloadKind::kEmbeddings);
  Eigen::MatrixXd frames(c.rows, c.cols);
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j) {
      const float v = at(c, i, j);
      if (!std::isfinite(v))
        throw ParseError("non-finite value in embedding payload", kHeaderSize + 4 * (i * c.cols + j));
      frames(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  return EmbeddingSequence(std::move(frames));
}

SortProfile sort_profile_from(const Container& c, std::string tag) {
  expect_kind(c, PayloadKind::kSortProfile);
  if (c.rows != 2) throw ParseError("sort profile must have exactly 2 rows", 8);
  SortProfile profile;
  profile.std.resize(c.cols);
  for (std::size_t j = 0; j < c.cols; ++j) {
    const float v = at(c, 0, j);
    if (!std::isfinite(v) || v < 0.0f)
      throw ParseError("standard deviation must be finite and non-negative", kHeaderSize + 4 * j);
    profile.std(static_cast<Eigen::Index>(j)) = v;
  }
  profile.permutation = read_permutation(c, 1);
  for (std::size_t i = 0; i + 1 < c.cols; ++i)
    if (profile.std(profile.permutation[i]) < profile.std(profile.permutation[i + 1]))
      throw ParseError("permutation does not sort std in descending order",
                       kHeaderSize + 4 * (c.cols + i));
  profile.source_tag = std::move(tag);
  return profile;
}

FactorizedMap factorized_map_from(const Container& c) {
  expect_kind(c, PayloadKind::kFactorizedMap);
  if (c.rows < 5) throw ParseError("factorized map needs at least 5 rows", 8);
  const auto k = static_cast<Eigen::Index>(c.rows - 4);
  const auto d = static_cast<Eigen::Index>(c.cols);
  if (d % k != 0) throw ParseError("block dimension does not divide the embedding dimension", 8);
  for (std::size_t i = c.cols; i < c.data.size(); ++i)
    if (!std::isfinite(c.data[i])) throw ParseError("non-finite value in map payload", kHeaderSize + 4 * i);

  FactorizedMap map;
  map.block_dim = k;
  map.permutation = read_permutation(c, 0);
  map.source_means.resize(d);
  map.target_means.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    map.source_means(j) = at(c, 1, static_cast<std::size_t>(j));
    map.target_means(j) = at(c, 2, static_cast<std::size_t>(j));
  }
  // Block matrices went through float32 rounding, so the PSD check allows
  // for a few float ulps per entry.
  const double tolerance = 1e-8 + static_cast<double>(k) * 0x1p-23;
  for (Eigen::Index start = 0; start < d; start += k) {
    Eigen::MatrixXd a(k, k);
    Eigen::VectorXd b(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      b(r) = at(c, 3, static_cast<std::size_t>(start + r));
      for (Eigen::Index col = 0; col < k; ++col)
        a(r, col) = at(c, static_cast<std::size_t>(4 + r), static_cast<std::size_t>(start + col));
    }
    try {
      map.blocks.emplace_back(std::move(a), std::move(b), tolerance);
    } catch (const NumericalError& e) {
      throw ParseError(std::string("invalid block matrix: ") + e.what(),
                       kHeaderSize + 4 * (4 * c.cols + static_cast<std::size_t>(start)));
    }
  }
  return map;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSequence& x) {
  write_file(path, to_container(x));
}

EmbeddingSequence read_embeddings(const std::filesystem::path& path) {
  const Container c = read_file(path);
  try {
    return embeddings_from(c);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

void write_sort_profile(const std::filesystem::path& path, const SortProfile& profile) {
  write_file(path, to_container(profile));
}

SortProfile read_sort_profile(const std::filesystem::path& path) {
  const Container c = read_file(path);
  try {
    return sort_profile_from(c, "file:" + path.string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

void write_factorized_map(const std::filesystem::path& path, const FactorizedMap& map) {
  write_file(path, to_container(map));
}

FactorizedMap read_factorized_map(const std::filesystem::path& path) {
  const Container c = read_file(path);
  try {
    return factorized_map_from(c);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace mklvc::embf
