#pragma once

// EMBF: one binary container for embedding sequences, sort profiles and
// factorized maps.
//
//   offset  size  field
//        0     4  magic "EMBF"
//        4     2  version, u16 little-endian, always 1
//        6     2  payload kind, u16 LE (0 embeddings, 1 sort profile, 2 factorized map)
//        8     4  rows T, u32 LE
//       12     4  cols D, u32 LE
//       16     1  dtype, u8 (0 = float32 little-endian)
//       17     7  reserved, zero
//       24   4TD  payload, row-major
//
// Values are stored as 32-bit floats and computed on as 64-bit doubles:
// reading widens exactly, writing rounds to nearest. A file's size must be
// exactly 24 + 4*T*D bytes.
//
// Payload layouts (D = embedding dimension, columns of every row):
//   kind 0: T frames.
//   kind 1: T = 2. Row 0 per-dimension std, row 1 the descending-std
//           permutation as integral floats.
//   kind 2: T = 4 + K. Row 0 permutation; row 1 source means and row 2 target
//           means in sorted-dimension order; row 3 offsets b; row 4 + r holds
//           row r of every block matrix, block i in columns [i*K, (i+1)*K).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mklvc/stats.hpp"
#include "mklvc/transport.hpp"

namespace mklvc::embf {

inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::uint16_t kVersion = 1;

enum class PayloadKind : std::uint16_t {
  kEmbeddings = 0,
  kSortProfile = 1,
  kFactorizedMap = 2,
};

/// Raw decoded container: header fields plus the float payload.
struct Container {
  PayloadKind kind = PayloadKind::kEmbeddings;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> data;  // row-major, rows * cols
};

std::string encode(const Container& c);
/// Throws ParseError naming the byte offset of the first problem.
Container decode(std::string_view bytes);

/// Writes through a temporary file in the same directory and renames it into
/// place, so a failed write never leaves a partial file at `path`.
void write_file(const std::filesystem::path& path, const Container& c);
Container read_file(const std::filesystem::path& path);

Container to_container(const EmbeddingSequence& x);
Container to_container(const SortProfile& profile);
Container to_container(const FactorizedMap& map);

EmbeddingSequence embeddings_from(const Container& c);
/// The returned profile's source_tag is `tag`.
SortProfile sort_profile_from(const Container& c, std::string tag);
FactorizedMap factorized_map_from(const Container& c);

void write_embeddings(const std::filesystem::path& path, const EmbeddingSequence& x);
EmbeddingSequence read_embeddings(const std::filesystem::path& path);

void write_sort_profile(const std::filesystem::path& path, const SortProfile& profile);
/// source_tag becomes "file:<path>".
SortProfile read_sort_profile(const std::filesystem::path& path);

void write_factorized_map(const std::filesystem::path& path, const FactorizedMap& map);
FactorizedMap read_factorized_map(const std::filesystem::path& path);

}  // namespace mklvc::embf
