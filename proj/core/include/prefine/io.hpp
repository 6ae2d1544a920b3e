#pragma once

// File formats shared by every stage:
//
//   *.prfy      "PRFY" | u16 version=1 | u64 rows | u32 cols | rows*cols f32,
//               all little-endian, row-major, no padding (18-byte header).
//   *.meta.json JSON array of {"sample_id", "camera_id", "frame_index",
//               "true_identity" (int or null)}, one object per row.
//   pairs.csv   two integer columns, optional "i,j" header.
//   split.json  {"query": [idx...], "gallery": [idx...]}.
//   labels.csv  "sample_id,label" header, -1 marks noise.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prefine/embeddings.hpp"

namespace prefine::io {

namespace fs = std::filesystem;

inline constexpr char kMagic[4] = {'P', 'R', 'F', 'Y'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 2 + 8 + 4;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
};

void write_matrix(const fs::path& path, std::size_t rows, std::size_t cols,
                  std::span<const float> values);
Matrix read_matrix(const fs::path& path);

// "embeddings.prfy" -> "embeddings.meta.json"
fs::path metadata_path(const fs::path& embeddings_path);

struct LoadStats {
  std::size_t renormalized_rows = 0;
  bool metadata_found = false;
};

// Writes the binary payload and the metadata sidecar next to it.
void save_embeddings(const fs::path& path, const EmbeddingSet& emb);
EmbeddingSet load_embeddings(const fs::path& path, LoadStats* stats = nullptr);

void write_metadata(const fs::path& path, const std::vector<SampleMeta>& meta);
std::vector<SampleMeta> read_metadata(const fs::path& path);

void save_pairs(const fs::path& path, const PairList& pairs);
PairList load_pairs(const fs::path& path, std::size_t n);

void save_split(const fs::path& path, const RetrievalSplit& split);
RetrievalSplit load_split(const fs::path& path, std::size_t n);

void save_labels(const fs::path& path, const EmbeddingSet& emb,
                 std::span<const std::int32_t> labels);
// Labels are matched back to rows through sample_id.
std::vector<std::int32_t> load_labels(const fs::path& path, const EmbeddingSet& emb);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace prefine::io
