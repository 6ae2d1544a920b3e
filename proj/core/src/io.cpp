#include "prefine/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "prefine/error.hpp"

namespace prefine::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is, const fs::path& path) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw InputError(path.string() + ": truncated header");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_index(std::string_view token, Index& out) {
  token = trim(token);
  if (token.empty()) return false;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_matrix(const fs::path& path, std::size_t rows, std::size_t cols,
                  std::span<const float> values) {
  if (values.size() != rows * cols) {
    throw ContractError("write_matrix: payload size does not match rows*cols");
  }
  auto out = open_out(path, std::ios::binary);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint16_t>(out, kFormatVersion);
  put<std::uint64_t>(out, rows);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out) throw InputError("write failed: " + path.string());
}

Matrix read_matrix(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw InputError(path.string() + ": bad magic (expected PRFY)");
  }
  const auto version = get<std::uint16_t>(in, path);
  if (version != kFormatVersion) {
    throw InputError(path.string() + ": unsupported version " + std::to_string(version));
  }
  Matrix m;
  m.rows = get<std::uint64_t>(in, path);
  m.cols = get<std::uint32_t>(in, path);

  const auto file_size = fs::file_size(path);
  const auto expected = kHeaderBytes + m.rows * m.cols * sizeof(float);
  if (file_size != expected) {
    throw InputError(path.string() + ": payload size " + std::to_string(file_size) +
                     " bytes does not match header (" + std::to_string(expected) + ")");
  }
  m.values.resize(m.rows * m.cols);
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!in) throw InputError(path.string() + ": truncated payload");
  return m;
}

fs::path metadata_path(const fs::path& embeddings_path) {
  fs::path p = embeddings_path;
  p.replace_extension(".meta.json");
  return p;
}

void save_embeddings(const fs::path& path, const EmbeddingSet& emb) {
  write_matrix(path, emb.size(), emb.dim(), emb.features());
  write_metadata(metadata_path(path), emb.meta());
}

EmbeddingSet load_embeddings(const fs::path& path, LoadStats* stats) {
  Matrix m = read_matrix(path);
  std::vector<SampleMeta> meta;
  const auto meta_file = metadata_path(path);
  const bool have_meta = fs::exists(meta_file);
  if (have_meta) meta = read_metadata(meta_file);

  EmbeddingSet::BuildStats build;
  auto emb = EmbeddingSet::from_rows(m.rows, m.cols, std::move(m.values), std::move(meta),
                                     &build);
  if (build.renormalized_rows > 0) {
    std::cerr << "warning: " << path.string() << ": " << build.renormalized_rows
              << " row(s) were not unit norm and have been normalized\n";
  }
  if (stats) {
    stats->renormalized_rows = build.renormalized_rows;
    stats->metadata_found = have_meta;
  }
  return emb;
}

void write_metadata(const fs::path& path, const std::vector<SampleMeta>& meta) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : meta) {
    nlohmann::json o;
    o["sample_id"] = m.sample_id;
    o["camera_id"] = m.camera_id;
    o["frame_index"] = m.frame_index;
    o["true_identity"] = m.true_identity ? nlohmann::json(*m.true_identity) : nlohmann::json();
    arr.push_back(std::move(o));
  }
  write_text(path, arr.dump(1) + "\n");
}

std::vector<SampleMeta> read_metadata(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw InputError(path.string() + ": metadata must be a JSON array");

  std::vector<SampleMeta> meta;
  meta.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& o = doc[i];
    SampleMeta m;
    try {
      m.sample_id = o.contains("sample_id") ? o.at("sample_id").get<std::string>()
                                            : std::to_string(i);
      if (o.contains("camera_id")) m.camera_id = o.at("camera_id").get<std::int64_t>();
      if (o.contains("frame_index")) m.frame_index = o.at("frame_index").get<std::int64_t>();
      if (o.contains("true_identity") && !o.at("true_identity").is_null()) {
        m.true_identity = o.at("true_identity").get<std::int64_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path.string() + ": record " + std::to_string(i) + ": " + e.what());
    }
    meta.push_back(std::move(m));
  }
  return meta;
}

void save_pairs(const fs::path& path, const PairList& pairs) {
  std::ostringstream os;
  os << "i,j\n";
  for (const auto& p : pairs) os << p.first << ',' << p.second << '\n';
  write_text(path, os.str());
}

PairList load_pairs(const fs::path& path, std::size_t n) {
  auto in = open_in(path);
  std::vector<std::pair<Index, Index>> raw;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto comma = text.find(',');
    if (first_content) {
      first_content = false;
      if (comma != std::string_view::npos && trim(text.substr(0, comma)) == "i" &&
          trim(text.substr(comma + 1)) == "j") {
        continue;
      }
    }
    Index i = 0, j = 0;
    if (comma == std::string_view::npos || !parse_index(text.substr(0, comma), i) ||
        !parse_index(text.substr(comma + 1), j)) {
      throw InputError(path.string() + ": non-integer token at line " + std::to_string(line_no));
    }
    if (i == j) {
      throw InputError(path.string() + ": self-pair at line " + std::to_string(line_no));
    }
    if (i >= n || j >= n) {
      throw InputError(path.string() + ": index out of range (n=" + std::to_string(n) +
                       ") at line " + std::to_string(line_no));
    }
    raw.emplace_back(i, j);
  }
  return PairList::from_pairs(raw, n);
}

void save_split(const fs::path& path, const RetrievalSplit& split) {
  nlohmann::json doc;
  doc["query"] = split.query;
  doc["gallery"] = split.gallery;
  write_text(path, doc.dump() + "\n");
}

RetrievalSplit load_split(const fs::path& path, std::size_t n) {
  RetrievalSplit split;
  try {
    const auto doc = nlohmann::json::parse(read_text(path));
    split.query = doc.at("query").get<std::vector<Index>>();
    split.gallery = doc.at("gallery").get<std::vector<Index>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  for (const auto* side : {&split.query, &split.gallery}) {
    for (Index i : *side) {
      if (i >= n) throw InputError(path.string() + ": index " + std::to_string(i) + " >= n");
    }
  }
  return split;
}

void save_labels(const fs::path& path, const EmbeddingSet& emb,
                 std::span<const std::int32_t> labels) {
  if (labels.size() != emb.size()) {
    throw ContractError("save_labels: label count does not match embedding rows");
  }
  std::ostringstream os;
  os << "sample_id,label\n";
  for (Index i = 0; i < emb.size(); ++i) os << emb.meta(i).sample_id << ',' << labels[i] << '\n';
  write_text(path, os.str());
}

std::vector<std::int32_t> load_labels(const fs::path& path, const EmbeddingSet& emb) {
  std::unordered_map<std::string, Index> by_id;
  for (Index i = 0; i < emb.size(); ++i) by_id.emplace(emb.meta(i).sample_id, i);

  std::vector<std::int32_t> labels(emb.size(), 0);
  std::vector<bool> filled(emb.size(), false);
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || (line_no == 1 && text.starts_with("sample_id"))) continue;
    const auto comma = text.rfind(',');
    if (comma == std::string_view::npos) {
      throw InputError(path.string() + ": malformed row at line " + std::to_string(line_no));
    }
    const std::string id(trim(text.substr(0, comma)));
    const auto value = trim(text.substr(comma + 1));
    std::int32_t label = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), label);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      throw InputError(path.string() + ": bad label at line " + std::to_string(line_no));
    }
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw InputError(path.string() + ": unknown sample_id '" + id + "' at line " +
                       std::to_string(line_no));
    }
    labels[it->second] = label;
    filled[it->second] = true;
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
    throw InputError(path.string() + ": labels missing for some samples");
  }
  return labels;
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace prefine::io
