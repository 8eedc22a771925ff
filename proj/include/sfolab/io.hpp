#pragma once

#include "sfolab/world.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sfolab {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

std::string read_file(const std::string& path);
// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::string& path, std::string_view bytes);

// Little-endian binary helpers shared by the dataset and checkpoint formats.
struct ByteWriter {
  std::string out;
  void u8(std::uint8_t v) { out.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void bytes(std::string_view b) { out.append(b); }
  void vec(const Vector& v);  // length then values
  void mat(const Matrix& m);  // rows, cols, row-major values
};

struct ByteReader {
  std::string_view in;
  std::size_t pos = 0;
  std::string what = "file";

  void need(std::size_t n) const;
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string_view bytes(std::size_t n);
  Vector vec();
  Matrix mat();
  bool done() const { return pos == in.size(); }
};

// Record files: an 8-byte magic, a record count, then fixed-layout records.
std::string encode_triplets(const std::vector<Triplet>& ts);
std::vector<Triplet> decode_triplets(std::string_view bytes);
std::string encode_quadruplets(const std::vector<Quadruplet>& qs);
std::vector<Quadruplet> decode_quadruplets(std::string_view bytes);

void save_triplets(const std::string& path, const std::vector<Triplet>& ts);
std::vector<Triplet> load_triplets(const std::string& path);
void save_quadruplets(const std::string& path, const std::vector<Quadruplet>& qs);
std::vector<Quadruplet> load_quadruplets(const std::string& path);

std::string join_path(const std::string& dir, const std::string& name);
void ensure_dir(const std::string& dir);

}  // namespace sfolab
