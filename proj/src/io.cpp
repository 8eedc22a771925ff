#include "sfolab/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace sfolab {

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw IoError("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

// ---- byte helpers ----

static_assert(std::endian::native == std::endian::little, "formats assume a little-endian host");

void ByteWriter::u32(std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void ByteWriter::u64(std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); }
void ByteWriter::f64(double v) { out.append(reinterpret_cast<const char*>(&v), 8); }

void ByteWriter::vec(const Vector& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  out.append(reinterpret_cast<const char*>(v.data()), static_cast<std::size_t>(v.size()) * 8);
}

void ByteWriter::mat(const Matrix& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * 8);
}

void ByteReader::need(std::size_t n) const {
  if (n > in.size() - pos) throw IoError(what + ": truncated at byte " + std::to_string(pos));
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(in[pos++]);
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, in.data() + pos, 8);
  pos += 8;
  return v;
}

double ByteReader::f64() {
  need(8);
  double v;
  std::memcpy(&v, in.data() + pos, 8);
  pos += 8;
  return v;
}

std::string_view ByteReader::bytes(std::size_t n) {
  need(n);
  auto s = in.substr(pos, n);
  pos += n;
  return s;
}

Vector ByteReader::vec() {
  std::uint64_t n = u64();
  if (n > (1ull << 28)) throw IoError(what + ": implausible vector length");
  need(n * 8);
  Vector v(static_cast<Eigen::Index>(n));
  std::memcpy(v.data(), in.data() + pos, n * 8);
  pos += n * 8;
  return v;
}

Matrix ByteReader::mat() {
  std::uint64_t r = u64(), c = u64();
  if (r > (1ull << 24) || c > (1ull << 24) || r * c > (1ull << 28)) throw IoError(what + ": implausible matrix shape");
  need(r * c * 8);
  Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  std::memcpy(m.data(), in.data() + pos, r * c * 8);
  pos += r * c * 8;
  return m;
}

// ---- record files ----

namespace {

constexpr std::string_view kTripletMagic = "SFOTRIP1";
constexpr std::string_view kQuadMagic = "SFOQUAD1";

void put_cond(ByteWriter& w, const ConditionPair& c) {
  w.vec(c.c_img);
  w.u8(c.degraded);
  w.vec(c.c_text);
  w.u8(c.generic);
  w.u8(c.null_flag);
}

ConditionPair get_cond(ByteReader& r) {
  ConditionPair c;
  c.c_img = r.vec();
  c.degraded = r.u8() != 0;
  c.c_text = r.vec();
  c.generic = r.u8() != 0;
  c.null_flag = r.u8() != 0;
  return c;
}

void put_triplet(ByteWriter& w, const Triplet& t) {
  w.i64(t.subject_id);
  w.i64(t.context_id);
  w.vec(t.x_tgt);
  put_cond(w, t.cond);
}

Triplet get_triplet(ByteReader& r) {
  Triplet t;
  t.subject_id = r.i64();
  t.context_id = r.i64();
  t.x_tgt = r.vec();
  t.cond = get_cond(r);
  return t;
}

std::uint64_t open_records(ByteReader& r, std::string_view magic) {
  if (r.in.size() < magic.size() || r.in.substr(0, magic.size()) != magic)
    throw IoError(r.what + ": bad magic (expected " + std::string(magic) + ")");
  r.pos = magic.size();
  std::uint64_t n = r.u64();
  if (n > (1ull << 32)) throw IoError(r.what + ": implausible record count");
  return n;
}

}  // namespace

std::string encode_triplets(const std::vector<Triplet>& ts) {
  ByteWriter w;
  w.bytes(kTripletMagic);
  w.u64(ts.size());
  for (const auto& t : ts) put_triplet(w, t);
  return std::move(w.out);
}

std::vector<Triplet> decode_triplets(std::string_view bytes) {
  ByteReader r{bytes, 0, "triplet file"};
  std::uint64_t n = open_records(r, kTripletMagic);
  std::vector<Triplet> out;
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(get_triplet(r));
  if (!r.done()) throw IoError("triplet file: trailing bytes");
  return out;
}

std::string encode_quadruplets(const std::vector<Quadruplet>& qs) {
  ByteWriter w;
  w.bytes(kQuadMagic);
  w.u64(qs.size());
  for (const auto& q : qs) {
    put_triplet(w, q.pos);
    w.vec(q.x_neg);
    put_cond(w, q.neg_cond);
    w.u8(static_cast<std::uint8_t>(q.provenance));
  }
  return std::move(w.out);
}

std::vector<Quadruplet> decode_quadruplets(std::string_view bytes) {
  ByteReader r{bytes, 0, "quadruplet file"};
  std::uint64_t n = open_records(r, kQuadMagic);
  std::vector<Quadruplet> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    Quadruplet q;
    q.pos = get_triplet(r);
    q.x_neg = r.vec();
    q.neg_cond = get_cond(r);
    std::uint8_t p = r.u8();
    if (p > static_cast<std::uint8_t>(Provenance::mode_pool))
      throw IoError("quadruplet file: unknown provenance code " + std::to_string(p) + " in record " +
                    std::to_string(i));
    q.provenance = static_cast<Provenance>(p);
    if (q.x_neg.size() != q.pos.x_tgt.size())
      throw IoError("quadruplet file: record " + std::to_string(i) + " has mismatched x_neg dimension");
    out.push_back(std::move(q));
  }
  if (!r.done()) throw IoError("quadruplet file: trailing bytes");
  return out;
}

void save_triplets(const std::string& path, const std::vector<Triplet>& ts) {
  write_file_atomic(path, encode_triplets(ts));
}
std::vector<Triplet> load_triplets(const std::string& path) { return decode_triplets(read_file(path)); }
void save_quadruplets(const std::string& path, const std::vector<Quadruplet>& qs) {
  write_file_atomic(path, encode_quadruplets(qs));
}
std::vector<Quadruplet> load_quadruplets(const std::string& path) { return decode_quadruplets(read_file(path)); }

}  // namespace sfolab
