#include "sfolab/numcore.hpp"

#include <bit>
#include <cstring>
#include <numbers>

namespace sfolab {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "gelu"; }

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "gelu") return Activation::gelu;
  throw ValueError("unknown activation '" + std::string(s) + "'");
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw ValueError("MlpSpec: input/output dims must be >= 1");
  for (int w : hidden_widths)
    if (w < 1) throw ValueError("MlpSpec: hidden widths must be >= 1");
}

std::size_t MlpSpec::num_params() const {
  std::size_t n = 0;
  for (int i = 0; i < num_layers(); ++i)
    n += static_cast<std::size_t>(layer_out(i)) * (layer_in(i) + 1);
  return n;
}

void check_params(const ParamSet& params, const MlpSpec& spec) {
  if (static_cast<int>(params.layers.size()) != spec.num_layers())
    throw ShapeError("params have " + std::to_string(params.layers.size()) + " layers, spec " +
                     std::to_string(spec.num_layers()));
  for (int i = 0; i < spec.num_layers(); ++i) {
    const auto& l = params.layers[i];
    if (l.weight.rows() != spec.layer_out(i) || l.weight.cols() != spec.layer_in(i) ||
        l.bias.size() != spec.layer_out(i))
      throw ShapeError("layer " + std::to_string(i) + ": weight " + std::to_string(l.weight.rows()) + "x" +
                       std::to_string(l.weight.cols()) + ", expected " + std::to_string(spec.layer_out(i)) +
                       "x" + std::to_string(spec.layer_in(i)));
  }
}

namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host assumed");

void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); }

void put_doubles(std::string& out, const double* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n * sizeof(double));
}

struct Reader {
  std::string_view b;
  std::size_t pos = 0;
  std::uint64_t u64() {
    if (pos + 8 > b.size()) throw IoError("param blob truncated");
    std::uint64_t v;
    std::memcpy(&v, b.data() + pos, 8);
    pos += 8;
    return v;
  }
  void doubles(double* p, std::size_t n) {
    if (pos + n * 8 > b.size()) throw IoError("param blob truncated");
    std::memcpy(p, b.data() + pos, n * 8);
    pos += n * 8;
  }
};

}  // namespace

std::string serialize_params(const ParamSet& params) {
  std::string out;
  put_u64(out, params.layers.size());
  for (const auto& l : params.layers) {
    put_u64(out, static_cast<std::uint64_t>(l.weight.rows()));
    put_u64(out, static_cast<std::uint64_t>(l.weight.cols()));
    put_doubles(out, l.weight.data(), l.weight.size());
    put_doubles(out, l.bias.data(), l.bias.size());
  }
  return out;
}

ParamSet deserialize_params(std::string_view bytes) {
  Reader r{bytes};
  ParamSet p;
  std::uint64_t n = r.u64();
  if (n > 1024) throw IoError("param blob: implausible layer count");
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint64_t rows = r.u64(), cols = r.u64();
    if (rows > (1u << 20) || cols > (1u << 20)) throw IoError("param blob: implausible layer shape");
    LayerParams<double> l{Matrix(rows, cols), Vector(rows)};
    r.doubles(l.weight.data(), l.weight.size());
    r.doubles(l.bias.data(), l.bias.size());
    p.layers.push_back(std::move(l));
  }
  if (r.pos != bytes.size()) throw IoError("param blob: trailing bytes");
  return p;
}

// ---- Philox ----

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += W0;
      k[1] += W1;
    }
    std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
    std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::array<std::uint32_t, 4> RngStream::next_block() {
  std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                   static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  ++counter_;
  return philox4x32(ctr, key);
}

std::uint64_t RngStream::next_u64() {
  auto b = next_block();
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

namespace {
inline double to_open_unit(std::uint64_t bits) {
  // 53 random bits, shifted by half an ulp so 0 and 1 are unreachable.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}
}  // namespace

double RngStream::uniform() { return to_open_unit(next_u64()); }

double RngStream::normal() {
  auto b = next_block();
  double u1 = to_open_unit((static_cast<std::uint64_t>(b[1]) << 32) | b[0]);
  double u2 = to_open_unit((static_cast<std::uint64_t>(b[3]) << 32) | b[2]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw ValueError("RngStream::below: n must be positive");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RngStream RngStream::split(std::uint64_t tag) const {
  return RngStream(seed_, mix64(mix64(stream_) ^ mix64(tag ^ 0x5851F42D4C957F2Dull)), 0);
}

std::uint64_t tag_of(std::string_view name) {
  // FNV-1a, only used to turn stage names into stream tags.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Matrix normal_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols, double std) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * rng.normal();
  return m;
}

}  // namespace sfolab
