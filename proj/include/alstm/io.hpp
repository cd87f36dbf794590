#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "alstm/approx.hpp"
#include "alstm/error.hpp"
#include "alstm/lstm.hpp"
#include "alstm/perf_model.hpp"

namespace alstm {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::string_view kModelMagic = "ALSTM1";
inline constexpr std::string_view kFactorMagic = "ALSTF1";
inline constexpr std::size_t kMagicBytes = 8;  // magic, NUL padded
inline constexpr std::uint16_t kContainerVersion = 1;

namespace detail {

/// Little-endian writer, independent of host byte order.
class ByteWriter {
 public:
  void magic(std::string_view m) {
    for (std::size_t i = 0; i < kMagicBytes; ++i) out_.push_back(i < m.size() ? static_cast<std::uint8_t>(m[i]) : 0);
  }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(const Bytes& in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) {
      throw FormatError(FormatError::Kind::kTruncated, "container truncated at byte " + std::to_string(in_.size()) +
                                                           ", need " + std::to_string(pos_ + n));
    }
  }
  void magic(std::string_view expected) {
    need(kMagicBytes);
    for (std::size_t i = 0; i < kMagicBytes; ++i) {
      const auto want = i < expected.size() ? static_cast<std::uint8_t>(expected[i]) : std::uint8_t{0};
      if (in_[pos_ + i] != want) {
        throw FormatError(FormatError::Kind::kBadMagic, "bad magic, expected " + std::string(expected));
      }
    }
    pos_ += kMagicBytes;
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  float finite_f32() {
    const float v = f32();
    if (!std::isfinite(v)) throw FormatError(FormatError::Kind::kNonFinite, "non-finite value in container");
    return v;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  const Bytes& in_;
  std::size_t pos_ = 0;
};

inline void check_version(std::uint16_t v) {
  if (v != kContainerVersion) {
    throw FormatError(FormatError::Kind::kBadVersion, "unsupported container version " + std::to_string(v));
  }
}

inline void check_exact_size(std::size_t expected, std::size_t actual) {
  if (actual < expected) {
    throw FormatError(FormatError::Kind::kTruncated,
                      "container holds " + std::to_string(actual) + " bytes, expected " + std::to_string(expected));
  }
  if (actual > expected) {
    throw FormatError(FormatError::Kind::kBadHeader, "container has " + std::to_string(actual - expected) +
                                                         " trailing bytes");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model container
//   magic[8] "ALSTM1" | u16 version | u32 input_size | u32 hidden_size |
//   4 gates x R x C float32, row-major, gate order input/forget/output/cell.
// ---------------------------------------------------------------------------

inline std::size_t model_container_size(std::size_t input_size, std::size_t hidden) {
  return kMagicBytes + 2 + 8 + 4 * hidden * (input_size + hidden) * 4;
}

inline Bytes encode_model(const LstmModel& m) {
  m.validate();
  detail::ByteWriter w;
  w.magic(kModelMagic);
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(m.input_size));
  w.u32(static_cast<std::uint32_t>(m.hidden_size));
  for (const auto& g : m.gates)
    for (float x : g.values()) w.f32(x);
  return w.take();
}

inline LstmModel decode_model(const Bytes& bytes) {
  detail::ByteReader r(bytes);
  r.magic(kModelMagic);
  detail::check_version(r.u16());
  const std::size_t input = r.u32();
  const std::size_t hidden = r.u32();
  if (input == 0 || hidden == 0) throw FormatError(FormatError::Kind::kBadHeader, "model sizes must be positive");
  detail::check_exact_size(model_container_size(input, hidden), bytes.size());
  LstmModel m{input, hidden, {}};
  for (auto& g : m.gates) {
    g = DenseMatrix(hidden, input + hidden);
    for (auto& x : g.values()) x = r.finite_f32();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Factor container
//   magic[8] "ALSTF1" | u16 version | u32 R | u32 C | u32 nz | u32 n_terms |
//   per gate, per term: f32 sigma | R x f32 u | nz x (u32 index, f32 value),
//   indices strictly ascending and < C.
// ---------------------------------------------------------------------------

inline std::size_t factor_container_size(std::size_t r, std::size_t nz, std::size_t n_terms) {
  return kMagicBytes + 2 + 16 + kNumGates * n_terms * (4 + 4 * r + 8 * nz);
}

inline Bytes encode_factors(const ApproxLstmModel& m) {
  m.validate();
  const std::size_t r = m.hidden_size, c = m.cols(), nz = m.gates[0].nz, n = m.term_count();
  if (n == 0) throw FormatError(FormatError::Kind::kBadHeader, "factor set has no terms");
  detail::ByteWriter w;
  w.magic(kFactorMagic);
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(r));
  w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(nz));
  w.u32(static_cast<std::uint32_t>(n));
  for (const auto& g : m.gates) {
    for (const auto& t : g.terms) {
      if (t.v_masked.entries.size() != nz || !t.v_masked.indices_valid()) {
        throw FormatError(FormatError::Kind::kBadIndices, "refinement term has an invalid sparse support");
      }
      w.f32(t.sigma);
      for (float x : t.u) w.f32(x);
      for (const auto& e : t.v_masked.entries) {
        w.u32(e.index);
        w.f32(e.value);
      }
    }
  }
  return w.take();
}

inline ApproxLstmModel decode_factors(const Bytes& bytes) {
  detail::ByteReader rd(bytes);
  rd.magic(kFactorMagic);
  detail::check_version(rd.u16());
  const std::size_t r = rd.u32(), c = rd.u32(), nz = rd.u32(), n = rd.u32();
  if (r == 0 || c <= r) throw FormatError(FormatError::Kind::kBadHeader, "factor header needs 0 < R < C");
  if (nz == 0 || nz > c) throw FormatError(FormatError::Kind::kBadHeader, "factor header nz outside [1, C]");
  if (n == 0) throw FormatError(FormatError::Kind::kBadHeader, "factor header has n_terms = 0");
  detail::check_exact_size(factor_container_size(r, nz, n), bytes.size());

  ApproxLstmModel m{c - r, r, {}};
  for (auto& g : m.gates) {
    g.rows = r;
    g.cols = c;
    g.nz = nz;
    g.terms.resize(n);
    for (auto& t : g.terms) {
      t.sigma = rd.finite_f32();
      if (t.sigma < 0.0f) throw FormatError(FormatError::Kind::kNonFinite, "negative singular value");
      t.u = DenseVector(r);
      for (auto& x : t.u) x = rd.finite_f32();
      t.v_masked.full_len = c;
      t.v_masked.entries.resize(nz);
      for (auto& e : t.v_masked.entries) {
        e.index = rd.u32();
        e.value = rd.finite_f32();
      }
      if (!t.v_masked.indices_valid()) {
        throw FormatError(FormatError::Kind::kBadIndices, "sparse indices not strictly ascending or out of range");
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::kIo, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::kIo, "write failed for " + path);
}

inline void write_text(const std::string& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

inline void save_model(const std::string& path, const LstmModel& m) { write_file(path, encode_model(m)); }
inline LstmModel load_model(const std::string& path) { return decode_model(read_file(path)); }
inline void save_factors(const std::string& path, const ApproxLstmModel& m) { write_file(path, encode_factors(m)); }
inline ApproxLstmModel load_factors(const std::string& path) { return decode_factors(read_file(path)); }

// ---------------------------------------------------------------------------
// Platform description: `key = value` lines, '#' starts a comment.
//   peak_gops          compute roof in 1e9 ops/s
//   mem_bandwidth_gbps off-chip bandwidth in 1e9 bytes/s
//   clock_mhz          clock in MHz
//   onchip_kbytes      on-chip buffer capacity in KiB
//   multiplier_budget  available multipliers
// ---------------------------------------------------------------------------

inline PlatformSpec parse_platform(const std::string& text) {
  static const std::set<std::string> kKeys = {"peak_gops", "mem_bandwidth_gbps", "clock_mhz", "onchip_kbytes",
                                              "multiplier_budget"};
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::map<std::string, double> values;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("platform line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!kKeys.count(key)) throw InputError("platform line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (values.count(key)) throw InputError("platform line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size() || !std::isfinite(v) || v <= 0.0) {
      throw InputError("platform line " + std::to_string(lineno) + ": '" + key + "' needs a positive number");
    }
    values[key] = v;
  }
  for (const auto& k : kKeys)
    if (!values.count(k)) throw InputError("platform: missing key '" + k + "'");

  PlatformSpec p;
  p.peak_gops = values["peak_gops"];
  p.mem_bandwidth_bytes_per_s = values["mem_bandwidth_gbps"] * 1e9;
  p.clock_hz = values["clock_mhz"] * 1e6;
  p.onchip_bytes = static_cast<std::uint64_t>(std::llround(values["onchip_kbytes"] * 1024.0));
  p.multiplier_budget = static_cast<std::uint64_t>(std::llround(values["multiplier_budget"]));
  p.validate();
  return p;
}

inline PlatformSpec load_platform(const std::string& path) {
  const auto bytes = read_file(path);
  return parse_platform(std::string(bytes.begin(), bytes.end()));
}

}  // namespace alstm
