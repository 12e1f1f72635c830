#pragma once

// Precomputed bivariate tables over (gamma, zeta) of chi, Psi'(0), Psi''(0),
// Psi'''(0): in-memory form, binary file format and O(1) lookup.
//
// File layout (little-endian):
//   "PSWFEXP1" | u32 version=1 | u32 k | u32 Ng | Ng f64 | u32 Nz | Nz f64 |
//   f64 xi1 | 4 surfaces x (Ng-1)(Nz-1) rectangles x (k+1)(k+2)/2 f64 |
//   u32 CRC-32 of every byte between the magic and the checksum.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "pswf/chebkit.hpp"
#include "pswf/errors.hpp"
#include "pswf/phase_oracle.hpp"
#include "pswf/swe_core.hpp"

namespace pswf {

enum Surface : int { surface_chi = 0, surface_dpsi = 1, surface_d2psi = 2, surface_d3psi = 3 };
inline constexpr int num_surfaces = 4;
inline constexpr double default_xi1 = 200.0;

struct BivariateTableSet {
  int k = cheb::default_order;
  std::vector<double> gamma_breaks;  // 2^a, 2^(a+1), ..., 2^b
  std::vector<double> zeta_breaks;   // 0 = z_1 < ... < z_m = 1
  double xi1 = default_xi1;
  // per surface: rectangles in gamma-major order, tri_count(k) coefficients each
  std::array<std::vector<double>, num_surfaces> surfaces;

  std::size_t num_gamma_intervals() const { return gamma_breaks.size() - 1; }
  std::size_t num_zeta_intervals() const { return zeta_breaks.size() - 1; }
  std::size_t stride() const { return cheb::tri_count(k); }
  std::size_t rect_index(std::size_t gi, std::size_t zi) const { return gi * num_zeta_intervals() + zi; }

  std::span<const double> coeffs(int s, std::size_t gi, std::size_t zi) const {
    return {surfaces[static_cast<std::size_t>(s)].data() + rect_index(gi, zi) * stride(), stride()};
  }
  std::span<double> coeffs(int s, std::size_t gi, std::size_t zi) {
    return {surfaces[static_cast<std::size_t>(s)].data() + rect_index(gi, zi) * stride(), stride()};
  }

  double gamma_min() const { return gamma_breaks.front(); }
  double gamma_max() const { return gamma_breaks.back(); }
};

/// Checks every structural invariant; throws invalid_table_error.
inline void validate_tables(const BivariateTableSet& t) {
  auto fail = [](const std::string& m) { throw invalid_table_error("invalid table: " + m); };
  if (t.k < 1 || t.k > 64) fail("order out of range");
  if (t.gamma_breaks.size() < 2) fail("fewer than two gamma breakpoints");
  if (t.zeta_breaks.size() < 2) fail("fewer than two zeta breakpoints");
  for (std::size_t i = 0; i < t.gamma_breaks.size(); ++i) {
    int e = 0;
    const double m = std::frexp(t.gamma_breaks[i], &e);
    if (m != 0.5) fail("gamma breakpoint is not a power of two");
    if (i > 0 && t.gamma_breaks[i] != 2.0 * t.gamma_breaks[i - 1]) fail("gamma breakpoints not dyadic");
  }
  for (std::size_t i = 1; i < t.zeta_breaks.size(); ++i)
    if (!(t.zeta_breaks[i] > t.zeta_breaks[i - 1])) fail("zeta breakpoints not strictly increasing");
  if (t.zeta_breaks.front() != 0.0 || t.zeta_breaks.back() != 1.0) fail("zeta breakpoints must span [0,1]");
  if (!(t.xi1 > 0.0) || !(t.gamma_breaks.front() > t.xi1)) fail("xi1 inconsistent with gamma range");
  const std::size_t want = t.num_gamma_intervals() * t.num_zeta_intervals() * t.stride();
  for (const auto& s : t.surfaces) {
    if (s.size() != want) fail("wrong coefficient count");
    for (double v : s)
      if (!std::isfinite(v)) fail("non-finite coefficient");
  }
}

namespace detail {

class ByteWriter {
 public:
  std::vector<unsigned char> bytes;
  void raw(const char* s, std::size_t n) { bytes.insert(bytes.end(), s, s + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
};

class ByteReader {
 public:
  ByteReader(std::span<const unsigned char> b, std::size_t pos) : b_(b), pos_(pos) {}
  bool can(std::size_t n) const { return pos_ + n <= b_.size(); }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (!can(n)) throw truncated_file_error("table file truncated");
  }
  std::span<const unsigned char> b_;
  std::size_t pos_;
};

inline constexpr char magic[8] = {'P', 'S', 'W', 'F', 'E', 'X', 'P', '1'};
inline constexpr std::uint32_t format_version = 1;

inline std::uint32_t crc_of(std::span<const unsigned char> b) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  std::size_t off = 0;
  while (off < b.size()) {
    const std::size_t n = std::min<std::size_t>(b.size() - off, 1u << 30);
    c = crc32(c, b.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace detail

/// Serialized byte image of a table set.
inline std::vector<unsigned char> serialize(const BivariateTableSet& t) {
  validate_tables(t);
  detail::ByteWriter w;
  w.raw(detail::magic, 8);
  w.u32(detail::format_version);
  w.u32(static_cast<std::uint32_t>(t.k));
  w.u32(static_cast<std::uint32_t>(t.gamma_breaks.size()));
  for (double g : t.gamma_breaks) w.f64(g);
  w.u32(static_cast<std::uint32_t>(t.zeta_breaks.size()));
  for (double z : t.zeta_breaks) w.f64(z);
  w.f64(t.xi1);
  for (const auto& s : t.surfaces)
    for (double c : s) w.f64(c);
  const std::uint32_t crc = detail::crc_of(std::span<const unsigned char>(w.bytes).subspan(8));
  w.u32(crc);
  return std::move(w.bytes);
}

inline BivariateTableSet deserialize(std::span<const unsigned char> b) {
  if (b.size() < 8) throw truncated_file_error("table file truncated: shorter than the magic");
  if (std::memcmp(b.data(), detail::magic, 8) != 0) throw bad_magic_error("not a table file (bad magic)");
  auto crc_ok = [&] {
    if (b.size() < 12) return false;
    const auto payload = b.subspan(8, b.size() - 12);
    detail::ByteReader tail(b, b.size() - 4);
    return detail::crc_of(payload) == tail.u32();
  };
  auto implausible = [&](const std::string& what) -> BivariateTableSet {
    if (!crc_ok()) throw checksum_error("table checksum mismatch");
    throw invalid_table_error("invalid table: " + what);
  };

  detail::ByteReader r(b, 8);
  BivariateTableSet t;
  const std::uint32_t version = r.u32();
  if (version != detail::format_version) return implausible("unsupported version");
  const std::uint32_t k = r.u32();
  if (k < 1 || k > 64) return implausible("order out of range");
  t.k = static_cast<int>(k);
  const std::uint32_t ng = r.u32();
  if (ng < 2 || ng > 64) return implausible("gamma breakpoint count out of range");
  if (!r.can(8ull * ng)) throw truncated_file_error("table file truncated");
  t.gamma_breaks.resize(ng);
  for (auto& g : t.gamma_breaks) g = r.f64();
  const std::uint32_t nz = r.u32();
  if (nz < 2 || nz > (1u << 24)) return implausible("zeta breakpoint count out of range");
  if (!r.can(8ull * nz)) throw truncated_file_error("table file truncated");
  t.zeta_breaks.resize(nz);
  for (auto& z : t.zeta_breaks) z = r.f64();
  t.xi1 = r.f64();

  const std::size_t per = static_cast<std::size_t>(ng - 1) * (nz - 1) * cheb::tri_count(t.k);
  const std::size_t expected = r.pos() + num_surfaces * per * 8 + 4;
  if (b.size() < expected) throw truncated_file_error("table file truncated");
  if (b.size() > expected) {
    if (!crc_ok()) throw checksum_error("table checksum mismatch");
    throw invalid_table_error("invalid table: trailing bytes");
  }
  if (!crc_ok()) throw checksum_error("table checksum mismatch");
  for (auto& s : t.surfaces) {
    s.resize(per);
    for (auto& c : s) c = r.f64();
  }
  validate_tables(t);
  return t;
}

inline void save(const BivariateTableSet& t, const std::string& path) {
  const auto bytes = serialize(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("write failed: " + path);
}

inline BivariateTableSet load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("read failed: " + path);
  return deserialize(bytes);
}

// ---------------------------------------------------------------------------
// Table coordinate
//
// At fixed gamma the tables are expansions in zeta in [0,1], with
//   xi = L + (gamma - L) (zeta + p zeta (1 - zeta)),
// where L = xi1 min(1, gamma/512) and p is chosen so that zeta = 1/2 always
// lands on xi = 2 gamma/pi, where chi crosses gamma^2. chi has a sharp (width
// ~gamma^(1/3) in xi) transition there; holding it at a fixed zeta keeps the
// surfaces smooth along gamma. Below gamma = 512 the transition lies under
// xi = 200, so L scales with gamma to keep it inside the tabulated range.

inline constexpr double xi_floor_knee = 512.0;

/// Lowest tabulated xi at gamma.
inline double xi_floor(double gamma, double xi1 = default_xi1) {
  return xi1 * std::min(1.0, gamma / xi_floor_knee);
}

namespace detail {

inline double zeta_warp(double gamma, double L) {
  const double r = (2.0 / std::numbers::pi * gamma - L) / (gamma - L);
  return 4.0 * (r - 0.5);
}

}  // namespace detail

inline double zeta_to_xi(double gamma, double zeta, double xi1 = default_xi1) {
  const double L = xi_floor(gamma, xi1);
  const double p = detail::zeta_warp(gamma, L);
  return L + (gamma - L) * (zeta + p * zeta * (1.0 - zeta));
}

inline double xi_to_zeta(double gamma, double xi, double xi1 = default_xi1) {
  const double L = xi_floor(gamma, xi1);
  const double p = detail::zeta_warp(gamma, L);
  const double u = (xi - L) / (gamma - L);
  // root of p z^2 - (1+p) z + u = 0 in [0,1], in cancellation-free form
  return 2.0 * u / ((1.0 + p) + std::sqrt((1.0 + p) * (1.0 + p) - 4.0 * p * u));
}

// ---------------------------------------------------------------------------
// Lookup

/// Index of the dyadic gamma interval containing gamma, by exponent arithmetic.
inline std::size_t gamma_interval(const BivariateTableSet& t, double gamma) {
  int e = 0, e0 = 0;
  std::frexp(gamma, &e);
  std::frexp(t.gamma_min(), &e0);
  const long gi = static_cast<long>(e) - static_cast<long>(e0);
  return static_cast<std::size_t>(std::clamp<long>(gi, 0, static_cast<long>(t.num_gamma_intervals()) - 1));
}

inline std::size_t zeta_interval(const BivariateTableSet& t, double zeta) {
  auto first = t.zeta_breaks.begin() + 1, last = t.zeta_breaks.end() - 1;
  return static_cast<std::size_t>(std::upper_bound(first, last, zeta) - first);
}

/// The four surfaces at (gamma, zeta): {chi, Psi'(0), Psi''(0), Psi'''(0)}.
inline std::array<double, num_surfaces> query_zeta(const BivariateTableSet& t, double gamma, double zeta) {
  if (!(gamma >= t.gamma_min() && gamma <= t.gamma_max())) {
    std::ostringstream msg;
    msg << "gamma=" << gamma << " outside table range [" << t.gamma_min() << ", " << t.gamma_max() << "]";
    throw domain_error(msg.str());
  }
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw domain_error("zeta outside [0,1]");
  const std::size_t gi = gamma_interval(t, gamma), zi = zeta_interval(t, zeta);
  const double ga = t.gamma_breaks[gi], gb = t.gamma_breaks[gi + 1];
  const double za = t.zeta_breaks[zi], zb = t.zeta_breaks[zi + 1];
  const double sx = std::clamp((2.0 * gamma - (ga + gb)) / (gb - ga), -1.0, 1.0);
  const double sy = std::clamp((2.0 * zeta - (za + zb)) / (zb - za), -1.0, 1.0);
  std::array<double, num_surfaces> out{};
  for (int s = 0; s < num_surfaces; ++s) out[static_cast<std::size_t>(s)] = cheb::eval_bivariate_raw(t.coeffs(s, gi, zi), t.k, sx, sy);
  return out;
}

/// The four surfaces at real xi in [200, gamma].
inline std::array<double, num_surfaces> query_xi(const BivariateTableSet& t, double gamma, double xi) {
  if (!(xi >= t.xi1 && xi <= gamma)) {
    std::ostringstream msg;
    msg << "xi=" << xi << " violates 200 <= xi <= gamma (gamma=" << gamma << ")";
    throw domain_error(msg.str());
  }
  return query_zeta(t, gamma, std::clamp(xi_to_zeta(gamma, xi, t.xi1), 0.0, 1.0));
}

/// Phase seed of ps_n(x; gamma^2) from the tables; valid for 200 <= n <= gamma.
inline PhaseSeed query(const BivariateTableSet& t, double gamma, long n) {
  if (!(gamma >= t.gamma_min() && gamma <= t.gamma_max())) {
    std::ostringstream msg;
    msg << "gamma=" << gamma << " outside table range [" << t.gamma_min() << ", " << t.gamma_max() << "]";
    throw domain_error(msg.str());
  }
  if (!(static_cast<double>(n) >= t.xi1 && static_cast<double>(n) <= gamma)) {
    std::ostringstream msg;
    msg << "n=" << n << " violates 200 <= n <= gamma (gamma=" << gamma << ")";
    throw domain_error(msg.str());
  }
  const double zeta = std::clamp(xi_to_zeta(gamma, static_cast<double>(n), t.xi1), 0.0, 1.0);
  const auto v = query_zeta(t, gamma, zeta);
  return PhaseSeed{-std::numbers::pi / 2.0 * static_cast<double>(n + 1), v[1], v[2], v[3], v[0]};
}

/// As query, with chi polished by one Newton step on xi(chi) = n through the
/// phase oracle. The table's chi carries a few ulps of fitting noise, and
/// ps_n moves by about n ulps of phase per ulp of chi; one oracle call (O(1)
/// in gamma) brings chi back to the oracle's own resolution. The derivatives
/// come from that call.
inline PhaseSeed query_refined(const BivariateTableSet& t, double gamma, long n) {
  const PhaseSeed s = query(t, gamma, n);
  const double zeta = std::clamp(xi_to_zeta(gamma, static_cast<double>(n), t.xi1), 0.0, 1.0);
  const double h = 1e-7;
  const double za = std::max(0.0, zeta - h), zb = std::min(1.0, zeta + h);
  const double dchi_dxi = (query_zeta(t, gamma, zb)[surface_chi] - query_zeta(t, gamma, za)[surface_chi]) /
                          (zeta_to_xi(gamma, zb, t.xi1) - zeta_to_xi(gamma, za, t.xi1));
  PhaseSeed r = phase_at_zero(SWEParameters{gamma, s.chi});
  r.chi = s.chi - (xi_of_psi0(r.psi0) - static_cast<double>(n)) * dchi_dxi;
  r.psi0 = s.psi0;
  return r;
}

}  // namespace pswf
