#include "oracle.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace oracle {

namespace {

mpq_class pow2(long e) {
  mpz_class one = 1;
  mpq_class r;
  if (e >= 0) {
    mpz_class p;
    mpz_mul_2exp(p.get_mpz_t(), one.get_mpz_t(), static_cast<mp_bitcnt_t>(e));
    r = p;
  } else {
    mpz_class p;
    mpz_mul_2exp(p.get_mpz_t(), one.get_mpz_t(), static_cast<mp_bitcnt_t>(-e));
    r = mpq_class(1, p);
  }
  r.canonicalize();
  return r;
}

// Reads the posit bit string left to right.
mpq_class posit_value(std::uint32_t bits, int n, int es) {
  const bool negative = (bits >> (n - 1)) & 1u;
  std::uint32_t mag = negative ? ((~bits + 1u) & ((1u << n) - 1u)) : bits;
  std::vector<int> s;
  for (int i = n - 2; i >= 0; --i) s.push_back(static_cast<int>((mag >> i) & 1u));
  std::size_t pos = 0;
  const int first = s[0];
  int run = 0;
  while (pos < s.size() && s[pos] == first) {
    ++run;
    ++pos;
  }
  if (pos < s.size()) ++pos;  // terminating bit
  const long k = first ? run - 1 : -run;
  long e = 0;
  for (int i = 0; i < es; ++i) {
    e <<= 1;
    if (pos < s.size()) e |= s[pos++];
  }
  mpq_class frac = 1;
  mpq_class weight(1, 2);
  for (; pos < s.size(); ++pos) {
    if (s[pos]) frac += weight;
    weight /= 2;
  }
  mpq_class v = pow2(k * (1L << es) + e) * frac;
  v.canonicalize();
  return negative ? mpq_class(-v) : v;
}

mpq_class e2m1_value(std::uint32_t bits) {
  const bool negative = bits & 0x8u;
  const int e = static_cast<int>((bits >> 1) & 0x3u);
  const int m = static_cast<int>(bits & 0x1u);
  mpq_class v = e == 0 ? mpq_class(m, 2) : pow2(e - 1) * mpq_class(2 + m, 2);
  v.canonicalize();
  return negative ? mpq_class(-v) : v;
}

struct Lattice {
  std::vector<mpq_class> values;  // ascending non-negative magnitudes
  std::vector<std::uint32_t> patterns;
};

const Lattice& lattice(const Format& f) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, bool>, Lattice> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(f.n, f.es, f.fp4);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Lattice l;
  std::vector<std::pair<mpq_class, std::uint32_t>> entries;
  const std::uint32_t half = 1u << (f.n - 1);
  for (std::uint32_t b = 0; b < half; ++b) entries.emplace_back(*value(b, f), b);
  std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (auto& [v, b] : entries) {
    l.values.push_back(v);
    l.patterns.push_back(b);
  }
  return cache.emplace(key, std::move(l)).first->second;
}

}  // namespace

std::optional<mpq_class> value(std::uint32_t bits, const Format& f) {
  bits &= f.mask();
  if (f.fp4) return e2m1_value(bits);
  if (bits == 0) return mpq_class(0);
  if (bits == f.nar()) return std::nullopt;
  return posit_value(bits, f.n, f.es);
}

std::uint32_t nearest(const mpq_class& x, const Format& f) {
  const Lattice& l = lattice(f);
  const bool negative = x < 0;
  const mpq_class mag = abs(x);
  std::uint32_t pick = 0;
  if (mag >= l.values.back()) {
    pick = l.patterns.back();
  } else if (!f.fp4 && mag > 0 && mag <= l.values[1]) {
    pick = l.patterns[1];
  } else {
    const auto hi = std::upper_bound(l.values.begin(), l.values.end(), mag) - l.values.begin();
    const auto lo = hi - 1;
    if (l.values[static_cast<std::size_t>(lo)] == mag) {
      pick = l.patterns[static_cast<std::size_t>(lo)];
    } else {
      const mpq_class dlo = mag - l.values[static_cast<std::size_t>(lo)];
      const mpq_class dhi = l.values[static_cast<std::size_t>(hi)] - mag;
      if (dlo < dhi) {
        pick = l.patterns[static_cast<std::size_t>(lo)];
      } else if (dhi < dlo) {
        pick = l.patterns[static_cast<std::size_t>(hi)];
      } else {
        const std::uint32_t a = l.patterns[static_cast<std::size_t>(lo)];
        const std::uint32_t b = l.patterns[static_cast<std::size_t>(hi)];
        pick = (a & 1u) == 0 ? a : b;
      }
    }
  }
  if (!negative) return pick;
  if (f.fp4) return pick | 0x8u;
  return (~pick + 1u) & f.mask();
}

std::optional<mpq_class> exact_dot(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                                   const Format& f) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  mpq_class sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = value(a[i], f);
    const auto y = value(b[i], f);
    if (!x || !y) return std::nullopt;
    sum += *x * *y;
  }
  return sum;
}

std::uint32_t rounded_dot(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b, const Format& f) {
  const auto d = exact_dot(a, b, f);
  if (!d) return f.nar();
  return nearest(*d, f);
}

double approx(const mpq_class& q) { return q.get_d(); }

}  // namespace oracle
