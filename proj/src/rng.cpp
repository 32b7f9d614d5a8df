#include "agp/rng.hpp"

#include <cmath>
#include <numbers>

namespace agp {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RandomStream::next_u64() { return splitmix64(state_); }

double RandomStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

VectorXd RandomStream::normal_vector(int n) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

std::uint64_t RandomStream::uniform_index(std::uint64_t n) {
  // Rejection-free modulo is fine at these scales; bias is ~n/2^64.
  return next_u64() % n;
}

RandomStream RandomStream::child(const std::string& label) const {
  return child(hash64(label));
}

RandomStream RandomStream::child(std::uint64_t salt) const {
  std::uint64_t s = seed_ ^ (salt + 0x632be59bd9b4e019ULL);
  splitmix64(s);
  return RandomStream(s);
}

std::uint64_t hash64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

MatrixXd latin_hypercube(const BoxDomain& box, int n, RandomStream& rng) {
  const int d = box.dim();
  MatrixXd pts(n, d);
  std::vector<int> perm(n);
  for (int a = 0; a < d; ++a) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    for (int i = 0; i < n; ++i) {
      const double u = (perm[i] + rng.uniform01()) / n;
      pts(i, a) = box.lo[a] + u * box.width(a);
    }
  }
  return pts;
}

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

double radical_inverse(int base, int index) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

}  // namespace

MatrixXd halton_points(const BoxDomain& box, int n) {
  const int d = box.dim();
  if (d > 8) throw std::invalid_argument("halton_points: dimension > 8");
  MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a)
      pts(i, a) = box.lo[a] + radical_inverse(kPrimes[a], i + 1) * box.width(a);
  return pts;
}

}  // namespace agp
