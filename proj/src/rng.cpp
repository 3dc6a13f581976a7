#include "tsq/rng.hpp"

#include <cmath>

namespace tsq {

uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

uint64_t Rng::below(uint64_t n) {
  // rejection sampling on the top range to stay unbiased
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = next();
  } while (v >= limit);
  return v % n;
}

double Rng::normal(double mu, double sigma) {
  // polar Box-Muller, second value discarded to keep the stream stateless
  double u, v, s;
  do {
    u = 2.0 * real01() - 1.0;
    v = 2.0 * real01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return mu + sigma * u * std::sqrt(-2.0 * std::log(s) / s);
}

Rng Rng::derive(std::string_view tag, uint64_t index) const {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return Rng(mix64(seed_ ^ h) ^ mix64(index * 0x9e3779b97f4a7c15ULL + 1));
}

}  // namespace tsq
