#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace sagin {

using Engine = std::mt19937_64;

/// 64-bit FNV-1a; stable across platforms, used for stream derivation and
/// config hashing.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an engine for the named sub-stream of a run. Streams with
/// different names (or different sub-indices) are statistically independent
/// and unaffected by how many draws the others make.
inline Engine make_stream(std::uint64_t seed, std::string_view name,
                          std::uint64_t index = 0) {
  const std::uint64_t a = splitmix64(seed ^ fnv1a64(name));
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Engine(seq);
}

/// The named streams of one episode. Every stochastic element of the
/// simulator draws from exactly one of these.
struct RngStreams {
  Engine init;
  Engine mobility;
  Engine tasks;
  Engine rain;
  Engine los;
  Engine game;
  Engine policy;

  RngStreams() = default;
  RngStreams(std::uint64_t seed, std::uint64_t episode = 0)
      : init(make_stream(seed, "init", episode)),
        mobility(make_stream(seed, "mobility", episode)),
        tasks(make_stream(seed, "tasks", episode)),
        rain(make_stream(seed, "rain", episode)),
        los(make_stream(seed, "los", episode)),
        game(make_stream(seed, "game", episode)),
        policy(make_stream(seed, "policy", episode)) {}
};

inline double uniform(Engine& eng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(eng);
}

inline double gaussian(Engine& eng, double mean = 0.0, double stddev = 1.0) {
  return std::normal_distribution<double>(mean, stddev)(eng);
}

inline std::string engine_state(const Engine& eng) {
  std::ostringstream os;
  os << eng;
  return os.str();
}

inline void restore_engine(Engine& eng, const std::string& state) {
  std::istringstream is(state);
  is >> eng;
}

}  // namespace sagin
