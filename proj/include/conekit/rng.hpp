#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace conekit {

// Mersenne twister keyed by (seed, path of stream ids). Two streams with the
// same key produce the same numbers on every run.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  // Child stream keyed by this stream's key extended with tag.
  RngStream derive(std::uint64_t tag) const;

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }

  double normal() { return normal_(engine_); }
  double uniform();  // open interval (0, 1)
  double gamma(double shape, double scale = 1.0);
  double beta(double a, double b);
  std::size_t index(std::size_t n);  // uniform on {0, ..., n-1}

  std::mt19937_64& engine() { return engine_; }

 private:
  RngStream(std::uint64_t seed, std::vector<std::uint64_t> path);

  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace conekit
