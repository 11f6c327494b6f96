#include "conekit/rng.hpp"

namespace conekit {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * path.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (std::uint64_t v : path) push(v);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : RngStream(seed, std::vector<std::uint64_t>{stream_id}) {}

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> path)
    : seed_(seed), path_(std::move(path)), engine_(seeded_engine(seed_, path_)) {}

RngStream RngStream::derive(std::uint64_t tag) const {
  std::vector<std::uint64_t> child = path_;
  child.push_back(tag);
  return RngStream(seed_, std::move(child));
}

double RngStream::uniform() {
  // 53 random bits centred in their bin, never 0 or 1.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::gamma(double shape, double scale) {
  std::gamma_distribution<double> dist(shape, scale);
  return dist(engine_);
}

double RngStream::beta(double a, double b) {
  double x = gamma(a);
  double y = gamma(b);
  return x / (x + y);
}

std::size_t RngStream::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

}  // namespace conekit
