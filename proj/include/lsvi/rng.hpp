#pragma once

#include <cstdint>
#include <Eigen/Core>

namespace lsvi {

// Counter-based random number stream (Philox4x32-10 core).
//
// A draw is a pure function of (seed, stream, counter), so samples can be
// generated in any order, on any number of threads, with identical results.
// The 64-bit stream id occupies its own counter words: distinct stream ids
// yield disjoint Philox sequences by construction.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;  // index of the next unconsumed 64-bit word

  RngStream() = default;
  RngStream(std::uint64_t seed_, std::uint64_t stream_, std::uint64_t counter_ = 0)
      : seed(seed_), stream(stream_), counter(counter_) {}

  // 64-bit word at an absolute position, independent of this->counter.
  std::uint64_t word_at(std::uint64_t index) const;

  std::uint64_t next_u64() { return word_at(counter++); }

  // Uniform in the open interval (0, 1); consumes one word.
  double next_uniform();
  // Standard normal via inverse CDF; consumes one word.
  double next_normal();

  // Child stream with an unrelated stream id and a fresh counter. Derivation
  // is deterministic in (this->stream, k) and does not advance the parent.
  RngStream substream(std::uint64_t k) const;

  // Child stream keyed additionally by the parent's current counter, which is
  // advanced by one. Two successive fork() calls give unrelated children.
  RngStream fork(std::uint64_t k = 0);
};

// SplitMix64 finalizer; used for stream-id derivation.
std::uint64_t mix64(std::uint64_t x);

double uniform_from_bits(std::uint64_t bits);  // (0,1)

// Inverse standard normal CDF, accurate to ~1e-15 over (0,1).
double inv_norm_cdf(double p);
// Standard normal CDF (and its log complement helpers live in targets).
double norm_cdf(double x);

// Bulk draws. Each consumes a deterministic amount of parent state; entries
// are generated in parallel-safe fixed positions.
//
// n x d matrix of i.i.d. N(0,1); Box-Muller over per-row substreams.
Eigen::MatrixXd draw_standard_normal(RngStream& stream, int n, int d);
// n i.i.d. Uniform(0,1) draws addressed by absolute counter slots.
Eigen::VectorXd draw_uniform(RngStream& stream, int n);

// Fill `out` (already sized) with standard normals; same layout contract as
// draw_standard_normal. Exposed so callers can reuse buffers.
void fill_standard_normal(RngStream& stream, Eigen::Ref<Eigen::MatrixXd> out);

}  // namespace lsvi
