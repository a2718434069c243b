#include <vector>
#include "lsvi/rng.hpp"

#include <cmath>

#include "lsvi/parallel.hpp"

namespace lsvi {

namespace {

struct Philox4x32 {
  std::uint32_t c[4];
  std::uint32_t k[2];
};

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(Philox4x32& s) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * s.c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * s.c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  s.c[0] = hi1 ^ s.c[1] ^ s.k[0];
  s.c[1] = lo1;
  s.c[2] = hi0 ^ s.c[3] ^ s.k[1];
  s.c[3] = lo0;
  s.k[0] += kPhiloxW0;
  s.k[1] += kPhiloxW1;
}

// One 128-bit Philox block: two 64-bit output words.
inline void philox_block(std::uint64_t seed, std::uint64_t stream, std::uint64_t block,
                         std::uint64_t out[2]) {
  Philox4x32 s;
  s.c[0] = static_cast<std::uint32_t>(block);
  s.c[1] = static_cast<std::uint32_t>(block >> 32);
  s.c[2] = static_cast<std::uint32_t>(stream);
  s.c[3] = static_cast<std::uint32_t>(stream >> 32);
  s.k[0] = static_cast<std::uint32_t>(seed);
  s.k[1] = static_cast<std::uint32_t>(seed >> 32);
  for (int r = 0; r < 10; ++r) philox_round(s);
  out[0] = static_cast<std::uint64_t>(s.c[0]) | (static_cast<std::uint64_t>(s.c[1]) << 32);
  out[1] = static_cast<std::uint64_t>(s.c[2]) | (static_cast<std::uint64_t>(s.c[3]) << 32);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t RngStream::word_at(std::uint64_t index) const {
  std::uint64_t out[2];
  philox_block(seed, stream, index >> 1, out);
  return out[index & 1];
}

double uniform_from_bits(std::uint64_t bits) {
  // 53 significand bits plus a half-ulp offset: values lie strictly in (0,1).
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

double RngStream::next_uniform() { return uniform_from_bits(next_u64()); }

double RngStream::next_normal() { return inv_norm_cdf(next_uniform()); }

RngStream RngStream::substream(std::uint64_t k) const {
  return RngStream{seed, mix64(stream ^ mix64(k + 1)), 0};
}

RngStream RngStream::fork(std::uint64_t k) {
  const std::uint64_t nonce = counter++;
  return RngStream{seed, mix64(stream ^ mix64(nonce + 1) ^ mix64(~k)), 0};
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double inv_norm_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p <= 0.0) return -HUGE_VAL;
    if (p >= 1.0) return HUGE_VAL;
    return NAN;
  }
  // Abramowitz-Stegun 26.2.23 initial guess (|err| < 4.5e-4), then Newton on
  // Phi(x) - p with the exact CDF. Three steps reach full double precision.
  const bool lower = p < 0.5;
  const double pp = lower ? p : 1.0 - p;
  const double t = std::sqrt(-2.0 * std::log(pp));
  double x = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + t * 0.04481));
  if (lower) x = -x;
  for (int it = 0; it < 3; ++it) {
    const double err = norm_cdf(x) - p;
    const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779399460599343819;
    if (pdf <= 0.0) break;
    x -= err / pdf;
  }
  return x;
}

Eigen::VectorXd draw_uniform(RngStream& stream, int n) {
  Eigen::VectorXd out(n);
  const RngStream base = stream;
  parallel_for(n, [&](std::ptrdiff_t i) {
    out[i] = uniform_from_bits(base.word_at(base.counter + static_cast<std::uint64_t>(i)));
  });
  stream.counter += static_cast<std::uint64_t>(n);
  return out;
}

void fill_standard_normal(RngStream& stream, Eigen::Ref<Eigen::MatrixXd> out) {
  const int n = static_cast<int>(out.rows());
  const int d = static_cast<int>(out.cols());
  if (n == 0 || d == 0) return;
  const RngStream row_base = stream.fork(0x6e6f726du);  // per-call nonce
  const int pairs = (d + 1) / 2;
  // Box-Muller; row i consumes words 2j, 2j+1 of its own substream, so the
  // layout is fixed regardless of chunking. Transcendentals run vectorized
  // over each chunk.
  parallel_for_chunks(n, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    const std::ptrdiff_t len = e - b;
    std::vector<RngStream> rows(len);
    for (std::ptrdiff_t i = 0; i < len; ++i)
      rows[i] = row_base.substream(static_cast<std::uint64_t>(b + i));
    Eigen::ArrayXd u1(len), u2(len);
    for (int j = 0; j < pairs; ++j) {
      for (std::ptrdiff_t i = 0; i < len; ++i) {
        u1[i] = uniform_from_bits(rows[i].word_at(2 * j));
        u2[i] = uniform_from_bits(rows[i].word_at(2 * j + 1));
      }
      const Eigen::ArrayXd r = (-2.0 * u1.log()).sqrt();
      const Eigen::ArrayXd a = kTwoPi * u2;
      out.col(2 * j).segment(b, len) = r * a.cos();
      if (2 * j + 1 < d) out.col(2 * j + 1).segment(b, len) = r * a.sin();
    }
  });
}

Eigen::MatrixXd draw_standard_normal(RngStream& stream, int n, int d) {
  Eigen::MatrixXd out(n, d);
  fill_standard_normal(stream, out);
  return out;
}

}  // namespace lsvi
