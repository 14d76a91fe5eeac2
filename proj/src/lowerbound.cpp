#include "driftlab/lowerbound.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

void check_length(int m) {
  if (m < 1 || m > kMaxCodewordLength) {
    throw std::invalid_argument("codeword length must be in [1, " +
                                std::to_string(kMaxCodewordLength) + "], got " + std::to_string(m));
  }
}

void check_pair(const Codeword& a, const Codeword& b) {
  if (a.m != b.m) {
    throw DimensionMismatch("codeword lengths differ: " + std::to_string(a.m) + " vs " +
                            std::to_string(b.m));
  }
}

}  // namespace

int Codeword::sign(int j) const {
  if (j < 0 || j >= m) throw std::out_of_range("Codeword::sign: index out of range");
  return (bits >> j) & 1u ? 1 : -1;
}

std::vector<int> Codeword::signs() const {
  std::vector<int> out(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(j)] = sign(j);
  return out;
}

Codeword Codeword::from_signs(const std::vector<int>& signs) {
  check_length(static_cast<int>(signs.size()));
  Codeword c{0, static_cast<int>(signs.size())};
  for (std::size_t j = 0; j < signs.size(); ++j) {
    if (signs[j] == 1) {
      c.bits |= 1u << j;
    } else if (signs[j] != -1) {
      throw std::invalid_argument("Codeword::from_signs: entries must be +1 or -1");
    }
  }
  return c;
}

int hamming(const Codeword& a, const Codeword& b) {
  check_pair(a, b);
  return std::popcount(a.bits ^ b.bits);
}

int Codebook::min_pairwise_distance() const {
  int best = m + 1;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      best = std::min(best, hamming(words[i], words[j]));
    }
  }
  return best;
}

Codebook greedy_gv_codebook(int m, int d_min, RngStream& rng) {
  check_length(m);
  if (d_min < 1 || d_min > m) {
    throw std::invalid_argument("greedy_gv_codebook: need 1 <= d_min <= m");
  }
  const std::uint32_t n = 1u << m;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::uint32_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }

  Codebook book{m, d_min, {}};
  std::vector<std::uint32_t> kept;
  for (std::uint32_t w : order) {
    bool ok = true;
    for (std::uint32_t k : kept) {
      if (std::popcount(w ^ k) < d_min) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(w);
  }
  book.words.reserve(kept.size());
  for (std::uint32_t w : kept) book.words.push_back(Codeword{w, m});
  return book;
}

double gv_lower_bound(int m, int d_min) {
  check_length(m);
  if (d_min < 1 || d_min > m) throw std::invalid_argument("gv_lower_bound: need 1 <= d_min <= m");
  double ball = 0.0;
  double binom = 1.0;
  for (int i = 0; i < d_min; ++i) {
    ball += binom;
    binom = binom * (m - i) / (i + 1);
  }
  return std::ldexp(1.0, m) / ball;
}

ExcursionProcess::ExcursionProcess(Codeword cw, double delta_, double theta0_, int T_)
    : codeword(cw), delta(delta_), theta0(theta0_), T(T_) {
  check_length(codeword.m);
  if (!std::isfinite(delta) || delta < 0.0) {
    throw std::invalid_argument("ExcursionProcess: delta must be finite and >= 0");
  }
  if (!std::isfinite(theta0)) throw std::invalid_argument("ExcursionProcess: theta0 must be finite");
  if (T < 2 * codeword.m) {
    throw std::invalid_argument("ExcursionProcess: horizon " + std::to_string(T) +
                                " is shorter than 2m = " + std::to_string(2 * codeword.m));
  }
}

double ExcursionProcess::control(int t) const {
  if (t < 1 || t > T) throw std::out_of_range("ExcursionProcess::control: t outside [1, T]");
  if (t > 2 * m()) return 0.0;
  const int j = (t + 1) / 2;  // block index, 1-based
  const double step = codeword.sign(j - 1) * delta;
  return t % 2 == 1 ? step : -step;
}

std::vector<ParamPoint> excursion_trajectory(const ExcursionProcess& p) {
  std::vector<ParamPoint> out;
  out.reserve(static_cast<std::size_t>(p.T) + 1);
  out.emplace_back(Eigen::VectorXd::Constant(1, p.theta0));
  for (int t = 1; t <= p.T; ++t) {
    const int j = (t + 1) / 2;
    // Compute states directly so the return to theta0 is exact.
    const double next = (t % 2 == 1 && t <= 2 * p.m())
                            ? p.theta0 + p.codeword.sign(j - 1) * p.delta
                            : p.theta0;
    out.emplace_back(Eigen::VectorXd::Constant(1, next));
  }
  return out;
}

double excursion_budget(const ExcursionProcess& p) { return 2.0 * p.m() * p.delta; }

double pairwise_kl(const Codeword& v, const Codeword& w, double delta) {
  const int k = hamming(v, w);
  return 2.0 * k * delta * delta;
}

double risk_separation(const Codeword& v, const Codeword& w, double delta, int T, double loss_slope) {
  const int k = hamming(v, w);
  if (T < 2 * v.m) throw std::invalid_argument("risk_separation: need T >= 2m");
  return 2.0 * std::abs(loss_slope) * delta * k / T;
}

bool fano_condition(int m, double delta, std::size_t codebook_size, double alpha_frac) {
  if (codebook_size < 2) throw std::invalid_argument("fano_condition: codebook size must be >= 2");
  if (!(alpha_frac > 0.0 && alpha_frac < 1.0)) {
    throw std::invalid_argument("fano_condition: alpha_frac must be in (0, 1)");
  }
  if (m < 1) throw std::invalid_argument("fano_condition: m must be >= 1");
  return 2.0 * m * delta * delta <= alpha_frac / 4.0 * std::log(static_cast<double>(codebook_size));
}

}  // namespace driftlab
