#pragma once

#include <cstdint>
#include <vector>

#include "driftlab/geometry.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

/// A sign vector of length m <= 24, packed as bits (bit j set means v_j = +1).
struct Codeword {
  std::uint32_t bits = 0;
  int m = 0;

  int sign(int j) const;
  std::vector<int> signs() const;
  static Codeword from_signs(const std::vector<int>& signs);
  bool operator==(const Codeword&) const = default;
};

int hamming(const Codeword& a, const Codeword& b);

struct Codebook {
  int m = 0;
  int d_min = 0;
  std::vector<Codeword> words;

  std::size_t size() const noexcept { return words.size(); }
  /// Smallest pairwise distance, found exhaustively (m + 1 for fewer than two words).
  int min_pairwise_distance() const;
};

inline constexpr int kMaxCodewordLength = 24;

/// Greedy scan over all 2^m words in a seeded random order, keeping each word
/// whose distance to every kept word is at least d_min.
Codebook greedy_gv_codebook(int m, int d_min, RngStream& rng);

/// 2^m / sum_{i < d_min} C(m, i).
double gv_lower_bound(int m, int d_min);

struct ExcursionProcess {
  Codeword codeword;
  double delta = 0.0;
  double theta0 = 0.0;
  int T = 0;

  ExcursionProcess(Codeword codeword, double delta, double theta0, int T);
  int m() const noexcept { return codeword.m; }
  /// Control u_t for t = 1..T: +v_j delta at t = 2j - 1, -v_j delta at t = 2j.
  double control(int t) const;
};

/// States theta_1, ..., theta_{T+1} with theta_1 = theta0 and
/// theta_{t+1} = theta_t + u_t. Even block steps sit at theta0 + v_j delta.
std::vector<ParamPoint> excursion_trajectory(const ExcursionProcess& p);

/// sum_t |u_t| = 2 m delta.
double excursion_budget(const ExcursionProcess& p);

/// KL between the observation laws of two excursions in the unit-variance
/// Gaussian location model: 2 k delta^2, k the Hamming distance.
double pairwise_kl(const Codeword& v, const Codeword& w, double delta);

/// |R_T(v) - R_T(w)| for the linear loss c0 * theta: 2 c0 delta k / T.
double risk_separation(const Codeword& v, const Codeword& w, double delta, int T, double loss_slope);

/// 2 m delta^2 <= (alpha_frac / 4) ln |V|.
bool fano_condition(int m, double delta, std::size_t codebook_size, double alpha_frac);

}  // namespace driftlab
