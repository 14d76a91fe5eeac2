#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace driftlab {

/// Purpose tags separating the independent streams owned by one run.
enum class StreamPurpose : std::uint64_t {
  environment = 1,
  observation = 2,
  drift = 3,
  learner_init = 4,
  feature_map = 5,
  probe = 6,
  population = 7,
  permutation = 8,
  codebook = 9,
  initialization = 10,
  replicate = 11,
};

/// Counter-based 64-bit generator. Draw k of a stream is a pure function of
/// (key, k), so a stream can be re-positioned, copied, or split without
/// touching any other stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

  /// Stream for one (run, purpose) pair under a master seed.
  static RngStream derive(std::uint64_t master_seed, std::uint64_t run_index,
                          StreamPurpose purpose) noexcept;

  /// Child stream; `tag` distinguishes siblings.
  RngStream split(std::uint64_t tag) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal via Box-Muller; consumes two counters per draw.
  double normal() noexcept;
  Eigen::VectorXd normal_vector(Eigen::Index n);
  /// n x cols matrix of independent standard normals, filled row by row.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }
  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace driftlab
