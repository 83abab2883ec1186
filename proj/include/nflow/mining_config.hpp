#ifndef NFLOW_MINING_CONFIG_HPP_
#define NFLOW_MINING_CONFIG_HPP_

#include <cstddef>
#include <stdexcept>

namespace nflow {

struct MiningConfig {
  std::size_t n_min = 2;
  std::size_t n_max = 4;
  std::size_t k = 100;
  std::size_t max_gap = 0;  // 0: contiguous windows only
  double theta = 0.75;      // subsumption threshold, in (0, 1]

  void validate() const {
    if (n_min < 1 || n_min > n_max) throw std::invalid_argument("need 1 <= n_min <= n_max");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  }
};

}  // namespace nflow

#endif  // NFLOW_MINING_CONFIG_HPP_
