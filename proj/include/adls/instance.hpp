#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace adls {

// One stream arrival.
struct Instance {
  std::uint64_t seq = 0;
  std::vector<double> features;
  std::size_t label = 0;
};

}  // namespace adls
