#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace pbfd {

// Declared column widths used for logical storage accounting. Both backends
// count the same types the same way.
inline constexpr std::uint64_t kBigintBytes = 8;
inline constexpr std::uint64_t kNameBytes = 100;        // VARCHAR(100)
inline constexpr std::uint64_t kLevelLabelBytes = 50;   // VARCHAR(50)

struct StorageReport {
  std::uint64_t logical_bytes = 0;
  std::uint64_t physical_bytes = 0;
  std::map<std::string, std::int64_t> row_counts;
};

}  // namespace pbfd
