#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace neuclust::selfcheck {

struct Options {
  std::uint64_t seed = 7;
  /// Negative control: skews z after the incremental updates so the
  /// Sherman-Morrison property must fail.
  bool corrupt_confidence = false;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<PropertyResult> run(const Options& opts = {});

/// One "PASS name: detail" / "FAIL ..." line per property.
std::string format_report(const std::vector<PropertyResult>& results);

bool all_passed(const std::vector<PropertyResult>& results);

}  // namespace neuclust::selfcheck
