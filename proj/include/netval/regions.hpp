#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "netval/clearing.hpp"
#include "netval/network.hpp"

namespace netval {

/// normal . x >= bound, or > bound when strict.
struct Halfspace {
  Eigen::RowVectorXd normal;
  double bound = 0.0;
  bool strict = false;
};

/// Endowments whose greatest clearing wealths have default set z.
struct DefaultRegion {
  DefaultSet z;
  std::uint32_t mask = 0;  // bit i set when bank i defaults
  std::vector<Halfspace> halfspaces;
  /// Indices of regions with strictly smaller default sets that are
  /// subtracted from this one (bankruptcy costs only).
  std::vector<std::size_t> excluded;

  /// Halfspace conditions only, ignoring exclusions.
  bool satisfies(const Eigen::VectorXd& x) const;
};

class RegionPartition {
 public:
  static constexpr std::size_t kMaxBanks = 12;

  const std::vector<DefaultRegion>& regions() const noexcept { return regions_; }
  std::size_t size() const noexcept { return regions_.size(); }
  bool with_exclusions() const noexcept { return exclusions_; }

  /// Region memberships of x, resolving exclusions recursively.
  std::vector<bool> memberships(const Eigen::VectorXd& x) const;
  /// Default set of the first region (in enumeration order) containing x.
  DefaultSet classify(const Eigen::VectorXd& x) const;

 private:
  friend RegionPartition enumerate_regions(const FinancialNetwork& net);
  std::vector<DefaultRegion> regions_;
  bool exclusions_ = false;
};

/// All 2^n candidate regions in increasing default-count order. Refuses
/// n > 12.
RegionPartition enumerate_regions(const FinancialNetwork& net);

DefaultSet classify(const RegionPartition& partition, const Eigen::VectorXd& x);

}  // namespace netval
