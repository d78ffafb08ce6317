#include "netval/regions.hpp"

#include <algorithm>
#include <bit>

#include <fmt/format.h>

#include "netval/error.hpp"

namespace netval {

bool DefaultRegion::satisfies(const Eigen::VectorXd& x) const {
  if ((x.array() < 0.0).any()) return false;
  for (const auto& h : halfspaces) {
    const double v = h.normal.dot(x);
    if (h.strict ? !(v > h.bound) : !(v >= h.bound)) return false;
  }
  return true;
}

std::vector<bool> RegionPartition::memberships(const Eigen::VectorXd& x) const {
  std::vector<bool> member(regions_.size(), false);
  // Excluded regions always come earlier in the enumeration order.
  for (std::size_t k = 0; k < regions_.size(); ++k) {
    const auto& r = regions_[k];
    if (!r.satisfies(x)) continue;
    member[k] = std::none_of(r.excluded.begin(), r.excluded.end(), [&](std::size_t j) { return member[j]; });
  }
  return member;
}

DefaultSet RegionPartition::classify(const Eigen::VectorXd& x) const {
  const auto member = memberships(x);
  for (std::size_t k = 0; k < regions_.size(); ++k) {
    if (member[k]) return regions_[k].z;
  }
  throw Error(ErrorKind::internal, "endowment vector lies in no default region");
}

RegionPartition enumerate_regions(const FinancialNetwork& net) {
  const std::size_t n = net.size();
  if (n > RegionPartition::kMaxBanks) {
    throw Error(ErrorKind::invalid_input,
                fmt::format("region enumeration needs 2^n regions; refusing n = {} > {} (curse of dimensionality)", n,
                            RegionPartition::kMaxBanks));
  }
  std::vector<std::uint32_t> masks(std::size_t{1} << n);
  for (std::uint32_t m = 0; m < masks.size(); ++m) masks[m] = m;
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });

  RegionPartition out;
  out.exclusions_ = !net.full_recovery();
  std::vector<std::size_t> index_of(masks.size());
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const std::uint32_t mask = masks[k];
    index_of[mask] = k;
    DefaultRegion r;
    r.mask = mask;
    r.z.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) r.z[i] = (mask >> i) & 1U;
    const auto lin = linearize(net, r.z);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      if (r.z[i]) {
        // Delta x < delta, closed at full recovery.
        r.halfspaces.push_back({-lin.slope.row(row), -lin.offset(row), out.exclusions_});
      } else {
        r.halfspaces.push_back({lin.slope.row(row), lin.offset(row), false});
      }
    }
    if (out.exclusions_) {
      // Proper subsets of mask.
      for (std::uint32_t sub = (mask - 1) & mask; mask != 0; sub = (sub - 1) & mask) {
        r.excluded.push_back(index_of[sub]);
        if (sub == 0) break;
      }
      std::sort(r.excluded.begin(), r.excluded.end());
    }
    out.regions_.push_back(std::move(r));
  }
  return out;
}

DefaultSet classify(const RegionPartition& partition, const Eigen::VectorXd& x) { return partition.classify(x); }

}  // namespace netval
