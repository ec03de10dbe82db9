#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace snowlink {

// full enumeration of 2^n patterns is refused beyond this many sites
inline constexpr int kEnumerationGuard = 20;
// bitmask width
inline constexpr int kMaxSites = 31;

// bit i set <=> linked to sampled site i
class OutcomePattern {
 public:
  OutcomePattern() = default;
  OutcomePattern(std::uint32_t bits, int sites);

  static OutcomePattern zero(int sites) { return OutcomePattern(0u, sites); }
  // character i is site i
  static OutcomePattern parse(std::string_view text);

  std::uint32_t bits() const noexcept { return bits_; }
  int sites() const noexcept { return sites_; }
  bool linked_to(int site) const noexcept { return ((bits_ >> site) & 1u) != 0; }
  bool is_zero() const noexcept { return bits_ == 0; }
  int link_count() const noexcept;
  std::string to_string() const;

  auto operator<=>(const OutcomePattern&) const = default;

 private:
  std::uint32_t bits_ = 0;
  int sites_ = 1;
};

using CountMap = std::map<OutcomePattern, std::int64_t>;

// ascending bitmask order; with excluded_site = l only masks with bit l clear
std::vector<OutcomePattern> enumerate_patterns(int n, std::optional<int> excluded_site = std::nullopt);

class SampleData {
 public:
  // validates every invariant; zero counts are dropped from the maps
  SampleData(int n, std::int64_t N, std::vector<std::int64_t> site_sizes, CountMap between1,
             std::vector<CountMap> within, CountMap between2);

  int sites() const noexcept { return n_; }
  std::int64_t frame_size() const noexcept { return N_; }
  double sampling_fraction() const noexcept { return static_cast<double>(n_) / static_cast<double>(N_); }

  std::span<const std::int64_t> site_sizes() const noexcept { return m_; }
  const CountMap& between1() const noexcept { return between1_; }
  const CountMap& within(int site) const { return within_.at(static_cast<std::size_t>(site)); }
  const std::vector<CountMap>& within_all() const noexcept { return within_; }
  const CountMap& between2() const noexcept { return between2_; }

  std::int64_t m_total() const noexcept { return m_total_; }
  std::int64_t r1() const noexcept { return r1_; }
  std::int64_t r2() const noexcept { return r2_; }
  std::int64_t within_linked(int site) const { return within_linked_.at(static_cast<std::size_t>(site)); }
  bool has_within_links() const noexcept;

  bool operator==(const SampleData&) const = default;

 private:
  int n_;
  std::int64_t N_;
  std::vector<std::int64_t> m_;
  CountMap between1_;
  std::vector<CountMap> within_;
  CountMap between2_;
  std::int64_t m_total_ = 0;
  std::int64_t r1_ = 0;
  std::int64_t r2_ = 0;
  std::vector<std::int64_t> within_linked_;
};

SampleData load_sample(const std::filesystem::path& path);
void save_sample(const SampleData& data, const std::filesystem::path& path);

}  // namespace snowlink
