#include "snowlink/patterns.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "snowlink/errors.hpp"
#include "snowlink/json_io.hpp"

namespace snowlink {

OutcomePattern::OutcomePattern(std::uint32_t bits, int sites) : bits_(bits), sites_(sites) {
  if (sites < 1 || sites > kMaxSites) {
    fail(ErrorKind::InvariantViolation, "pattern site count out of range: " + std::to_string(sites));
  }
  if ((bits >> sites) != 0) {
    fail(ErrorKind::InvariantViolation, "pattern bits exceed site count");
  }
}

OutcomePattern OutcomePattern::parse(std::string_view text) {
  if (text.empty() || text.size() > static_cast<std::size_t>(kMaxSites)) {
    fail(ErrorKind::ParseError, "pattern string has bad length: '" + std::string(text) + "'");
  }
  std::uint32_t bits = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1') {
      bits |= 1u << i;
    } else if (text[i] != '0') {
      fail(ErrorKind::ParseError, "pattern string must be 0/1: '" + std::string(text) + "'");
    }
  }
  return OutcomePattern(bits, static_cast<int>(text.size()));
}

int OutcomePattern::link_count() const noexcept { return std::popcount(bits_); }

std::string OutcomePattern::to_string() const {
  std::string out(static_cast<std::size_t>(sites_), '0');
  for (int i = 0; i < sites_; ++i) {
    if (linked_to(i)) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

std::vector<OutcomePattern> enumerate_patterns(int n, std::optional<int> excluded_site) {
  if (n < 1) fail(ErrorKind::DomainError, "enumerate_patterns needs n >= 1");
  if (n > kEnumerationGuard) {
    fail(ErrorKind::PatternSpaceTooLarge,
         "n=" + std::to_string(n) + " exceeds enumeration guard " + std::to_string(kEnumerationGuard));
  }
  if (excluded_site && (*excluded_site < 0 || *excluded_site >= n)) {
    fail(ErrorKind::ScopeViolation, "excluded site out of range");
  }
  const std::uint32_t total = 1u << n;
  const std::uint32_t mask = excluded_site ? (1u << *excluded_site) : 0u;
  std::vector<OutcomePattern> out;
  out.reserve(excluded_site ? total / 2 : total);
  for (std::uint32_t b = 0; b < total; ++b) {
    if ((b & mask) == 0) out.emplace_back(b, n);
  }
  return out;
}

namespace {

std::int64_t tally(CountMap& map, int n, const char* label, std::optional<int> own_site) {
  std::int64_t total = 0;
  for (auto it = map.begin(); it != map.end();) {
    const auto& [pattern, count] = *it;
    if (pattern.sites() != n) {
      fail(ErrorKind::InvariantViolation, std::string(label) + ": pattern width differs from n");
    }
    if (pattern.is_zero()) {
      fail(ErrorKind::InvariantViolation, std::string(label) + ": the zero pattern is never observed");
    }
    if (own_site && pattern.linked_to(*own_site)) {
      fail(ErrorKind::InvariantViolation,
           std::string(label) + ": pattern " + pattern.to_string() + " links to its own site");
    }
    if (count < 0) fail(ErrorKind::InvariantViolation, std::string(label) + ": negative count");
    if (count == 0) {
      it = map.erase(it);
      continue;
    }
    total += count;
    ++it;
  }
  return total;
}

}  // namespace

SampleData::SampleData(int n, std::int64_t N, std::vector<std::int64_t> site_sizes, CountMap between1,
                       std::vector<CountMap> within, CountMap between2)
    : n_(n),
      N_(N),
      m_(std::move(site_sizes)),
      between1_(std::move(between1)),
      within_(std::move(within)),
      between2_(std::move(between2)) {
  if (n_ < 1 || n_ > kMaxSites) fail(ErrorKind::InvariantViolation, "n out of range");
  if (N_ < n_) fail(ErrorKind::InvariantViolation, "frame size N must be >= n");
  if (m_.size() != static_cast<std::size_t>(n_)) {
    fail(ErrorKind::InvariantViolation, "m must have n entries");
  }
  if (within_.empty()) within_.resize(static_cast<std::size_t>(n_));
  if (within_.size() != static_cast<std::size_t>(n_)) {
    fail(ErrorKind::InvariantViolation, "within must have n entries");
  }
  for (auto mi : m_) {
    if (mi < 0) fail(ErrorKind::InvariantViolation, "negative site size");
    m_total_ += mi;
  }
  r1_ = tally(between1_, n_, "between1", std::nullopt);
  r2_ = tally(between2_, n_, "between2", std::nullopt);
  within_linked_.resize(static_cast<std::size_t>(n_));
  for (int l = 0; l < n_; ++l) {
    const auto idx = static_cast<std::size_t>(l);
    within_linked_[idx] = tally(within_[idx], n_, "within", l);
    if (within_linked_[idx] > m_[idx]) {
      fail(ErrorKind::InvariantViolation,
           "site " + std::to_string(l) + ": linked members exceed site size");
    }
  }
}

bool SampleData::has_within_links() const noexcept {
  for (auto r : within_linked_) {
    if (r > 0) return true;
  }
  return false;
}

namespace {

json counts_to_json(const CountMap& map) {
  json arr = json::array();
  for (const auto& [pattern, count] : map) {
    arr.push_back({{"pattern", pattern.to_string()}, {"count", count}});
  }
  return arr;
}

CountMap counts_from_json(const json& arr, int n, const char* label) {
  if (!arr.is_array()) fail(ErrorKind::ParseError, std::string(label) + " must be an array");
  CountMap out;
  for (const auto& entry : arr) {
    if (!entry.is_object() || !entry.contains("pattern") || !entry.contains("count")) {
      fail(ErrorKind::ParseError, std::string(label) + " entries need pattern and count");
    }
    const auto& ptext = entry.at("pattern");
    const auto& ctext = entry.at("count");
    if (!ptext.is_string() || !ctext.is_number_integer()) {
      fail(ErrorKind::ParseError, std::string(label) + " entry has wrong types");
    }
    auto pattern = OutcomePattern::parse(ptext.get<std::string>());
    if (pattern.sites() != n) {
      fail(ErrorKind::InvariantViolation, std::string(label) + ": pattern length differs from n");
    }
    if (out.contains(pattern)) {
      fail(ErrorKind::ParseError, std::string(label) + ": duplicate pattern " + pattern.to_string());
    }
    out.emplace(pattern, ctext.get<std::int64_t>());
  }
  return out;
}

}  // namespace

json sample_to_json(const SampleData& data) {
  json within = json::array();
  for (const auto& map : data.within_all()) within.push_back(counts_to_json(map));
  return json{{"schema_version", kSchemaVersion},
              {"n", data.sites()},
              {"N", data.frame_size()},
              {"m", std::vector<std::int64_t>(data.site_sizes().begin(), data.site_sizes().end())},
              {"between1", counts_to_json(data.between1())},
              {"within", within},
              {"between2", counts_to_json(data.between2())}};
}

SampleData sample_from_json(const json& doc) {
  try {
    if (!doc.is_object()) fail(ErrorKind::ParseError, "sample must be a JSON object");
    for (const char* key : {"n", "N", "m"}) {
      if (!doc.contains(key)) fail(ErrorKind::ParseError, std::string("sample missing field ") + key);
    }
    const int n = doc.at("n").get<int>();
    const auto N = doc.at("N").get<std::int64_t>();
    if (n < 1 || n > kMaxSites) fail(ErrorKind::InvariantViolation, "n out of range");
    auto m = doc.at("m").get<std::vector<std::int64_t>>();
    CountMap b1 = doc.contains("between1") ? counts_from_json(doc.at("between1"), n, "between1") : CountMap{};
    CountMap b2 = doc.contains("between2") ? counts_from_json(doc.at("between2"), n, "between2") : CountMap{};
    std::vector<CountMap> within(static_cast<std::size_t>(n));
    if (doc.contains("within")) {
      const auto& w = doc.at("within");
      if (!w.is_array()) fail(ErrorKind::ParseError, "within must be an array");
      if (w.size() != static_cast<std::size_t>(n)) {
        fail(ErrorKind::InvariantViolation, "within must have one entry per site");
      }
      for (std::size_t l = 0; l < w.size(); ++l) within[l] = counts_from_json(w[l], n, "within");
    }
    return SampleData(n, N, std::move(m), std::move(b1), std::move(within), std::move(b2));
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

SampleData load_sample(const std::filesystem::path& path) { return sample_from_json(read_json_file(path)); }

void save_sample(const SampleData& data, const std::filesystem::path& path) {
  write_json_file(path, sample_to_json(data));
}

}  // namespace snowlink
