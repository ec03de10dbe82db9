#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "snowlink/errors.hpp"
#include "snowlink/json_io.hpp"
#include "snowlink/patterns.hpp"
#include "support/oracles.hpp"

using namespace snowlink;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoError;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "snowlink_test_patterns";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("enumerate small pattern spaces") {
  auto one = enumerate_patterns(1);
  REQUIRE(one.size() == 2);
  CHECK(one[0].bits() == 0b0);
  CHECK(one[1].bits() == 0b1);

  auto ex = enumerate_patterns(2, 0);
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].bits() == 0b00);
  CHECK(ex[1].bits() == 0b10);

  // popcount total counted through the string form
  int links = 0;
  for (const auto& x : enumerate_patterns(3)) {
    for (char c : x.to_string()) links += c == '1';
  }
  CHECK(links == 12);
}

TEST_CASE("enumeration sizes and exclusion") {
  for (int n = 1; n <= 10; ++n) {
    auto all = enumerate_patterns(n);
    CHECK(all.size() == (std::size_t{1} << n));
    CHECK(std::is_sorted(all.begin(), all.end()));
    for (int l = 0; l < n; ++l) {
      auto part = enumerate_patterns(n, l);
      CHECK(part.size() == (std::size_t{1} << (n - 1)));
      for (const auto& x : part) CHECK_FALSE(x.linked_to(l));
      CHECK(part.front().is_zero());
    }
  }
}

TEST_CASE("enumeration guard") {
  CHECK(enumerate_patterns(kEnumerationGuard).size() == (std::size_t{1} << kEnumerationGuard));
  CHECK(kind_of([] { enumerate_patterns(kEnumerationGuard + 1); }) == ErrorKind::PatternSpaceTooLarge);
  CHECK(kind_of([] { enumerate_patterns(3, 3); }) == ErrorKind::ScopeViolation);
}

TEST_CASE("pattern strings are in site order") {
  auto x = OutcomePattern::parse("0101");
  CHECK(x.bits() == 0b1010);
  CHECK(x.sites() == 4);
  CHECK(x.linked_to(1));
  CHECK_FALSE(x.linked_to(0));
  CHECK(x.link_count() == 2);
  CHECK(x.to_string() == "0101");
  CHECK(kind_of([] { OutcomePattern::parse("01a"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { OutcomePattern::parse(""); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { OutcomePattern(0b100, 2); }) == ErrorKind::InvariantViolation);
}

TEST_CASE("load minimal sample") {
  auto path = scratch("minimal.json");
  write_text_file(path, R"({"n": 2, "N": 5, "m": [3, 4], "between1": [], "within": [[], []], "between2": []})");
  auto data = load_sample(path);
  CHECK(data.sites() == 2);
  CHECK(data.frame_size() == 5);
  CHECK(data.m_total() == 7);
  CHECK(data.r1() == 0);
  CHECK(data.r2() == 0);
  CHECK_FALSE(data.has_within_links());
}

TEST_CASE("load rejects bad samples") {
  auto path = scratch("bad.json");
  // site 0 member linked to site 0
  write_text_file(path, R"({"n": 2, "N": 5, "m": [3, 4], "within": [[{"pattern": "10", "count": 1}], []]})");
  CHECK(kind_of([&] { load_sample(path); }) == ErrorKind::InvariantViolation);

  write_text_file(path, R"({"n": 2, "N": 5, "m": [1, 4], "within": [[{"pattern": "01", "count": 2}], []]})");
  CHECK(kind_of([&] { load_sample(path); }) == ErrorKind::InvariantViolation);

  write_text_file(path, R"({"n": 2, "N": 5, "m": [1, 4], "between1": [{"pattern": "00", "count": 2}]})");
  CHECK(kind_of([&] { load_sample(path); }) == ErrorKind::InvariantViolation);

  write_text_file(path, R"({"n": 2, "N": 1, "m": [1, 4]})");
  CHECK(kind_of([&] { load_sample(path); }) == ErrorKind::InvariantViolation);

  write_text_file(path, R"({"n": 2, "N": 5, "m": [1, 4], "between1": [{"pattern": "011", "count": 2}]})");
  CHECK(kind_of([&] { load_sample(path); }) == ErrorKind::InvariantViolation);

  write_text_file(path, R"({"n": 2, "N": 5, "m": [1, 4], "between1": [{"pattern": "01", "count": -1}]})");
  CHECK(kind_of([&] { load_sample(path); }) == ErrorKind::InvariantViolation);

  write_text_file(path, R"({"n": 2, "N": 5, "m": [1, )");
  CHECK(kind_of([&] { load_sample(path); }) == ErrorKind::ParseError);

  write_text_file(path, R"({"n": 2, "m": [1, 4]})");
  CHECK(kind_of([&] { load_sample(path); }) == ErrorKind::ParseError);

  CHECK(kind_of([] { load_sample("/nonexistent/sample.json"); }) == ErrorKind::IoError);
}

TEST_CASE("totals are recomputed, not read") {
  auto path = scratch("totals.json");
  write_text_file(path, R"({"n": 2, "N": 6, "m": [5, 4], "r1": 999,
    "between1": [{"pattern": "10", "count": 3}, {"pattern": "11", "count": 2}],
    "within": [[{"pattern": "01", "count": 4}], []],
    "between2": [{"pattern": "01", "count": 7}]})");
  auto data = load_sample(path);
  CHECK(data.r1() == 5);
  CHECK(data.r2() == 7);
  CHECK(data.m_total() == 9);
  CHECK(data.within_linked(0) == 4);
  CHECK(data.within_linked(1) == 0);
}

TEST_CASE("serialization round trip on random samples") {
  std::mt19937_64 rng(42);
  auto path = scratch("roundtrip.json");
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const long N = n + static_cast<long>(rng() % 10);
    auto data = oracle::random_sample(n, N, rng, 6);
    save_sample(data, path);
    auto back = load_sample(path);
    CHECK(back == data);

    std::int64_t r1 = 0;
    for (const auto& [x, c] : data.between1()) r1 += c;
    CHECK(r1 == data.r1());
    for (int l = 0; l < n; ++l) {
      std::int64_t rl = 0;
      for (const auto& [x, c] : data.within(l)) rl += c;
      CHECK(rl == data.within_linked(l));
    }
  }
}
