#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "mfst/errors.hpp"
#include "mfst/ifs.hpp"
#include "systems.hpp"

using namespace mfst;

namespace {

ErrorCode code_of(const std::vector<Similarity>& maps) {
  try {
    IfsSystem::validate(maps);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected validation to fail");
  return ErrorCode::InvalidArgument;
}

// Breadth-first oracle: every word up to `depth`, each gap kept if long enough.
std::vector<std::tuple<double, double, double>> brute_gaps(const IfsSystem& ifs, double delta,
                                                           int depth) {
  std::vector<std::tuple<double, double, double>> out;
  std::vector<Word> level{Word{}};
  for (int d = 0; d <= depth; ++d) {
    std::vector<Word> next;
    for (const Word& w : level) {
      const double r = word_ratio(ifs, w);
      for (std::size_t i = 0; i + 1 < ifs.size(); ++i) {
        const double len = r * ifs.gaps()[i].length;
        if (len >= delta) {
          out.emplace_back(len, apply_word(ifs, w, ifs.gaps()[i].left),
                           apply_word(ifs, w, ifs.gaps()[i].right));
        }
      }
      for (std::size_t j = 0; j < ifs.size(); ++j) {
        Word c = w;
        c.push_back(static_cast<Letter>(j));
        next.push_back(c);
      }
    }
    level = std::move(next);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::get<1>(a) < std::get<1>(b);
  });
  return out;
}

}  // namespace

TEST_CASE("validation accepts the benchmark systems") {
  const IfsSystem c = testsys::cantor();
  REQUIRE(c.gaps().size() == 1);
  CHECK(c.gaps()[0].left == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(c.gaps()[0].right == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c.gaps()[0].length == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const IfsSystem t = testsys::three_map();
  REQUIRE(t.gaps().size() == 2);
  CHECK(t.gaps()[0].length == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(t.gaps()[1].length == doctest::Approx(0.20).epsilon(1e-14));
  double total = 0.0;
  for (const auto& f : t.maps()) total += f.ratio;
  for (const auto& g : t.gaps()) total += g.length;
  CHECK(std::abs(total - 1.0) <= 4 * std::numeric_limits<double>::epsilon());
}

TEST_CASE("validation rejects malformed systems") {
  CHECK(code_of({{0.5, 0.0}, {0.5, 0.5}}) == ErrorCode::ZeroGap);
  CHECK(code_of({{0.5, 0.0}, {0.6, 0.4}}) == ErrorCode::Overlap);
  CHECK(code_of({{0.3, 0.1}, {0.3, 0.7}}) == ErrorCode::Boundary);
  CHECK(code_of({{0.3, 0.0}, {0.3, 0.6}}) == ErrorCode::Boundary);
  CHECK(code_of({{1.2, 0.0}, {0.3, 0.7}}) == ErrorCode::Ratio);
  CHECK(code_of({{0.0, 0.0}, {0.3, 0.7}}) == ErrorCode::Ratio);
  CHECK(code_of({{0.3, 0.7}, {0.3, 0.0}}) == ErrorCode::Boundary);
  CHECK(code_of({}) == ErrorCode::InvalidArgument);
}

TEST_CASE("Cantor enumeration at small cutoffs") {
  const IfsSystem c = testsys::cantor();
  CHECK(enumerate_gaps(c, 0.5).empty());

  const auto g3 = enumerate_gaps(c, 0.1);
  REQUIRE(g3.size() == 3);
  CHECK(g3[0].length == doctest::Approx(1.0 / 3.0));
  CHECK(g3[1].length == doctest::Approx(1.0 / 9.0));
  CHECK(g3[2].length == doctest::Approx(1.0 / 9.0));
  CHECK(g3[1].left < g3[2].left);

  const auto g7 = enumerate_gaps(c, 0.02);
  REQUIRE(g7.size() == 7);
  CHECK(std::count_if(g7.begin(), g7.end(), [](const GapInterval& g) {
          return std::abs(g.length - 1.0 / 27.0) < 1e-15;
        }) == 4);
  for (std::size_t n = 0; n < g7.size(); ++n) CHECK(g7[n].id == n);
}

TEST_CASE("gap counts follow 2^k - 1 on the Cantor system") {
  const IfsSystem c = testsys::cantor();
  const double a[] = {1.0 / 3.0};
  const auto p1 = gap_count_profile(c, a);
  REQUIRE(p1.size() == 1);
  CHECK(p1[0].count == 1);

  const double b[] = {1.0 / 9.0, 1.0 / 27.0};
  const auto p2 = gap_count_profile(c, b);
  CHECK(p2[0].count == 3);
  CHECK(p2[1].count == 7);

  std::vector<double> deltas;
  for (int k = 1; k <= 14; ++k) deltas.push_back(std::pow(3.0, -k));
  const auto prof = gap_count_profile(c, deltas);
  for (int k = 1; k <= 14; ++k) {
    CHECK(prof[k - 1].count == (std::size_t{1} << k) - 1);
  }
}

TEST_CASE("enumerated lengths sum to 1 - (2/3)^k on the Cantor system") {
  const IfsSystem c = testsys::cantor();
  double previous = 0.0;
  for (int k = 1; k <= 12; ++k) {
    const auto lengths = gap_lengths(c, std::pow(3.0, -k));
    double total = 0.0;
    for (double len : lengths) total += len;
    CHECK(total == doctest::Approx(1.0 - std::pow(2.0 / 3.0, k)).epsilon(1e-12));
    CHECK(total >= previous);
    CHECK(total <= 1.0);
    previous = total;
  }
}

TEST_CASE("enumeration matches a breadth-first oracle on the three-map system") {
  const IfsSystem t = testsys::three_map();
  const double delta = 2e-4;
  auto gaps = enumerate_gaps(t, delta);
  auto oracle = brute_gaps(t, delta, 12);
  REQUIRE(gaps.size() == oracle.size());

  for (std::size_t n = 1; n < gaps.size(); ++n) {
    CHECK(gaps[n - 1].length >= gaps[n].length);
    if (gaps[n - 1].length == gaps[n].length) CHECK(gaps[n - 1].left < gaps[n].left);
  }
  for (const GapInterval& g : gaps) {
    const double expected = word_ratio(t, g.word) * t.gaps()[g.gap_index].length;
    CHECK(std::abs(g.length - expected) <= 4 * std::numeric_limits<double>::epsilon() * expected);
    CHECK(g.left == doctest::Approx(apply_word(t, g.word, t.gaps()[g.gap_index].left)));
  }
  std::sort(gaps.begin(), gaps.end(),
            [](const GapInterval& a, const GapInterval& b) { return a.left < b.left; });
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    CHECK(gaps[n].left == doctest::Approx(std::get<1>(oracle[n])).epsilon(1e-13));
    CHECK(gaps[n].length == doctest::Approx(std::get<0>(oracle[n])).epsilon(1e-13));
    if (n > 0) CHECK(gaps[n - 1].right <= gaps[n].left);
  }
}

TEST_CASE("enumeration is deterministic across thread counts") {
  const IfsSystem t = testsys::three_map();
  const auto one = enumerate_gaps(t, 1e-5, {1'000'000, 1});
  const auto many = enumerate_gaps(t, 1e-5, {1'000'000, 8});
  REQUIRE(one.size() == many.size());
  for (std::size_t n = 0; n < one.size(); ++n) {
    CHECK(one[n].left == many[n].left);
    CHECK(one[n].length == many[n].length);
    CHECK(one[n].word == many[n].word);
  }
}

TEST_CASE("capacity limit raises CapacityError") {
  const IfsSystem c = testsys::cantor();
  try {
    enumerate_gaps(c, 1e-6, {100, 2});
    FAIL("expected CapacityError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Capacity);
    CHECK(std::string(e.what()).rfind("CapacityError", 0) == 0);
  }
}
