#include "mfst/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfst/detail/parallel.hpp"
#include "mfst/detail/traversal.hpp"
#include "mfst/errors.hpp"

namespace mfst {
namespace {

constexpr double kEndpointSlack = 4.0 * std::numeric_limits<double>::epsilon();

std::string describe(std::size_t i) {
  std::ostringstream os;
  os << "map " << (i + 1);
  return os.str();
}

struct GapRecord {
  double length = 0.0;
  double left = 0.0;
  double right = 0.0;
  std::size_t gap_index = 0;
  Word word;
};

// Collects the gaps of one subtree in left-to-right order.
void collect_subtree(const IfsSystem& ifs, double delta, Word prefix, bool keep_words,
                     std::size_t capacity, std::vector<GapRecord>& out) {
  const double max_gap = ifs.max_gap();
  double ratio = 1.0;
  double translation = 0.0;
  double log_ratio = 0.0;
  for (Letter j : prefix) {
    translation += ratio * ifs.map(j).translation;
    ratio *= ifs.map(j).ratio;
    log_ratio += ifs.log_ratio(j);
  }
  auto expand = [&](const detail::Node& node) {
    return reaches_cutoff(node.ratio * max_gap, delta);
  };
  auto on_gap = [&](const detail::Node& node, std::size_t i) {
    const TopGap& e = ifs.gaps()[i];
    const double length = node.ratio * e.length;
    if (!reaches_cutoff(length, delta)) return;
    if (out.size() >= capacity) {
      raise(ErrorCode::Capacity, "gap enumeration exceeds the capacity limit of " +
                                     std::to_string(capacity) + " intervals");
    }
    GapRecord rec;
    rec.length = length;
    rec.left = node.apply(e.left);
    rec.right = node.apply(e.right);
    rec.gap_index = i;
    if (keep_words) rec.word.assign(node.word.begin(), node.word.end());
    out.push_back(std::move(rec));
  };
  detail::traverse_from(ifs, {}, prefix, ratio, translation, log_ratio, 0.0, expand, on_gap);
}

std::vector<GapRecord> collect(const IfsSystem& ifs, double delta, bool keep_words,
                               const EnumerationLimits& limits) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    raise(ErrorCode::InvalidArgument, "length cutoff must be positive and finite");
  }
  std::vector<GapRecord> out;
  if (!reaches_cutoff(ifs.max_gap(), delta)) return out;

  const std::size_t m = ifs.size();
  std::vector<std::vector<GapRecord>> branches(m);
  detail::parallel_for_index(m, limits.threads, [&](std::size_t j) {
    collect_subtree(ifs, delta, Word{static_cast<Letter>(j)}, keep_words, limits.capacity,
                    branches[j]);
  });

  std::size_t total = m - 1;
  for (const auto& b : branches) total += b.size();
  if (total > limits.capacity) {
    // The m-1 top gaps might not all qualify; recount precisely before failing.
    std::size_t exact = 0;
    for (const auto& b : branches) exact += b.size();
    for (const TopGap& e : ifs.gaps()) exact += reaches_cutoff(e.length, delta) ? 1 : 0;
    if (exact > limits.capacity) {
      raise(ErrorCode::Capacity, "gap enumeration exceeds the capacity limit of " +
                                     std::to_string(limits.capacity) + " intervals");
    }
  }
  out.reserve(total);
  for (std::size_t j = 0; j < m; ++j) {
    std::move(branches[j].begin(), branches[j].end(), std::back_inserter(out));
    branches[j].clear();
    branches[j].shrink_to_fit();
    if (j + 1 < m) {
      const TopGap& e = ifs.gaps()[j];
      if (reaches_cutoff(e.length, delta)) out.push_back(GapRecord{e.length, e.left, e.right, j, Word{}});
    }
  }
  // Records are in left-to-right order, so a stable sort keeps equal lengths
  // ordered by left endpoint.
  std::stable_sort(out.begin(), out.end(),
                   [](const GapRecord& a, const GapRecord& b) { return a.length > b.length; });
  return out;
}

}  // namespace

IfsSystem IfsSystem::validate(std::span<const Similarity> maps) {
  if (maps.empty()) raise(ErrorCode::InvalidArgument, "the map list is empty");
  if (maps.size() > std::numeric_limits<Letter>::max()) {
    raise(ErrorCode::InvalidArgument, "too many maps");
  }
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const double r = maps[i].ratio;
    if (!(r > 0.0 && r < 1.0)) raise(ErrorCode::Ratio, describe(i) + " has ratio outside (0,1)");
    if (!std::isfinite(maps[i].translation)) {
      raise(ErrorCode::InvalidArgument, describe(i) + " has a non-finite translation");
    }
  }
  if (std::abs(maps.front().left()) > kEndpointSlack) {
    raise(ErrorCode::Boundary, "psi_1(0) must equal 0");
  }
  if (std::abs(maps.back().right() - 1.0) > kEndpointSlack) {
    raise(ErrorCode::Boundary, "psi_m(1) must equal 1");
  }
  if (maps.size() < 2) raise(ErrorCode::Boundary, "at least two maps are required");

  IfsSystem ifs;
  ifs.maps_.assign(maps.begin(), maps.end());
  for (std::size_t i = 0; i + 1 < maps.size(); ++i) {
    const double gap = maps[i + 1].left() - maps[i].right();
    if (gap < 0.0) {
      raise(ErrorCode::Overlap, describe(i) + " and " + describe(i + 1) +
                                    " overlap or are out of order");
    }
    if (gap == 0.0) {
      raise(ErrorCode::ZeroGap, "no gap between " + describe(i) + " and " + describe(i + 1));
    }
    ifs.gaps_.push_back(TopGap{maps[i].right(), maps[i + 1].left(), gap});
  }
  for (const Similarity& f : ifs.maps_) ifs.log_ratios_.push_back(std::log(f.ratio));

  auto gap_lengths = [&](auto pick) {
    return pick(ifs.gaps_.begin(), ifs.gaps_.end(),
                [](const TopGap& a, const TopGap& b) { return a.length < b.length; })->length;
  };
  ifs.max_gap_ = gap_lengths([](auto b, auto e, auto c) { return std::max_element(b, e, c); });
  ifs.min_gap_ = gap_lengths([](auto b, auto e, auto c) { return std::min_element(b, e, c); });
  auto by_ratio = [](const Similarity& a, const Similarity& b) { return a.ratio < b.ratio; };
  ifs.max_ratio_ = std::max_element(ifs.maps_.begin(), ifs.maps_.end(), by_ratio)->ratio;
  ifs.min_ratio_ = std::min_element(ifs.maps_.begin(), ifs.maps_.end(), by_ratio)->ratio;
  return ifs;
}

double word_ratio(const IfsSystem& ifs, std::span<const Letter> word) {
  double r = 1.0;
  for (Letter j : word) r *= ifs.map(j).ratio;
  return r;
}

double apply_word(const IfsSystem& ifs, std::span<const Letter> word, double x) {
  for (auto it = word.rbegin(); it != word.rend(); ++it) x = ifs.map(*it)(x);
  return x;
}

Interval word_cell(const IfsSystem& ifs, std::span<const Letter> word) {
  return Interval{apply_word(ifs, word, 0.0), apply_word(ifs, word, 1.0)};
}

namespace {

std::vector<GapInterval> to_intervals(std::vector<GapRecord> records) {
  std::vector<GapInterval> gaps;
  gaps.reserve(records.size());
  for (std::size_t n = 0; n < records.size(); ++n) {
    GapRecord& rec = records[n];
    gaps.push_back(GapInterval{n, rec.left, rec.right, rec.length, std::move(rec.word),
                               rec.gap_index});
  }
  return gaps;
}

}  // namespace

std::vector<GapInterval> enumerate_gaps(const IfsSystem& ifs, double delta,
                                        const EnumerationLimits& limits) {
  return to_intervals(collect(ifs, delta, true, limits));
}

std::vector<GapInterval> enumerate_gap_extents(const IfsSystem& ifs, double delta,
                                               const EnumerationLimits& limits) {
  return to_intervals(collect(ifs, delta, false, limits));
}

std::vector<double> gap_lengths(const IfsSystem& ifs, double delta,
                                const EnumerationLimits& limits) {
  std::vector<GapRecord> records = collect(ifs, delta, false, limits);
  std::vector<double> lengths;
  lengths.reserve(records.size());
  for (const GapRecord& rec : records) lengths.push_back(rec.length);
  return lengths;
}

std::vector<GapCount> gap_count_profile(const IfsSystem& ifs, std::span<const double> deltas,
                                        const EnumerationLimits& limits) {
  std::vector<GapCount> profile;
  if (deltas.empty()) return profile;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (!(deltas[k] > 0.0)) raise(ErrorCode::InvalidArgument, "cutoffs must be positive");
    if (k > 0 && !(deltas[k] < deltas[k - 1])) {
      raise(ErrorCode::InvalidArgument, "cutoffs must be strictly decreasing");
    }
  }
  const std::vector<double> lengths = gap_lengths(ifs, deltas.back(), limits);
  for (double delta : deltas) {
    // lengths are descending; count those >= delta
    const auto it = std::partition_point(lengths.begin(), lengths.end(),
                                         [delta](double len) { return reaches_cutoff(len, delta); });
    profile.push_back(GapCount{delta, static_cast<std::size_t>(it - lengths.begin())});
  }
  return profile;
}

}  // namespace mfst
