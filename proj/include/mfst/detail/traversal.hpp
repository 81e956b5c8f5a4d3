#pragma once

// In-order depth-first walk over the word tree of an IfsSystem. Children are
// visited left to right and the gap between child j and child j+1 is reported
// in between, so gaps come out in left-to-right order on the line.

#include <span>

#include "mfst/ifs.hpp"

namespace mfst::detail {

struct Node {
  std::span<const Letter> word;
  double ratio = 1.0;        // r_w
  double translation = 0.0;  // psi_w(0)
  double log_ratio = 0.0;    // log r_w
  double log_weight = 0.0;   // log p_w, zero when no weights are attached

  double apply(double x) const noexcept { return ratio * x + translation; }
};

template <class Expand, class OnGap>
void traverse_from(const IfsSystem& ifs, std::span<const double> log_weights, Word& word,
                   double ratio, double translation, double log_ratio, double log_weight,
                   Expand& expand, OnGap& on_gap) {
  if (!expand(Node{word, ratio, translation, log_ratio, log_weight})) return;
  const std::size_t m = ifs.size();
  for (std::size_t j = 0; j < m; ++j) {
    const Similarity& f = ifs.map(j);
    word.push_back(static_cast<Letter>(j));
    traverse_from(ifs, log_weights, word, ratio * f.ratio, translation + ratio * f.translation,
                  log_ratio + ifs.log_ratio(j),
                  log_weight + (log_weights.empty() ? 0.0 : log_weights[j]), expand, on_gap);
    word.pop_back();
    if (j + 1 < m) on_gap(Node{word, ratio, translation, log_ratio, log_weight}, j);
  }
}

// expand(node) -> bool decides whether the node's gaps and children are visited.
template <class Expand, class OnGap>
void traverse(const IfsSystem& ifs, std::span<const double> log_weights, Expand&& expand,
              OnGap&& on_gap) {
  Word word;
  word.reserve(64);
  traverse_from(ifs, log_weights, word, 1.0, 0.0, 0.0, 0.0, expand, on_gap);
}

}  // namespace mfst::detail
