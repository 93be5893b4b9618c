#include <cmath>

#include "boxcast/backends.hpp"
#include "boxcast/error.hpp"
#include "boxcast/geometry.hpp"

namespace boxcast {

OrderedAnalytic::OrderedAnalytic(BoxSpace space, std::vector<BoxParams> boxes, std::vector<double> probs)
    : BoxDistribution(std::move(space)), boxes_(std::move(boxes)), probs_(std::move(probs)) {
  if (boxes_.empty()) throw Error("ordered distribution needs at least one box");
  if (boxes_.size() != probs_.size()) throw Error("ordered distribution: boxes and probs differ in length");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw Error("ordered distribution: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("ordered distribution: probabilities do not sum to 1");
  for (auto& b : boxes_) {
    validate(b);
    b = canonical_box(b);
  }
  for (std::size_t i = 0; i + 1 < boxes_.size(); ++i) {
    const BoxParams& inner = boxes_[i];
    const BoxParams& outer = boxes_[i + 1];
    if (iog(outer, inner) < 1.0 - 1e-9 || box_volume(outer) <= box_volume(inner) * (1.0 + 1e-12)) {
      throw Error("ordered distribution: box " + std::to_string(i + 1) + " does not strictly contain box " +
                  std::to_string(i));
    }
  }
  for (const auto& b : boxes_) {
    atoms_.push_back(quantize_box(b, space_));
    chains_.push_back(to_chain_order(atoms_.back(), param_order()));
  }
}

std::vector<double> OrderedAnalytic::conditional(std::span<const int> prefix, const Context&) const {
  const std::size_t step = prefix.size();
  std::vector<double> row(bins(), 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < chains_.size(); ++a) {
    bool match = true;
    for (std::size_t i = 0; i < step && match; ++i) match = chains_[a][i] == prefix[i];
    if (!match || probs_[a] <= 0.0) continue;
    row[chains_[a][step]] += probs_[a];
    total += probs_[a];
  }
  if (total <= 0.0) return std::vector<double>(bins(), 1.0 / bins());
  for (double& p : row) p /= total;
  return row;
}

BoxParams OrderedAnalytic::decode(const QuantizedBox& qb) const {
  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    if (atoms_[a] == qb) return boxes_[a];
  }
  return BoxDistribution::decode(qb);
}

BoxParams OrderedAnalytic::sample_box(const Context& ctx, Rng& rng) const {
  check_context(ctx);
  return boxes_[sample_categorical(probs_, rng)];
}

}  // namespace boxcast
