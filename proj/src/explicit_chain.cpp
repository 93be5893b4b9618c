#include <cmath>
#include <numeric>

#include "boxcast/backends.hpp"
#include "boxcast/error.hpp"

namespace boxcast {

ExplicitChain::ExplicitChain(BoxSpace space, int num_contexts)
    : BoxDistribution(std::move(space)), num_contexts_(num_contexts) {
  if (num_contexts_ < 1) throw Error("explicit chain needs at least one context");
}

std::shared_ptr<ExplicitChain> ExplicitChain::point_mass(BoxSpace space, const QuantizedBox& qb) {
  auto chain = std::make_shared<ExplicitChain>(std::move(space));
  const auto values = to_chain_order(qb, chain->param_order());
  for (int i = 0; i < kNumParams; ++i) {
    std::vector<double> row(chain->bins(), 0.0);
    row.at(values[i]) = 1.0;
    chain->set_default(i, std::move(row));
  }
  return chain;
}

std::shared_ptr<ExplicitChain> ExplicitChain::uniform(BoxSpace space) {
  return std::make_shared<ExplicitChain>(std::move(space));
}

std::vector<double> ExplicitChain::checked(std::vector<double> probs) const {
  if (static_cast<int>(probs.size()) != bins()) throw Error("probability row has wrong length");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw Error("negative probability in explicit chain row");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("explicit chain row does not sum to 1");
  return probs;
}

void ExplicitChain::set_default(int step, std::vector<double> probs) {
  defaults_.at(step) = checked(std::move(probs));
}

void ExplicitChain::set_row(int context, std::vector<int> prefix, std::vector<double> probs) {
  if (prefix.size() >= kNumParams) throw Error("explicit chain prefix too long");
  rows_[{context, std::move(prefix)}] = checked(std::move(probs));
}

std::vector<double> ExplicitChain::conditional(std::span<const int> prefix, const Context& ctx) const {
  const auto it = rows_.find({ctx.id, std::vector<int>(prefix.begin(), prefix.end())});
  if (it != rows_.end()) return it->second;
  const auto& def = defaults_.at(prefix.size());
  if (!def.empty()) return def;
  return std::vector<double>(bins(), 1.0 / bins());
}

}  // namespace boxcast
