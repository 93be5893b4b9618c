#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "boxcast/distribution.hpp"

namespace boxcast {

/// Chain given by explicit probability rows keyed on the exact prefix.
/// Missing rows fall back to the step's default row, then to uniform.
/// Build it, then share it as const.
class ExplicitChain final : public BoxDistribution {
 public:
  explicit ExplicitChain(BoxSpace space, int num_contexts = 1);

  /// Every step puts all mass on the tuple's bin.
  static std::shared_ptr<ExplicitChain> point_mass(BoxSpace space, const QuantizedBox& qb);
  static std::shared_ptr<ExplicitChain> uniform(BoxSpace space);

  void set_default(int step, std::vector<double> probs);
  void set_row(int context, std::vector<int> prefix, std::vector<double> probs);

  std::string backend() const override { return "explicit"; }
  int num_contexts() const override { return num_contexts_; }
  std::vector<double> conditional(std::span<const int> prefix, const Context& ctx) const override;

 private:
  std::vector<double> checked(std::vector<double> probs) const;

  int num_contexts_;
  std::array<std::vector<double>, kNumParams> defaults_;
  std::map<std::pair<int, std::vector<int>>, std::vector<double>> rows_;
};

/// Count-based chain fitted by maximum likelihood with Laplace smoothing.
/// Rows are keyed by (context, step, bucketed prefix); prefix bin indices are
/// re-bucketed to `prefix_buckets` coarse cells per parameter. Unseen keys
/// fall back to the (context, step) marginal row.
///   p(v) = (count_v + alpha) / (total + alpha * bins)
class TabularChain final : public BoxDistribution {
 public:
  using PrefixKey = std::vector<std::uint16_t>;

  /// Lexicographic order that also accepts spans, so lookups need no
  /// allocation.
  struct KeyLess {
    using is_transparent = void;
    template <class A, class B>
    bool operator()(const A& a, const B& b) const {
      return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    }
  };

  struct Row {
    std::vector<std::pair<int, double>> counts;  // sorted by bin, weighted counts
    double total = 0.0;
  };

  struct StepTable {
    Row marginal;
    std::map<PrefixKey, Row, KeyLess> rows;
  };

  /// tables[ctx * kNumParams + step].
  TabularChain(BoxSpace space, int num_contexts, double alpha, int prefix_buckets,
               std::vector<StepTable> tables);

  std::string backend() const override { return "tabular"; }
  int num_contexts() const override { return num_contexts_; }
  std::vector<double> conditional(std::span<const int> prefix, const Context& ctx) const override;
  /// Draws from the sparse row directly: a count-weighted bin with
  /// probability total / (total + alpha bins), else a uniform bin.
  int sample_step(std::span<const int> prefix, const Context& ctx, Rng& rng) const override;

  double alpha() const { return alpha_; }
  int prefix_buckets() const { return prefix_buckets_; }
  PrefixKey prefix_key(std::span<const int> prefix) const;
  const StepTable& table(int context, int step) const { return tables_[context * kNumParams + step]; }
  /// Row used for this prefix: its keyed row if seen, else the marginal.
  const Row& row_for(std::span<const int> prefix, int context) const;

 private:
  int num_contexts_;
  double alpha_;
  int prefix_buckets_;
  std::vector<StepTable> tables_;
};

/// Finite distribution over strictly nested boxes b_1 inside b_2 inside ...
/// The chain view comes from the atoms' quantized tuples; decode() and
/// sample_box() return the exact atoms.
class OrderedAnalytic final : public BoxDistribution {
 public:
  /// Boxes listed innermost first. Throws unless each box contains the
  /// previous one (iog = 1), boxes differ, and probs are a distribution.
  OrderedAnalytic(BoxSpace space, std::vector<BoxParams> boxes, std::vector<double> probs);

  std::string backend() const override { return "ordered"; }
  int num_contexts() const override { return 1; }
  std::vector<double> conditional(std::span<const int> prefix, const Context& ctx) const override;
  BoxParams decode(const QuantizedBox& qb) const override;
  BoxParams sample_box(const Context& ctx, Rng& rng) const override;

  const std::vector<BoxParams>& boxes() const { return boxes_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<QuantizedBox>& atoms() const { return atoms_; }

 private:
  std::vector<BoxParams> boxes_;
  std::vector<double> probs_;
  std::vector<QuantizedBox> atoms_;
  std::vector<std::array<int, kNumParams>> chains_;
};

/// Independent per-parameter Gaussians in normalized units, one set per
/// context. conditional() bins the (range-truncated) normal mass.
class GaussianBaseline final : public BoxDistribution {
 public:
  struct Params {
    NormalizedParams mean{};
    NormalizedParams log_var{};
  };

  GaussianBaseline(BoxSpace space, std::vector<Params> per_context);

  std::string backend() const override { return "gaussian"; }
  int num_contexts() const override { return static_cast<int>(params_.size()); }
  std::vector<double> conditional(std::span<const int> prefix, const Context& ctx) const override;
  BoxParams sample_box(const Context& ctx, Rng& rng) const override;

  const Params& params(int context) const { return params_.at(context); }
  double sigma(int context, int param) const;
  /// The pointwise prediction: every parameter at its mean.
  BoxParams mean_box(const Context& ctx) const;

 private:
  std::vector<Params> params_;
};

}  // namespace boxcast
