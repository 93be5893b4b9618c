#include "boxcast/fit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "boxcast/error.hpp"
#include "boxcast/geometry.hpp"

namespace boxcast {

std::vector<WeightedTarget> build_targets(const TrainingExample& ex, const Quantizer& q, bool symmetry_averaging) {
  const SymmetryMode mode = symmetry_averaging ? ex.symmetry : SymmetryMode::none;
  const auto members = enumerate_equivalent_params(canonical_box(ex.gt, ex.symmetry), mode);
  std::vector<WeightedTarget> out;
  out.reserve(members.size());
  const double w = 1.0 / static_cast<double>(members.size());
  for (const auto& b : members) out.push_back({quantize_box(b, ex.normalizer, q, ex.symmetry), w});
  return out;
}

void FitConfig::validate() const {
  if (!(alpha > 0.0)) throw Error("fit config: alpha must be positive");
  if (prefix_buckets < 1) throw Error("fit config: prefix_buckets must be at least 1");
  if (num_contexts < 0) throw Error("fit config: num_contexts must be non-negative");
  space.quantizer.validate();
  if (!is_permutation(space.order)) throw Error("fit config: param_order is not a permutation");
}

Json to_json(const FitConfig& cfg) {
  return {{"schema_version", kSchemaVersion},
          {"alpha", cfg.alpha},
          {"prefix_buckets", cfg.prefix_buckets},
          {"symmetry_averaging", cfg.symmetry_averaging},
          {"num_contexts", cfg.num_contexts},
          {"space", to_json(cfg.space)}};
}

FitConfig fit_config_from_json(const Json& j) {
  check_schema(j, "fit config");
  FitConfig cfg;
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.prefix_buckets = j.value("prefix_buckets", cfg.prefix_buckets);
  cfg.symmetry_averaging = j.value("symmetry_averaging", cfg.symmetry_averaging);
  cfg.num_contexts = j.value("num_contexts", cfg.num_contexts);
  if (j.contains("space")) cfg.space = space_from_json(j.at("space"));
  cfg.validate();
  return cfg;
}

namespace {

// lcm(1, ..., 24): every 1/|B| weight is a whole number of these units.
constexpr std::int64_t kWeightUnits = 5354228880LL;

int context_count(std::span<const TrainingExample> data, const FitConfig& cfg) {
  int n = cfg.num_contexts;
  int max_id = -1;
  for (const auto& ex : data) {
    if (ex.context.id < 0) throw Error("negative context id in training data");
    max_id = std::max(max_id, ex.context.id);
  }
  if (n == 0) return max_id + 1;
  if (max_id >= n) throw Error("context id " + std::to_string(max_id) + " outside vocabulary of " + std::to_string(n));
  return n;
}

using IntRow = std::map<int, std::int64_t>;

TabularChain::Row to_row(const IntRow& r) {
  TabularChain::Row row;
  std::int64_t total = 0;
  for (const auto& [bin, units] : r) {
    row.counts.emplace_back(bin, static_cast<double>(units) / kWeightUnits);
    total += units;
  }
  row.total = static_cast<double>(total) / kWeightUnits;
  return row;
}

}  // namespace

std::shared_ptr<TabularChain> fit_tabular(std::span<const TrainingExample> data, const FitConfig& cfg) {
  if (data.empty()) throw Error("cannot fit on an empty dataset");
  cfg.validate();
  const int n_ctx = context_count(data, cfg);
  const Quantizer& q = cfg.space.quantizer;
  const int buckets = std::clamp(cfg.prefix_buckets, 1, q.bins);

  struct IntTable {
    IntRow marginal;
    std::map<TabularChain::PrefixKey, IntRow> rows;
  };
  std::vector<IntTable> tables(static_cast<std::size_t>(n_ctx) * kNumParams);
  for (const auto& ex : data) {
    const auto targets = build_targets(ex, q, cfg.symmetry_averaging);
    const std::int64_t units = kWeightUnits / static_cast<std::int64_t>(targets.size());
    if (units * static_cast<std::int64_t>(targets.size()) != kWeightUnits) {
      throw Error("symmetry set size does not divide the weight unit");
    }
    for (const auto& t : targets) {
      const auto chain = to_chain_order(t.box, cfg.space.order);
      TabularChain::PrefixKey key;
      key.reserve(kNumParams);
      for (int s = 0; s < kNumParams; ++s) {
        IntTable& tab = tables[static_cast<std::size_t>(ex.context.id) * kNumParams + s];
        tab.marginal[chain[s]] += units;
        tab.rows[key][chain[s]] += units;
        key.push_back(static_cast<std::uint16_t>(static_cast<long>(chain[s]) * buckets / q.bins));
      }
    }
  }

  std::vector<TabularChain::StepTable> out(tables.size());
  for (std::size_t i = 0; i < tables.size(); ++i) {
    out[i].marginal = to_row(tables[i].marginal);
    for (const auto& [key, r] : tables[i].rows) out[i].rows.emplace(key, to_row(r));
  }
  return std::make_shared<TabularChain>(cfg.space, n_ctx, cfg.alpha, buckets, std::move(out));
}

std::shared_ptr<GaussianBaseline> fit_gaussian(std::span<const TrainingExample> data, const FitConfig& cfg) {
  if (data.empty()) throw Error("cannot fit on an empty dataset");
  cfg.validate();
  const int n_ctx = context_count(data, cfg);
  std::vector<std::vector<NormalizedParams>> per_ctx(n_ctx);
  for (const auto& ex : data) per_ctx[ex.context.id].push_back(to_normalized(ex.gt, ex.normalizer, ex.symmetry));

  std::vector<GaussianBaseline::Params> params(n_ctx);
  for (int c = 0; c < n_ctx; ++c) {
    auto& p = params[c];
    const auto& xs = per_ctx[c];
    for (int i = 0; i < kNumParams; ++i) {
      if (xs.empty()) {
        const Range r = cfg.space.quantizer.ranges[i];
        p.mean[i] = 0.5 * (r.lo + r.hi);
        p.log_var[i] = 0.0;
        continue;
      }
      double mean = 0.0;
      for (const auto& x : xs) mean += x[i];
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (const auto& x : xs) var += (x[i] - mean) * (x[i] - mean);
      var /= static_cast<double>(xs.size());
      p.mean[i] = mean;
      p.log_var[i] = std::log(std::max(var, kGaussianVarFloor));
    }
  }
  return std::make_shared<GaussianBaseline>(cfg.space, std::move(params));
}

double evaluate_nll(const BoxDistribution& model, std::span<const TrainingExample> data, bool symmetry_averaging) {
  if (data.empty()) throw Error("cannot evaluate NLL on an empty dataset");
  double total = 0.0;
  for (const auto& ex : data) {
    double lp = 0.0;
    for (const auto& t : build_targets(ex, model.space().quantizer, symmetry_averaging)) {
      lp += t.weight * log_prob(model, t.box, ex.context);
    }
    total += lp;
  }
  return -total / static_cast<double>(data.size());
}

double expected_iou_loss(const BoxDistribution& model, const Context& ctx, const BoxParams& gt, int n_samples,
                         Rng& rng) {
  if (n_samples < 1) throw Error("expected IoU loss needs at least one sample");
  double total = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const QuantizedBox s = sample(model, ctx, rng);
    total += 1.0 - iou(expectation_refine(model, s, ctx), gt);
  }
  return total / n_samples;
}

FitReport make_fit_report(const TabularChain& model, std::span<const TrainingExample> data, bool symmetry_averaging) {
  FitReport r;
  r.dataset_size = data.size();
  std::size_t overflowed = 0;
  for (const auto& ex : data) {
    r.num_targets += build_targets(ex, model.space().quantizer, symmetry_averaging).size();
    if (quantize_box(ex.gt, ex.normalizer, model.space().quantizer, ex.symmetry).any_overflow()) ++overflowed;
  }
  r.overflow_rate = data.empty() ? 0.0 : static_cast<double>(overflowed) / data.size();
  r.nll = data.empty() ? 0.0 : evaluate_nll(model, data, symmetry_averaging);

  const double denom_alpha = model.alpha() * model.bins();
  auto entropy = [&](const TabularChain::Row& row) {
    const double denom = row.total + denom_alpha;
    const double p0 = model.alpha() / denom;
    double h = -(model.bins() - static_cast<double>(row.counts.size())) * p0 * std::log(p0);
    for (const auto& [bin, c] : row.counts) {
      const double p = (c + model.alpha()) / denom;
      h -= p * std::log(p);
    }
    return h;
  };
  for (int s = 0; s < kNumParams; ++s) {
    double weighted = 0.0;
    double mass = 0.0;
    for (int c = 0; c < model.num_contexts(); ++c) {
      const auto& t = model.table(c, s);
      for (const auto& [key, row] : t.rows) {
        weighted += row.total * entropy(row);
        mass += row.total;
      }
    }
    r.step_entropy[s] = mass > 0.0 ? weighted / mass : 0.0;
  }
  return r;
}

Json to_json(const FitReport& r) {
  return {{"schema_version", kSchemaVersion},
          {"dataset_size", r.dataset_size},
          {"num_targets", r.num_targets},
          {"overflow_rate", r.overflow_rate},
          {"nll", r.nll},
          {"step_entropy", r.step_entropy}};
}

}  // namespace boxcast
