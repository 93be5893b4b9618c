#include "app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "app/manifest.hpp"
#include "boxcast/error.hpp"
#include "boxcast/metrics.hpp"
#include "boxcast/parallel.hpp"

namespace boxcast::app {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void setup_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_color_mt("boxcast");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    done = true;
  }
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("BOXCAST_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

Normalizer auto_normalizer(std::span<const SceneRecord> records) {
  if (records.empty()) throw Error("cannot derive a normalizer from an empty dataset");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  double max_dim = 0.0;
  for (const auto& r : records) {
    lo = lo.cwiseMin(r.gt.center);
    hi = hi.cwiseMax(r.gt.center);
    max_dim = std::max(max_dim, r.gt.dims.maxCoeff());
  }
  const Vec3 offset = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo).maxCoeff();
  const double s = std::max({half, max_dim, kScaleFloor}) / 0.9;
  return Normalizer::fixed(Vec3::Constant(s), offset);
}

Normalizer scene_normalizer(const BoxSpace& space, const SceneRecord& r) {
  if (space.normalizer.mode == NormalizerMode::quartile) return normalize_cloud(r.points);
  return space.normalizer;
}

DistributionPtr scene_view(const DistributionPtr& model, const SceneRecord& r) {
  if (model->space().normalizer.mode != NormalizerMode::quartile) return model;
  return std::make_shared<RenormalizedView>(model, scene_normalizer(model->space(), r));
}

std::vector<TrainingExample> make_examples(std::span<const SceneRecord> records, const BoxSpace& space) {
  std::vector<TrainingExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({Context{r.context, {}}, r.gt, scene_normalizer(space, r), space.symmetry});
  }
  return out;
}

FitSettings fit_settings_from_json(const Json& j) {
  FitSettings s;
  s.config = fit_config_from_json(j);
  s.backend = j.value("backend", s.backend);
  s.normalizer = j.value("normalizer", s.normalizer);
  if (j.contains("symmetry")) s.config.space.symmetry = parse_symmetry_mode(j.at("symmetry").get<std::string>());
  if (j.contains("bins")) s.config.space.quantizer.bins = j.at("bins").get<int>();
  if (s.backend != "tabular" && s.backend != "gaussian") throw Error("unknown backend '" + s.backend + "'");
  if (s.normalizer != "fixed" && s.normalizer != "auto" && s.normalizer != "quartile") {
    throw Error("normalizer must be fixed, auto or quartile");
  }
  s.config.validate();
  return s;
}

DistributionPtr fit_model(std::span<const SceneRecord> records, FitSettings settings) {
  auto& space = settings.config.space;
  if (settings.normalizer == "auto") {
    space.normalizer = auto_normalizer(records);
  } else if (settings.normalizer == "quartile") {
    space.normalizer = Normalizer{};
    space.normalizer.mode = NormalizerMode::quartile;
  }
  const auto examples = make_examples(records, space);
  if (settings.backend == "gaussian") return fit_gaussian(examples, settings.config);
  return fit_tabular(examples, settings.config);
}

Json to_json(const Prediction& p) {
  Json j = {{"schema_version", kSchemaVersion},
            {"id", p.id},
            {"context", p.context},
            {"method", p.method},
            {"symmetry", std::string(to_string(p.symmetry))},
            {"box", to_json(p.box)},
            {"score", p.score}};
  for (const auto& [k, v] : p.extra.items()) j[k] = v;
  return j;
}

Prediction prediction_from_json(const Json& j) {
  check_schema(j, "prediction");
  Prediction p;
  p.id = j.at("id").get<std::string>();
  p.context = j.at("context").get<int>();
  p.method = j.at("method").get<std::string>();
  p.symmetry = parse_symmetry_mode(j.value("symmetry", std::string("none")));
  p.box = box_from_json(j.at("box"));
  p.score = j.at("score").get<double>();
  return p;
}

namespace {

struct Method {
  enum Kind { beam, quantile, conditioned, gaussian } kind = beam;
  double q = 0.0;
  std::string sku_file;
};

Method parse_method(const std::string& s) {
  Method m;
  if (s == "beam") return m;
  if (s == "gaussian-baseline") {
    m.kind = Method::gaussian;
    return m;
  }
  if (s.rfind("quantile:", 0) == 0) {
    m.kind = Method::quantile;
    const std::string v = s.substr(9);
    std::size_t used = 0;
    try {
      m.q = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty() || !(m.q > 0.0 && m.q < 1.0)) {
      throw Error("quantile method needs q in (0, 1), got '" + v + "'");
    }
    return m;
  }
  if (s == "conditioned" || s.rfind("conditioned:", 0) == 0) {
    m.kind = Method::conditioned;
    if (s.size() > 12) m.sku_file = s.substr(12);
    return m;
  }
  throw Error("unknown method '" + s + "'");
}

// {"schema_version":1,"skus":[[x,y,z],...],"by_context":{"3":[[...]]}}
struct SkuCatalog {
  std::vector<Vec3> all;
  std::map<int, std::vector<Vec3>> by_context;

  const std::vector<Vec3>& for_record(const SceneRecord& r) const {
    if (auto it = by_context.find(r.context); it != by_context.end()) return it->second;
    return all.empty() ? r.skus : all;
  }
};

SkuCatalog load_skus(const std::string& path) {
  SkuCatalog c;
  if (path.empty()) return c;
  const Json j = read_json_file(path);
  check_schema(j, "SKU file");
  for (const auto& d : j.value("skus", Json::array())) c.all.push_back(vec3_from_json(d));
  if (j.contains("by_context")) {
    for (const auto& [key, list] : j.at("by_context").items()) {
      auto& v = c.by_context[std::stoi(key)];
      for (const auto& d : list) v.push_back(vec3_from_json(d));
    }
  }
  return c;
}

Prediction predict_one(const DistributionPtr& model, const SceneRecord& r, std::size_t index, const Method& method,
                       const SkuCatalog& skus, const PredictOptions& opt) {
  Prediction p;
  p.id = r.id;
  p.context = r.context;
  p.method = opt.method;
  p.symmetry = model->space().symmetry;
  const Context ctx{r.context, {}};
  const DistributionPtr view = scene_view(model, r);
  switch (method.kind) {
    case Method::beam: {
      const BeamResult b = beam_search(*view, ctx, {opt.beam_width});
      p.box = view->decode(b.box);
      p.score = b.log_prob;
      break;
    }
    case Method::conditioned: {
      const auto& cands = skus.for_record(r);
      if (cands.empty()) throw Error("record " + r.id + ": no SKU candidates");
      const ConditionedResult c = dimension_conditioned_predict(view, ctx, cands, {opt.beam_width});
      p.box = view->decode(c.box);
      p.score = c.score;
      p.extra["sku_index"] = c.sku_index;
      if (c.dims_overflow) p.extra["dims_overflow"] = true;
      break;
    }
    case Method::gaussian: {
      const auto* g = dynamic_cast<const GaussianBaseline*>(model.get());
      if (!g) throw Error("gaussian-baseline needs a model fitted with the gaussian backend");
      g->check_context(ctx);
      NormalizedParams v = g->params(ctx.id).mean;
      for (int i = kDimX; i <= kDimZ; ++i) v[i] = std::max(v[i], 1e-6);
      p.box = from_normalized(v, scene_normalizer(model->space(), r), model->space().symmetry);
      p.score = gaussian_uncertainty(*g, ctx);
      break;
    }
    case Method::quantile: {
      const std::uint64_t seed = derive_seed(opt.seed, index);
      int k = opt.k;
      for (int attempt = 0;; ++attempt, k *= 2) {
        auto sample = std::make_shared<const OccupancySample>(draw_occupancy_sample(*view, ctx, k, opt.m, seed));
        QuantileResult res;
        try {
          res = quantile_box_from_sample(sample, method.q);
        } catch (const QuantileError&) {
          if (attempt >= opt.max_retries) throw Error("record " + r.id + ": quantile too high for sample");
          spdlog::info("record {}: empty quantile set at k={}, retrying", r.id, k);
          continue;
        }
        p.box = res.box;
        try {
          p.score = uncertainty_from_sample(sample, opt.u_alpha, opt.u_beta);
        } catch (const QuantileError&) {
          p.score = 1.0;
          p.extra["score_saturated"] = true;
        }
        p.extra["k"] = k;
        p.extra["m"] = opt.m;
        p.extra["seed"] = seed;
        break;
      }
      break;
    }
  }
  return p;
}

}  // namespace

std::vector<Prediction> predict_all(const DistributionPtr& model, std::span<const SceneRecord> records,
                                    const PredictOptions& opt) {
  const Method method = parse_method(opt.method);
  const SkuCatalog skus = load_skus(method.sku_file);
  std::vector<Prediction> out(records.size());
  parallel_for(records.size(), opt.workers,
               [&](std::size_t i) { out[i] = predict_one(model, records[i], i, method, skus, opt); });
  return out;
}

namespace {

std::string to_jsonl(std::span<const Prediction> preds) {
  std::ostringstream out;
  for (const auto& p : preds) out << to_json(p).dump() << '\n';
  return out.str();
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<Prediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(prediction_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string with_suffix(const std::string& out, const std::string& suffix) { return out + suffix; }

struct Common {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = false) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* cfg = cmd->add_option("--config", c.config, "JSON config file");
  if (needs_config) cfg->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output path")->required();
}

RunManifest start_manifest(const std::string& command, const std::vector<std::string>& args, const Common& c) {
  RunManifest m;
  m.command = command;
  m.argv.assign(args.begin() + 1, args.end());
  m.seed = c.seed;
  m.version = BOXCAST_VERSION;
  return m;
}

double percentile(std::vector<double> v, double p) { return linear_quantile(std::move(v), p); }

// Config-file values fill in options not given on the command line.
void apply_predict_config(const std::string& path, PredictOptions& o, const CLI::App* cmd) {
  if (path.empty()) return;
  const PredictOptions flags = o;
  const Json j = read_json_file(path);
  check_schema(j, "predict config");
  o.beam_width = j.value("beam_width", o.beam_width);
  o.k = j.value("k", o.k);
  o.m = j.value("m", o.m);
  o.u_alpha = j.value("uncertainty_alpha", o.u_alpha);
  o.u_beta = j.value("uncertainty_beta", o.u_beta);
  o.max_retries = j.value("max_retries", o.max_retries);
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--beam-width")) o.beam_width = flags.beam_width;
  if (given("--k")) o.k = flags.k;
  if (given("--m")) o.m = flags.m;
}

Json predict_snapshot(const PredictOptions& o) {
  return {{"method", o.method},        {"beam_width", o.beam_width}, {"k", o.k},
          {"m", o.m},                  {"uncertainty_alpha", o.u_alpha}, {"uncertainty_beta", o.u_beta},
          {"max_retries", o.max_retries}, {"workers", o.workers}};
}

}  // namespace

int run(const std::vector<std::string>& args) {
  setup_logging();
  CLI::App app{"boxcast: distributions over oriented 3D boxes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BOXCAST_VERSION);

  // generate
  Common gen;
  std::string gen_spec;
  std::size_t gen_n = 0;
  auto* g = app.add_subcommand("generate", "Sample synthetic scenes to JSONL");
  g->add_option("--spec", gen_spec, "Scenario file")->required()->check(CLI::ExistingFile);
  g->add_option("-n,--n", gen_n, "Number of scenes")->required();
  add_common(g, gen);

  // fit
  Common fit;
  std::string fit_data;
  auto* f = app.add_subcommand("fit", "Fit a model to a scene dataset");
  f->add_option("--data", fit_data, "Scene JSONL")->required()->check(CLI::ExistingFile);
  add_common(f, fit, true);

  // predict
  Common pred;
  std::string pred_model, pred_data;
  PredictOptions popt;
  auto* p = app.add_subcommand("predict", "Predict one box per scene");
  p->add_option("--model", pred_model, "Model file")->required()->check(CLI::ExistingFile);
  p->add_option("--data", pred_data, "Scene JSONL")->required()->check(CLI::ExistingFile);
  p->add_option("--method", popt.method, "beam | quantile:q | conditioned[:sku-file] | gaussian-baseline")
      ->required();
  p->add_option("--beam-width", popt.beam_width, "Beam width");
  p->add_option("--k", popt.k, "Boxes sampled per quantile box");
  p->add_option("--m", popt.m, "Points per sampled box");
  add_common(p, pred, true);

  // eval
  Common ev;
  std::string ev_pred, ev_data;
  double ev_threshold = 0.25;
  auto* e = app.add_subcommand("eval", "Score predictions against ground truth");
  e->add_option("--pred", ev_pred, "Prediction JSONL")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev_data, "Scene JSONL")->required()->check(CLI::ExistingFile);
  e->add_option("--iou-threshold", ev_threshold, "IoU below which a prediction counts as poor");
  add_common(e, ev);

  // curve
  Common cv;
  std::string cv_model, cv_data;
  std::vector<double> cv_qs{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  PredictOptions copt;
  auto* c = app.add_subcommand("curve", "Containment fraction f(q) of quantile boxes");
  c->add_option("--model", cv_model, "Model file")->required()->check(CLI::ExistingFile);
  c->add_option("--data", cv_data, "Scene JSONL")->required()->check(CLI::ExistingFile);
  c->add_option("--q", cv_qs, "Quantiles")->delimiter(',');
  c->add_option("--k", copt.k, "Boxes sampled per quantile box");
  c->add_option("--m", copt.m, "Points per sampled box");
  add_common(c, cv, true);

  // bench
  Common bn;
  std::string bn_model, bn_data;
  std::size_t bn_batch = 15;
  int bn_repeats = 30;
  double bn_budget = 0.0;
  PredictOptions bopt;
  auto* b = app.add_subcommand("bench", "Latency of quantile-box inference on a batch");
  b->add_option("--model", bn_model, "Model file")->required()->check(CLI::ExistingFile);
  b->add_option("--data", bn_data, "Scene JSONL")->required()->check(CLI::ExistingFile);
  b->add_option("--batch", bn_batch, "Objects per batch");
  b->add_option("--repeats", bn_repeats, "Timed repetitions")->check(CLI::PositiveNumber);
  b->add_option("--k", bopt.k, "Boxes sampled per quantile box");
  b->add_option("--m", bopt.m, "Points per sampled box");
  b->add_option("--budget-ms", bn_budget, "p50 budget (default 50, or 15 with >= 8 workers)");
  add_common(b, bn, true);

  // replay
  std::string rp_manifest;
  auto* r = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  r->add_option("manifest", rp_manifest, "Manifest file")->required()->check(CLI::ExistingFile);

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& err) {
    std::ostringstream out, errs;
    const int code = app.exit(err, out, errs);
    std::cout << out.str();
    std::cerr << errs.str();
    return code;
  }

  const auto t0 = Clock::now();
  try {
    if (*g) {
      if (gen_n == 0) throw Error("generate needs n >= 1");
      const auto specs = scenarios_from_json(read_json_file(gen_spec));
      const auto records = generate(specs, gen_n, gen.seed);
      write_jsonl(gen.out, records);
      RunManifest m = start_manifest("generate", args, gen);
      m.config = read_json_file(gen_spec);
      m.inputs = {gen_spec};
      m.outputs = {gen.out};
      m.timings_ms["total"] = ms_since(t0);
      write_manifest(gen.out, m);
      spdlog::info("wrote {} scenes to {}", records.size(), gen.out);
    } else if (*f) {
      FitSettings settings;
      if (!fit.config.empty()) settings = fit_settings_from_json(read_json_file(fit.config));
      const auto records = read_jsonl(fit_data);
      if (records.empty()) throw Error("cannot fit on an empty dataset");
      const auto model = fit_model(records, settings);
      const double t_fit = ms_since(t0);
      save_model(*model, fit.out);
      const std::string report_path = with_suffix(fit.out, ".report.json");
      Json report;
      if (const auto* tab = dynamic_cast<const TabularChain*>(model.get())) {
        report = to_json(make_fit_report(*tab, make_examples(records, model->space()), settings.config.symmetry_averaging));
      } else {
        const auto ex = make_examples(records, model->space());
        report = {{"schema_version", kSchemaVersion},
                  {"dataset_size", records.size()},
                  {"nll", evaluate_nll(*model, ex, false)}};
      }
      write_file_atomic(report_path, report.dump(2) + "\n");
      RunManifest m = start_manifest("fit", args, fit);
      m.config = to_json(settings.config);
      m.config["backend"] = settings.backend;
      m.config["normalizer"] = settings.normalizer;
      m.inputs = {fit_data};
      m.outputs = {fit.out, report_path};
      m.timings_ms["fit"] = t_fit;
      m.timings_ms["total"] = ms_since(t0);
      write_manifest(fit.out, m);
    } else if (*p) {
      apply_predict_config(pred.config, popt, p);
      popt.seed = pred.seed;
      popt.workers = pred.workers;
      const auto model = load_model(pred_model);
      const auto records = read_jsonl(pred_data);
      const auto preds = predict_all(model, records, popt);
      write_file_atomic(pred.out, to_jsonl(preds));
      RunManifest m = start_manifest("predict", args, pred);
      m.config = predict_snapshot(popt);
      m.inputs = {pred_model, pred_data};
      m.outputs = {pred.out};
      m.timings_ms["total"] = ms_since(t0);
      write_manifest(pred.out, m);
    } else if (*e) {
      const auto preds = read_predictions(ev_pred);
      const auto records = read_jsonl(ev_data);
      std::map<std::string, const SceneRecord*> by_id;
      for (const auto& rec : records) by_id[rec.id] = &rec;
      std::vector<ObjectMetrics> rows(preds.size());
      parallel_for(preds.size(), ev.workers, [&](std::size_t i) {
        const auto it = by_id.find(preds[i].id);
        if (it == by_id.end()) throw Error("prediction for unknown scene '" + preds[i].id + "'");
        rows[i] = evaluate_pair({preds[i].id, preds[i].method, preds[i].box, it->second->gt, preds[i].symmetry,
                                 preds[i].score});
      });
      std::ostringstream rows_csv, agg_csv;
      write_rows_csv(rows_csv, rows);
      const auto aggs = aggregate(rows);
      write_aggregate_csv(agg_csv, aggs);
      Json summary = {{"schema_version", kSchemaVersion}, {"methods", Json::array()}};
      for (const auto& a : aggs) {
        Json mj = {{"method", a.method}, {"n", a.n},           {"mean_iou", a.mean_iou},
                   {"mean_iog", a.mean_iog}, {"f1", a.f1},     {"err_dim", a.err_dim},
                   {"err_quat", a.err_quat}, {"err_center", a.err_center}};
        // Scores are uncertainties only for quantile (U) and gaussian (G) runs.
        if (a.method.rfind("quantile:", 0) == 0 || a.method == "gaussian-baseline") {
          std::vector<double> s, iou_v;
          for (const auto& row : rows) {
            if (row.method == a.method && row.score) {
              s.push_back(*row.score);
              iou_v.push_back(row.iou);
            }
          }
          if (s.size() >= 2) {
            const auto uq = uncertainty_quality(s, iou_v, ev_threshold);
            mj["roc_auc"] = uq.roc_auc ? Json(*uq.roc_auc) : Json();
            mj["spearman"] = uq.spearman ? Json(*uq.spearman) : Json();
          }
        }
        summary["methods"].push_back(mj);
      }
      const std::string agg_path = with_suffix(ev.out, ".aggregate.csv");
      const std::string sum_path = with_suffix(ev.out, ".summary.json");
      write_file_atomic(ev.out, rows_csv.str());
      write_file_atomic(agg_path, agg_csv.str());
      write_file_atomic(sum_path, summary.dump(2) + "\n");
      RunManifest m = start_manifest("eval", args, ev);
      m.config = {{"iou_threshold", ev_threshold}};
      m.inputs = {ev_pred, ev_data};
      m.outputs = {ev.out, agg_path, sum_path};
      m.timings_ms["total"] = ms_since(t0);
      write_manifest(ev.out, m);
    } else if (*c) {
      apply_predict_config(cv.config, copt, c);
      const auto model = load_model(cv_model);
      const auto records = read_jsonl(cv_data);
      std::sort(cv_qs.begin(), cv_qs.end());
      for (double q : cv_qs) {
        if (!(q > 0.0 && q < 1.0)) throw Error("quantiles must lie in (0, 1)");
      }
      // One occupancy sample per object, shared by every q.
      std::vector<std::vector<CurveSample>> per(records.size());
      std::vector<int> empty(records.size(), 0);
      parallel_for(records.size(), cv.workers, [&](std::size_t i) {
        const Context ctx{records[i].context, {}};
        const auto view = scene_view(model, records[i]);
        auto sample = std::make_shared<const OccupancySample>(
            draw_occupancy_sample(*view, ctx, copt.k, copt.m, derive_seed(cv.seed, i)));
        for (double q : cv_qs) {
          try {
            per[i].push_back({q, quantile_box_from_sample(sample, q).box, records[i].gt});
          } catch (const QuantileError&) {
            // No box at this q: scored as not containing the object.
            BoxParams none = records[i].gt;
            none.center += Vec3::Constant(1e6);
            per[i].push_back({q, none, records[i].gt});
            ++empty[i];
          }
        }
      });
      std::vector<CurveSample> all;
      for (auto& v : per) all.insert(all.end(), v.begin(), v.end());
      const auto curve = containment_curve(all);
      std::ostringstream csv;
      write_curve_csv(csv, curve);
      write_file_atomic(cv.out, csv.str());
      int n_empty = 0;
      for (int x : empty) n_empty += x;
      if (n_empty > 0) spdlog::warn("{} quantile sets were empty and scored as misses", n_empty);
      RunManifest m = start_manifest("curve", args, cv);
      m.config = {{"q", cv_qs}, {"k", copt.k}, {"m", copt.m}, {"empty_quantile_sets", n_empty}};
      m.inputs = {cv_model, cv_data};
      m.outputs = {cv.out};
      m.timings_ms["total"] = ms_since(t0);
      write_manifest(cv.out, m);
    } else if (*b) {
      apply_predict_config(bn.config, bopt, b);
      const auto model = load_model(bn_model);
      auto records = read_jsonl(bn_data);
      if (records.empty()) throw Error("bench needs at least one scene");
      if (records.size() > bn_batch) records.resize(bn_batch);
      const double budget = bn_budget > 0.0 ? bn_budget : (bn.workers >= 8 ? 15.0 : 50.0);
      std::vector<BoxParams> boxes(records.size());
      // An empty quantile set still costs a full inference; it is counted, not fatal.
      std::atomic<int> n_empty{0};
      auto run_batch = [&](int rep) {
        parallel_for(records.size(), bn.workers, [&](std::size_t i) {
          const Context ctx{records[i].context, {}};
          const auto view = scene_view(model, records[i]);
          QuantileConfig qc{0.5, bopt.k, bopt.m, derive_seed(bn.seed + rep, i)};
          try {
            boxes[i] = quantile_box(*view, ctx, qc).box;
          } catch (const QuantileError&) {
            ++n_empty;
          }
        });
      };
      run_batch(-1);  // warm-up
      std::vector<double> times;
      for (int rep = 0; rep < bn_repeats; ++rep) {
        const auto t = Clock::now();
        run_batch(rep);
        times.push_back(ms_since(t));
      }
      const double p50 = percentile(times, 0.5);
      const std::string status = p50 <= budget ? "ok" : (p50 <= 4.0 * budget ? "warn" : "fail");
      Json report = {{"schema_version", kSchemaVersion},
                     {"batch", records.size()},
                     {"k", bopt.k},
                     {"m", bopt.m},
                     {"workers", bn.workers},
                     {"repeats", bn_repeats},
                     {"p50_ms", p50},
                     {"p90_ms", percentile(times, 0.9)},
                     {"min_ms", *std::min_element(times.begin(), times.end())},
                     {"max_ms", *std::max_element(times.begin(), times.end())},
                     {"budget_ms", budget},
                     {"status", status},
                     {"empty_quantile_sets", n_empty.load()}};
      write_file_atomic(bn.out, report.dump(2) + "\n");
      RunManifest m = start_manifest("bench", args, bn);
      m.config = {{"k", bopt.k}, {"m", bopt.m}, {"batch", records.size()}, {"repeats", bn_repeats}};
      m.inputs = {bn_model, bn_data};
      m.outputs = {bn.out};
      m.timings_ms["total"] = ms_since(t0);
      write_manifest(bn.out, m);
      if (status == "warn") spdlog::warn("bench p50 {:.2f} ms exceeds budget {:.1f} ms", p50, budget);
      if (status == "fail") {
        spdlog::error("bench p50 {:.2f} ms exceeds 4x budget {:.1f} ms", p50, budget);
        return 3;
      }
    } else if (*r) {
      const RunManifest m = manifest_from_json(read_json_file(rp_manifest));
      std::vector<std::string> again{args.front()};
      again.insert(again.end(), m.argv.begin(), m.argv.end());
      if (again.size() > 1 && again[1] == "replay") throw Error("refusing to replay a replay");
      return run(again);
    }
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    return 1;
  }
  return 0;
}

}  // namespace boxcast::app
