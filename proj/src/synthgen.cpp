#include "boxcast/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "boxcast/error.hpp"

namespace boxcast {

namespace {

constexpr double kPointTolerance = 1e-6;
constexpr int kStubGrid = 5;

BoxParams hanging_box(const ScenarioSpec& s, const Vec3& dims, double yaw) {
  BoxParams b;
  b.dims = dims;
  b.rot = canonicalize({yaw, 0.0, 0.0});
  b.center = s.top_center - Vec3(0.0, 0.0, 0.5 * dims.z());
  return b;
}

// Grid on the top face of `b`, or on its inscribed disk.
std::vector<Vec3> top_face_stub(const BoxParams& b, bool disk) {
  std::vector<Vec3> pts;
  const Mat3 r = b.rotation();
  for (int i = 0; i < kStubGrid; ++i) {
    for (int j = 0; j < kStubGrid; ++j) {
      double u = (i + 0.5) / kStubGrid - 0.5;
      double v = (j + 0.5) / kStubGrid - 0.5;
      if (disk) {
        const double rad = 0.5 * (i + 0.5) / kStubGrid;
        const double ang = 2.0 * std::numbers::pi * (j + 0.5) / kStubGrid;
        u = rad * std::cos(ang);
        v = rad * std::sin(ang);
      }
      pts.push_back(b.center + r * Vec3(u * b.dims.x(), v * b.dims.y(), 0.5 * b.dims.z()));
    }
  }
  return pts;
}

bool on_box(const BoxParams& b, const Vec3& x) {
  const Vec3 local = b.rotation().transpose() * (x - b.center);
  return (local.cwiseAbs() - 0.5 * b.dims).maxCoeff() <= kPointTolerance;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::stacked_bin: return "stacked_bin";
    case ScenarioKind::rot_symmetric: return "rot_symmetric";
    case ScenarioKind::nested_ordered: return "nested_ordered";
    case ScenarioKind::unambiguous: return "unambiguous";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (auto k : {ScenarioKind::stacked_bin, ScenarioKind::rot_symmetric, ScenarioKind::nested_ordered,
                 ScenarioKind::unambiguous}) {
    if (to_string(k) == name) return k;
  }
  throw Error("unknown scenario kind '" + std::string(name) + "'");
}

int ScenarioSpec::num_classes() const {
  switch (kind) {
    case ScenarioKind::stacked_bin: return levels;
    case ScenarioKind::nested_ordered: return static_cast<int>(ratios.size());
    case ScenarioKind::rot_symmetric: return symmetry == "circular" ? 0 : 4;
    case ScenarioKind::unambiguous: return 0;
  }
  return 0;
}

std::vector<double> ScenarioSpec::class_probs() const {
  const int n = num_classes();
  if (!probs.empty()) return probs;
  return std::vector<double>(n, n > 0 ? 1.0 / n : 0.0);
}

void ScenarioSpec::validate() const {
  const std::string where = "scenario '" + name + "': ";
  if (!(dims.minCoeff() > 0.0) || !dims.allFinite()) throw Error(where + "dims must be positive");
  if (!top_center.allFinite() || !std::isfinite(yaw)) throw Error(where + "placement must be finite");
  if (!(weight > 0.0)) throw Error(where + "weight must be positive");
  if (kind == ScenarioKind::stacked_bin && levels < 1) throw Error(where + "levels must be at least 1");
  if (kind == ScenarioKind::nested_ordered) {
    if (ratios.empty()) throw Error(where + "nested_ordered needs ratios");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      if (!(ratios[i] > 0.0 && ratios[i] <= 1.0)) throw Error(where + "ratios must lie in (0, 1]");
      if (i > 0 && !(ratios[i] < ratios[i - 1])) throw Error(where + "ratios must be strictly decreasing");
    }
    if (!footprint_ratios.empty()) {
      if (footprint_ratios.size() != ratios.size()) throw Error(where + "footprint_ratios must match ratios");
      for (std::size_t i = 0; i < footprint_ratios.size(); ++i) {
        if (!(footprint_ratios[i] > 0.0 && footprint_ratios[i] <= 1.0)) {
          throw Error(where + "footprint_ratios must lie in (0, 1]");
        }
        if (i > 0 && footprint_ratios[i] > footprint_ratios[i - 1]) {
          throw Error(where + "footprint_ratios must not increase");
        }
      }
    }
  }
  if (kind == ScenarioKind::rot_symmetric) {
    if (symmetry != "square" && symmetry != "circular") throw Error(where + "symmetry must be square or circular");
    if (dims.x() != dims.y()) throw Error(where + "rot_symmetric needs a square footprint");
  }
  if (kind == ScenarioKind::unambiguous) {
    if (!(noise >= 0.0)) throw Error(where + "noise must be non-negative");
    if (noise >= 0.5 * dims.minCoeff()) throw Error(where + "noise must stay below half the smallest dimension");
  }
  const int n = num_classes();
  if (!probs.empty()) {
    if (static_cast<int>(probs.size()) != n) throw Error(where + "probs length does not match the classes");
    double total = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw Error(where + "probs must be non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(where + "probs must sum to 1");
  }
  for (const auto& s : skus) {
    if (!(s.minCoeff() > 0.0)) throw Error(where + "SKU dims must be positive");
  }
}

BoxParams class_box(const ScenarioSpec& s, int latent) {
  if (latent < 0 || latent >= s.num_classes()) throw Error("class index out of range");
  switch (s.kind) {
    case ScenarioKind::stacked_bin:
      return hanging_box(s, Vec3(s.dims.x(), s.dims.y(), s.dims.z() / (latent + 1)), s.yaw);
    case ScenarioKind::nested_ordered: {
      const double f = s.footprint_ratios.empty() ? 1.0 : s.footprint_ratios[latent];
      return hanging_box(s, Vec3(f * s.dims.x(), f * s.dims.y(), s.ratios[latent] * s.dims.z()), s.yaw);
    }
    case ScenarioKind::rot_symmetric:
      return hanging_box(s, s.dims, s.yaw + latent * 0.5 * std::numbers::pi);
    case ScenarioKind::unambiguous:
      break;
  }
  throw Error("scenario kind has no classes");
}

std::shared_ptr<const OrderedAnalytic> latent_distribution(const ScenarioSpec& spec, const BoxSpace& space) {
  if (spec.kind != ScenarioKind::stacked_bin && spec.kind != ScenarioKind::nested_ordered) {
    throw Error("no analytic form");
  }
  spec.validate();
  const auto probs = spec.class_probs();
  std::vector<BoxParams> boxes;
  std::vector<double> p;
  for (int i = spec.num_classes() - 1; i >= 0; --i) {
    boxes.push_back(class_box(spec, i));
    p.push_back(probs[i]);
  }
  return std::make_shared<const OrderedAnalytic>(space, std::move(boxes), std::move(p));
}

namespace {

SceneRecord draw_record(const ScenarioSpec& s, int context, Rng& rng) {
  SceneRecord r;
  r.context = context;
  r.scenario = s.name;
  r.kind = s.kind;
  r.skus = s.skus;
  switch (s.kind) {
    case ScenarioKind::stacked_bin:
    case ScenarioKind::nested_ordered: {
      r.latent = sample_categorical(s.class_probs(), rng);
      r.gt = class_box(s, r.latent);
      r.points = top_face_stub(class_box(s, s.num_classes() - 1), false);
      break;
    }
    case ScenarioKind::rot_symmetric: {
      if (s.symmetry == "circular") {
        r.gt = hanging_box(s, s.dims, uniform(rng, -std::numbers::pi, std::numbers::pi));
        r.points = top_face_stub(hanging_box(s, s.dims, 0.0), true);
      } else {
        r.latent = sample_categorical(s.class_probs(), rng);
        r.gt = class_box(s, r.latent);
        r.points = top_face_stub(class_box(s, 0), false);
      }
      break;
    }
    case ScenarioKind::unambiguous: {
      Vec3 dims = s.dims;
      for (int i = 0; i < 3; ++i) dims[i] += uniform(rng, -s.noise, s.noise);
      BoxParams b = hanging_box(s, dims, s.yaw);
      for (int i = 0; i < 3; ++i) b.center[i] += uniform(rng, -s.noise, s.noise);
      r.gt = b;
      r.points = top_face_stub(b, false);
      break;
    }
  }
  return r;
}

}  // namespace

std::vector<SceneRecord> generate(std::span<const ScenarioSpec> specs, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error("generate needs n >= 1");
  if (specs.empty()) throw Error("generate needs at least one scenario");
  std::vector<double> weights;
  for (const auto& s : specs) {
    s.validate();
    weights.push_back(s.weight);
  }
  std::vector<SceneRecord> out;
  out.reserve(n);
  const int width = static_cast<int>(std::to_string(n - 1).size());
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    const int which = specs.size() == 1 ? 0 : sample_categorical(weights, rng);
    const ScenarioSpec& s = specs[which];
    SceneRecord r = draw_record(s, s.context >= 0 ? s.context : which, rng);
    std::string id = std::to_string(i);
    r.id = "scene-" + std::string(width - id.size(), '0') + id;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SceneRecord> generate(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed) {
  return generate(std::span<const ScenarioSpec>(&spec, 1), n, seed);
}

Json to_json(const ScenarioSpec& s) {
  Json skus = Json::array();
  for (const auto& d : s.skus) skus.push_back(to_json(d));
  return {{"name", s.name},
          {"kind", std::string(to_string(s.kind))},
          {"context", s.context},
          {"dims", to_json(s.dims)},
          {"top_center", to_json(s.top_center)},
          {"yaw", s.yaw},
          {"levels", s.levels},
          {"ratios", s.ratios},
          {"footprint_ratios", s.footprint_ratios},
          {"probs", s.probs},
          {"symmetry", s.symmetry},
          {"noise", s.noise},
          {"skus", skus},
          {"weight", s.weight}};
}

ScenarioSpec scenario_from_json(const Json& j) {
  ScenarioSpec s;
  s.name = j.value("name", std::string());
  s.kind = parse_scenario_kind(j.at("kind").get<std::string>());
  s.context = j.value("context", -1);
  if (j.contains("dims")) s.dims = vec3_from_json(j.at("dims"));
  if (j.contains("top_center")) s.top_center = vec3_from_json(j.at("top_center"));
  s.yaw = j.value("yaw", 0.0);
  s.levels = j.value("levels", 4);
  s.ratios = j.value("ratios", std::vector<double>{});
  s.footprint_ratios = j.value("footprint_ratios", std::vector<double>{});
  s.probs = j.value("probs", std::vector<double>{});
  s.symmetry = j.value("symmetry", std::string("square"));
  s.noise = j.value("noise", 0.0);
  if (j.contains("skus")) {
    for (const auto& d : j.at("skus")) s.skus.push_back(vec3_from_json(d));
  }
  s.weight = j.value("weight", 1.0);
  s.validate();
  return s;
}

std::vector<ScenarioSpec> scenarios_from_json(const Json& j) {
  check_schema(j, "scenario file");
  std::vector<ScenarioSpec> out;
  for (const auto& s : j.at("scenarios")) out.push_back(scenario_from_json(s));
  if (out.empty()) throw Error("scenario file lists no scenarios");
  return out;
}

Json to_json(const SceneRecord& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) pts.push_back(to_json(p));
  Json skus = Json::array();
  for (const auto& d : r.skus) skus.push_back(to_json(d));
  return {{"schema_version", kSchemaVersion},
          {"id", r.id},
          {"context", r.context},
          {"scenario", r.scenario},
          {"kind", std::string(to_string(r.kind))},
          {"latent", r.latent},
          {"gt", to_json(r.gt)},
          {"points", pts},
          {"skus", skus}};
}

SceneRecord record_from_json(const Json& j) {
  check_schema(j, "scene record");
  SceneRecord r;
  r.id = j.at("id").get<std::string>();
  r.context = j.at("context").get<int>();
  if (r.context < 0) throw Error("record " + r.id + ": negative context id");
  r.scenario = j.value("scenario", std::string());
  r.kind = parse_scenario_kind(j.at("kind").get<std::string>());
  r.latent = j.value("latent", -1);
  r.gt = box_from_json(j.at("gt"));
  for (const auto& p : j.at("points")) {
    r.points.push_back(vec3_from_json(p));
    if (!on_box(r.gt, r.points.back())) throw Error("record " + r.id + ": point outside the gt box");
  }
  if (j.contains("skus")) {
    for (const auto& d : j.at("skus")) r.skus.push_back(vec3_from_json(d));
  }
  return r;
}

void write_jsonl(const std::filesystem::path& path, std::span<const SceneRecord> records) {
  std::ostringstream out;
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  write_file_atomic(path, out.str());
}

std::vector<SceneRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<SceneRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace boxcast
