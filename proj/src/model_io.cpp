#include <fstream>
#include <sstream>

#include "boxcast/error.hpp"
#include "boxcast/json_io.hpp"

namespace boxcast {

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json to_json(const BoxParams& box) {
  return {{"dims", to_json(box.dims)},
          {"center", to_json(box.center)},
          {"euler_zyx", Json::array({box.rot.yaw, box.rot.pitch, box.rot.roll})}};
}

BoxParams box_from_json(const Json& j) {
  if (!j.is_object()) throw Error("box must be a JSON object");
  BoxParams b;
  b.dims = vec3_from_json(j.at("dims"));
  b.center = vec3_from_json(j.at("center"));
  const Vec3 e = vec3_from_json(j.at("euler_zyx"));
  b.rot = {e.x(), e.y(), e.z()};
  validate(b);
  return b;
}

Json to_json(const Normalizer& n) {
  return {{"mode", std::string(to_string(n.mode))}, {"scale", to_json(n.scale)}, {"offset", to_json(n.offset)}};
}

Normalizer normalizer_from_json(const Json& j) {
  Normalizer n;
  n.mode = parse_normalizer_mode(j.at("mode").get<std::string>());
  n.scale = vec3_from_json(j.at("scale"));
  n.offset = vec3_from_json(j.at("offset"));
  for (int i = 0; i < 3; ++i) {
    if (!(n.scale[i] >= kScaleFloor)) throw Error("normalizer scale below floor");
  }
  return n;
}

Json to_json(const Quantizer& q) {
  Json ranges = Json::array();
  for (const auto& r : q.ranges) ranges.push_back(Json::array({r.lo, r.hi}));
  return {{"bins", q.bins}, {"ranges", ranges}};
}

Quantizer quantizer_from_json(const Json& j) {
  Quantizer q;
  q.bins = j.at("bins").get<int>();
  const Json& ranges = j.at("ranges");
  if (!ranges.is_array() || ranges.size() != kNumParams) throw Error("quantizer needs 9 ranges");
  for (int i = 0; i < kNumParams; ++i) q.ranges[i] = {ranges[i].at(0).get<double>(), ranges[i].at(1).get<double>()};
  q.validate();
  return q;
}

Json to_json(const BoxSpace& s) {
  return {{"quantizer", to_json(s.quantizer)},
          {"normalizer", to_json(s.normalizer)},
          {"symmetry", std::string(to_string(s.symmetry))},
          {"param_order", s.order}};
}

BoxSpace space_from_json(const Json& j) {
  BoxSpace s;
  s.quantizer = quantizer_from_json(j.at("quantizer"));
  s.normalizer = normalizer_from_json(j.at("normalizer"));
  s.symmetry = parse_symmetry_mode(j.at("symmetry").get<std::string>());
  const auto order = j.at("param_order").get<std::vector<int>>();
  if (order.size() != kNumParams) throw Error("param_order needs 9 entries");
  std::copy(order.begin(), order.end(), s.order.begin());
  if (!is_permutation(s.order)) throw Error("param_order is not a permutation of the 9 parameters");
  return s;
}

void check_schema(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("schema_version")) throw Error(what + ": missing schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kSchemaVersion) {
    throw Error(what + ": unsupported schema_version " + std::to_string(v));
  }
}

namespace {

Json row_to_json(const TabularChain::Row& row) {
  Json counts = Json::array();
  for (const auto& [bin, c] : row.counts) counts.push_back(Json::array({bin, c}));
  return {{"total", row.total}, {"counts", counts}};
}

TabularChain::Row row_from_json(const Json& j, int bins) {
  TabularChain::Row row;
  row.total = j.at("total").get<double>();
  int prev = -1;
  for (const auto& e : j.at("counts")) {
    const int bin = e.at(0).get<int>();
    if (bin <= prev || bin >= bins) throw Error("tabular row bins must be increasing and in range");
    prev = bin;
    row.counts.emplace_back(bin, e.at(1).get<double>());
  }
  return row;
}

Json tabular_body(const TabularChain& t) {
  Json tables = Json::array();
  for (int c = 0; c < t.num_contexts(); ++c) {
    for (int s = 0; s < kNumParams; ++s) {
      const auto& st = t.table(c, s);
      Json rows = Json::array();
      for (const auto& [key, row] : st.rows) {
        Json r = row_to_json(row);
        r["key"] = key;
        rows.push_back(std::move(r));
      }
      tables.push_back({{"context", c}, {"step", s}, {"marginal", row_to_json(st.marginal)}, {"rows", rows}});
    }
  }
  return {{"alpha", t.alpha()}, {"prefix_buckets", t.prefix_buckets()}, {"tables", tables}};
}

DistributionPtr tabular_from(const BoxSpace& space, int num_contexts, const Json& body) {
  const Json& tables = body.at("tables");
  if (tables.size() != static_cast<std::size_t>(num_contexts) * kNumParams) {
    throw Error("tabular model: table count does not match contexts x steps");
  }
  std::vector<TabularChain::StepTable> out(tables.size());
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const Json& t = tables[i];
    if (t.at("context").get<int>() * kNumParams + t.at("step").get<int>() != static_cast<int>(i)) {
      throw Error("tabular model: tables out of order");
    }
    out[i].marginal = row_from_json(t.at("marginal"), space.quantizer.bins);
    for (const auto& r : t.at("rows")) {
      out[i].rows.emplace(r.at("key").get<TabularChain::PrefixKey>(), row_from_json(r, space.quantizer.bins));
    }
  }
  return std::make_shared<TabularChain>(space, num_contexts, body.at("alpha").get<double>(),
                                        body.at("prefix_buckets").get<int>(), std::move(out));
}

Json gaussian_body(const GaussianBaseline& g) {
  Json ctx = Json::array();
  for (int c = 0; c < g.num_contexts(); ++c) {
    ctx.push_back({{"mean", g.params(c).mean}, {"log_var", g.params(c).log_var}});
  }
  return {{"contexts", ctx}};
}

DistributionPtr gaussian_from(const BoxSpace& space, int num_contexts, const Json& body) {
  std::vector<GaussianBaseline::Params> params;
  for (const auto& c : body.at("contexts")) {
    GaussianBaseline::Params p;
    const auto mean = c.at("mean").get<std::vector<double>>();
    const auto lv = c.at("log_var").get<std::vector<double>>();
    if (mean.size() != kNumParams || lv.size() != kNumParams) throw Error("gaussian model: need 9 means and log variances");
    std::copy(mean.begin(), mean.end(), p.mean.begin());
    std::copy(lv.begin(), lv.end(), p.log_var.begin());
    params.push_back(p);
  }
  if (static_cast<int>(params.size()) != num_contexts) throw Error("gaussian model: context count mismatch");
  return std::make_shared<GaussianBaseline>(space, std::move(params));
}

}  // namespace

Json model_to_json(const BoxDistribution& d) {
  Json j = {{"schema_version", kSchemaVersion},
            {"backend", d.backend()},
            {"space", to_json(d.space())},
            {"num_contexts", d.num_contexts()}};
  if (const auto* t = dynamic_cast<const TabularChain*>(&d)) {
    j["body"] = tabular_body(*t);
  } else if (const auto* g = dynamic_cast<const GaussianBaseline*>(&d)) {
    j["body"] = gaussian_body(*g);
  } else if (const auto* o = dynamic_cast<const OrderedAnalytic*>(&d)) {
    Json boxes = Json::array();
    for (const auto& b : o->boxes()) boxes.push_back(to_json(b));
    j["body"] = {{"boxes", boxes}, {"probs", o->probs()}};
  } else {
    throw Error("backend '" + d.backend() + "' cannot be serialized");
  }
  return j;
}

DistributionPtr model_from_json(const Json& j) {
  check_schema(j, "model");
  const std::string backend = j.at("backend").get<std::string>();
  const BoxSpace space = space_from_json(j.at("space"));
  const int num_contexts = j.at("num_contexts").get<int>();
  const Json& body = j.at("body");
  if (backend == "tabular") return tabular_from(space, num_contexts, body);
  if (backend == "gaussian") return gaussian_from(space, num_contexts, body);
  if (backend == "ordered") {
    std::vector<BoxParams> boxes;
    for (const auto& b : body.at("boxes")) boxes.push_back(box_from_json(b));
    return std::make_shared<OrderedAnalytic>(space, std::move(boxes), body.at("probs").get<std::vector<double>>());
  }
  throw Error("unknown model backend '" + backend + "'");
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename onto " + path.string());
  }
}

void save_model(const BoxDistribution& d, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(d).dump() + "\n");
}

DistributionPtr load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

}  // namespace boxcast
