#include "ccmqd/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ccmqd {

namespace {

/// Tracks which keys of an object were read and rejects the rest.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError("bad value for key '" + where(key) + "'");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key.empty() ? "config" : key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown key '" + where(key) + "'");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json vector_to_json(const CVector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
  return arr;
}

CVector vector_from_json(const Json& j) {
  CVector v(Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(Index(i)) = Complex(j[i].at(0).get<double>(), j[i].at(1).get<double>());
  return v;
}

std::string parse_string(StrictObject& o, const char* key, std::string fallback) {
  o.get(key, fallback);
  return fallback;
}

}  // namespace

Json matrix_to_json(const CMatrix& m) {
  Json data = Json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

CMatrix matrix_from_json(const Json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != std::size_t(rows * cols)) throw DimensionError("matrix JSON: size mismatch");
  CMatrix m(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c, ++k) m(r, c) = Complex(data[k].at(0).get<double>(), data[k].at(1).get<double>());
  return m;
}

Json channel_to_json(const Channel& ch, NoiseFamily family, std::uint64_t seed) {
  Json j{{"dim", ch.dim()}, {"family", to_string(family)}, {"seed", seed}, {"repeats", ch.repeats()}};
  Json ops = Json::array();
  if (const DepolarizingMap* dep = ch.depolarizing()) {
    j["p"] = dep->strength();
  } else {
    for (const CMatrix& k : ch.kraus()->ops()) ops.push_back(matrix_to_json(k));
  }
  j["ops"] = std::move(ops);
  return j;
}

Channel channel_from_json(const Json& j) {
  const Index dim = j.at("dim").get<Index>();
  if (j.contains("p")) return Channel(DepolarizingMap(dim, j.at("p").get<double>()));
  std::vector<CMatrix> ops;
  for (const Json& o : j.at("ops")) ops.push_back(matrix_from_json(o));
  return Channel(KrausChannel(std::move(ops)), j.value("repeats", 1));
}

Json model_to_json(const BackwardModel& model) {
  Json blocks = Json::array();
  for (const StiefelPoint& b : model.blocks) blocks.push_back(matrix_to_json(b.kappa()));
  return {{"L_b", model.depth()}, {"K_b", model.kraus_count}, {"dim", model.dim}, {"blocks", std::move(blocks)}};
}

BackwardModel model_from_json(const Json& j) {
  BackwardModel model;
  model.dim = j.at("dim").get<Index>();
  model.kraus_count = j.at("K_b").get<int>();
  for (const Json& b : j.at("blocks")) model.blocks.emplace_back(matrix_from_json(b), model.dim);
  if (model.depth() != j.at("L_b").get<int>()) throw DimensionError("model JSON: block count does not match L_b");
  return model;
}

Json train_config_to_json(const TrainConfig& c) {
  const NoiseSchedule& s = c.schedule;
  return {
      {"n_qubits", c.n_qubits},
      {"target", to_string(c.target)},
      {"forward",
       {{"family", to_string(s.family)},
        {"L_f", s.depth},
        {"K_f", s.kraus_count},
        {"p_max", s.p_max},
        {"lindblad_gamma", s.lindblad_gamma},
        {"lindblad_omega", s.lindblad_omega},
        {"lindblad_dt", s.lindblad_dt},
        {"lindblad_substeps", s.lindblad_substeps}}},
      {"backward", {{"L_b", c.backward_depth}, {"K_b", c.backward_kraus}, {"init", to_string(c.init)}}},
      {"strategy", to_string(c.strategy)},
      {"loss",
       {{"kind", to_string(c.loss.kind)},
        {"lambda", c.loss.lambda},
        {"alpha", c.loss.alpha},
        {"form", to_string(c.loss.form)}}},
      {"optimizer", {{"max_iters", c.max_iters}, {"convergence_eps", c.convergence_eps}, {"tau0", c.tau0}}},
      {"seeds", c.seeds},
  };
}

namespace {

void parse_train_fields(StrictObject& o, TrainConfig& c) {
  o.get("n_qubits", c.n_qubits);
  c.target = target_kind_from_string(parse_string(o, "target", to_string(c.target)));
  c.strategy = strategy_from_string(parse_string(o, "strategy", to_string(c.strategy)));
  o.get("seeds", c.seeds);

  if (const Json* f = o.child("forward")) {
    StrictObject fo(*f, o.where("forward"));
    NoiseSchedule& s = c.schedule;
    s.family = noise_family_from_string(parse_string(fo, "family", to_string(s.family)));
    fo.get("L_f", s.depth);
    fo.get("K_f", s.kraus_count);
    fo.get("p_max", s.p_max);
    fo.get("lindblad_gamma", s.lindblad_gamma);
    fo.get("lindblad_omega", s.lindblad_omega);
    fo.get("lindblad_dt", s.lindblad_dt);
    fo.get("lindblad_substeps", s.lindblad_substeps);
    fo.finish();
  }
  if (const Json* b = o.child("backward")) {
    StrictObject bo(*b, o.where("backward"));
    bo.get("L_b", c.backward_depth);
    bo.get("K_b", c.backward_kraus);
    c.init = init_kind_from_string(parse_string(bo, "init", to_string(c.init)));
    bo.finish();
  }
  if (const Json* l = o.child("loss")) {
    StrictObject lo(*l, o.where("loss"));
    c.loss.kind = loss_kind_from_string(parse_string(lo, "kind", to_string(c.loss.kind)));
    lo.get("lambda", c.loss.lambda);
    lo.get("alpha", c.loss.alpha);
    c.loss.form = loss_form_from_string(parse_string(lo, "form", to_string(c.loss.form)));
    lo.finish();
  }
  if (const Json* p = o.child("optimizer")) {
    StrictObject po(*p, o.where("optimizer"));
    po.get("max_iters", c.max_iters);
    po.get("convergence_eps", c.convergence_eps);
    po.get("tau0", c.tau0);
    po.finish();
  }
}

void parse_experiment_fields(StrictObject& o, ExperimentConfig& cfg) {
  parse_train_fields(o, cfg.train);
  o.get("output_dir", cfg.output_dir);
  o.get("note", cfg.note);
  if (const Json* e = o.child("export")) {
    StrictObject eo(*e, o.where("export"));
    eo.get("bloch", cfg.export_bloch);
    eo.get("curves", cfg.export_curves);
    eo.get("channels", cfg.export_channels);
    eo.finish();
  }
}

void check_schema(StrictObject& o) {
  int version = -1;
  o.get("schema_version", version);
  if (version != kSchemaVersion)
    throw ConfigError("key 'schema_version' must be " + std::to_string(kSchemaVersion) + " (got " +
                      std::to_string(version) + ")");
}

}  // namespace

ExperimentConfig experiment_from_json(const Json& j) {
  StrictObject o(j, "");
  check_schema(o);
  ExperimentConfig cfg;
  parse_experiment_fields(o, cfg);
  o.finish();
  cfg.train.validate();
  return cfg;
}

Json experiment_to_json(const ExperimentConfig& cfg) {
  Json j = train_config_to_json(cfg.train);
  j["schema_version"] = kSchemaVersion;
  j["output_dir"] = cfg.output_dir;
  j["note"] = cfg.note;
  j["export"] = {{"bloch", cfg.export_bloch}, {"curves", cfg.export_curves}, {"channels", cfg.export_channels}};
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

ExperimentConfig load_experiment(const std::filesystem::path& path) { return experiment_from_json(read_json_file(path)); }

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string config_hash(const TrainConfig& cfg) {
  const std::string text = train_config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

Json run_result_to_json(const RunResult& run) {
  Json seeds = Json::array();
  for (const SeedResult& s : run.seeds) {
    Json js{{"seed", s.seed},
            {"forward_seed", s.forward_seed},
            {"failed", s.failed},
            {"error", s.error},
            {"converged", s.converged},
            {"final_fidelity", s.final_fidelity},
            {"iterations", s.iterations},
            {"reprojections", s.reprojections},
            {"loss_curve", s.loss_curve},
            {"fidelity_curves", s.fidelity_curves},
            {"step_fidelities", s.step_fidelities},
            {"wall_time", s.wall_time}};
    if (s.target) js["target"] = vector_to_json(s.target->amplitudes());
    Json fwd = Json::array(), bwd = Json::array();
    for (const DensityMatrix& r : s.forward_states) fwd.push_back(matrix_to_json(r.matrix()));
    for (const DensityMatrix& r : s.backward_states) bwd.push_back(matrix_to_json(r.matrix()));
    js["forward_states"] = std::move(fwd);
    js["backward_states"] = std::move(bwd);
    if (s.model) js["model"] = model_to_json(*s.model);
    seeds.push_back(std::move(js));
  }
  return {{"schema_version", kSchemaVersion},
          {"config", train_config_to_json(run.config)},
          {"config_hash", config_hash(run.config)},
          {"mean", run.mean},
          {"std", run.std},
          {"single_sample", run.single_sample},
          {"partial", run.partial},
          {"wall_time", run.wall_time},
          {"seeds", std::move(seeds)}};
}

RunResult run_result_from_json(const Json& j) {
  if (j.value("schema_version", -1) != kSchemaVersion) throw ConfigError("result: unsupported schema_version");
  RunResult run;
  {
    StrictObject o(j.at("config"), "config");
    parse_train_fields(o, run.config);
    o.finish();
  }
  run.mean = j.at("mean").get<double>();
  run.std = j.at("std").get<double>();
  run.single_sample = j.at("single_sample").get<bool>();
  run.partial = j.at("partial").get<bool>();
  run.wall_time = j.at("wall_time").get<double>();
  for (const Json& js : j.at("seeds")) {
    SeedResult s;
    s.seed = js.at("seed").get<std::uint64_t>();
    s.forward_seed = js.at("forward_seed").get<std::uint64_t>();
    s.failed = js.at("failed").get<bool>();
    s.error = js.at("error").get<std::string>();
    s.converged = js.at("converged").get<bool>();
    s.final_fidelity = js.at("final_fidelity").get<double>();
    s.iterations = js.at("iterations").get<int>();
    s.reprojections = js.at("reprojections").get<int>();
    s.loss_curve = js.at("loss_curve").get<std::vector<double>>();
    s.fidelity_curves = js.at("fidelity_curves").get<std::vector<std::vector<double>>>();
    s.step_fidelities = js.at("step_fidelities").get<std::vector<double>>();
    s.wall_time = js.at("wall_time").get<double>();
    if (js.contains("target")) s.target = PureState::from_amplitudes(vector_from_json(js.at("target")));
    for (const Json& m : js.at("forward_states")) s.forward_states.push_back(DensityMatrix::from_matrix(matrix_from_json(m)));
    for (const Json& m : js.at("backward_states")) s.backward_states.push_back(DensityMatrix::from_matrix(matrix_from_json(m)));
    if (js.contains("model")) s.model = model_from_json(js.at("model"));
    run.seeds.push_back(std::move(s));
  }
  return run;
}

namespace {

const std::vector<std::string> kGridKeys{"qubits", "L_f", "K_f", "L_b", "K_b", "lambda", "family", "strategy"};

void apply_override(ExperimentConfig& cfg, const std::string& key, const Json& v) {
  TrainConfig& c = cfg.train;
  try {
    if (key == "qubits") c.n_qubits = v.get<int>();
    else if (key == "L_f") c.schedule.depth = v.get<int>();
    else if (key == "K_f") c.schedule.kraus_count = v.get<int>();
    else if (key == "L_b") c.backward_depth = v.get<int>();
    else if (key == "K_b") c.backward_kraus = v.get<int>();
    else if (key == "lambda") c.loss.lambda = v.get<double>();
    else if (key == "family") c.schedule.family = noise_family_from_string(v.get<std::string>());
    else if (key == "strategy") c.strategy = strategy_from_string(v.get<std::string>());
    else throw ConfigError("unknown key '" + key + "'");
  } catch (const Json::exception&) {
    throw ConfigError("bad value for key '" + key + "'");
  }
}

std::string cell_label(const Json& overrides) {
  std::string label;
  for (const std::string& k : kGridKeys) {
    if (!overrides.contains(k)) continue;
    if (!label.empty()) label += ",";
    const Json& v = overrides.at(k);
    label += k + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
  }
  return label;
}

}  // namespace

std::vector<SweepCell> expand_sweep(const Json& j) {
  StrictObject o(j, "");
  check_schema(o);
  ExperimentConfig base;
  if (const Json* b = o.child("base")) {
    StrictObject bo(*b, "base");
    parse_experiment_fields(bo, base);
    bo.finish();
  }
  std::string note;
  o.get("note", note);
  if (!note.empty()) base.note = note;

  std::vector<Json> overrides;
  const Json* grid = o.child("grid");
  const Json* cells = o.child("cells");
  o.finish();
  if ((grid != nullptr) == (cells != nullptr)) throw ConfigError("sweep needs exactly one of 'grid' or 'cells'");

  if (grid) {
    if (!grid->is_object()) throw ConfigError("'grid' must be an object");
    for (const auto& [key, _] : grid->items())
      if (std::find(kGridKeys.begin(), kGridKeys.end(), key) == kGridKeys.end())
        throw ConfigError("unknown key 'grid." + key + "'");
    overrides.push_back(Json::object());
    for (const std::string& key : kGridKeys) {
      if (!grid->contains(key)) continue;
      const Json& values = grid->at(key);
      if (!values.is_array() || values.empty()) throw ConfigError("grid key '" + key + "' needs a non-empty list");
      std::vector<Json> next;
      for (const Json& partial : overrides)
        for (const Json& v : values) {
          Json cell = partial;
          cell[key] = v;
          next.push_back(std::move(cell));
        }
      overrides = std::move(next);
    }
    if (grid->empty()) overrides.clear();
  } else {
    if (!cells->is_array()) throw ConfigError("'cells' must be a list");
    for (const Json& c : *cells) {
      if (!c.is_object()) throw ConfigError("each cell must be an object");
      overrides.push_back(c);
    }
  }
  if (overrides.empty()) throw ConfigError("sweep has no cells");

  std::vector<SweepCell> out;
  for (const Json& ov : overrides) {
    SweepCell cell{base, cell_label(ov)};
    for (const auto& [key, v] : ov.items()) apply_override(cell.config, key, v);
    cell.config.train.validate();
    out.push_back(std::move(cell));
  }
  return out;
}

}  // namespace ccmqd
