#include "fransim/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "fransim/error.hpp"

namespace fransim {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Typed, path-aware access to one JSON object; rejects unknown keys.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  double number(std::string_view key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(join(path_, key), "expected a number");
    return v->get<double>();
  }

  long long integer(std::string_view key, long long fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number_integer()) return v->get<long long>();
    if (v->is_number_float()) {
      double d = v->get<double>();
      if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    fail(join(path_, key), "expected an integer");
  }

  std::string text(std::string_view key, std::string fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(join(path_, key), "expected a string");
    return v->get<std::string>();
  }

  const json* child(std::string_view key) { return find(key); }

  std::string path(std::string_view key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [k, _] : node_.items()) {
      if (!seen_.count(k)) fail(join(path_, k), "unknown key");
    }
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& msg) {
    throw ConfigError(field + ": " + msg);
  }

 private:
  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = node_.find(std::string(key));
    return it == node_.end() ? nullptr : &*it;
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

WaveplateKind parse_kind(const std::string& s, const std::string& field) {
  if (s == "half") return WaveplateKind::kHalf;
  if (s == "quarter") return WaveplateKind::kQuarter;
  Reader::fail(field, "expected \"half\" or \"quarter\", got \"" + s + "\"");
}

Arm parse_arm(const std::string& s, const std::string& field) {
  if (s == "A") return Arm::kA;
  if (s == "B") return Arm::kB;
  Reader::fail(field, "expected \"A\" or \"B\", got \"" + s + "\"");
}

std::vector<WaveplateSpec> parse_plates(const json* node, const std::string& path) {
  std::vector<WaveplateSpec> plates;
  if (!node) return plates;
  if (!node->is_array()) Reader::fail(path, "expected an array of waveplates");
  for (std::size_t i = 0; i < node->size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    Reader r((*node)[i], p);
    WaveplateSpec w;
    w.kind = parse_kind(r.text("kind", "half"), r.path("kind"));
    w.angle = r.number("angle_deg", 0.0) * kDeg;
    r.finish();
    plates.push_back(w);
  }
  return plates;
}

SourceConfig parse_source(const json* node) {
  SourceConfig s;
  if (!node) return s;
  Reader r(*node, "source");
  s.balance_p = r.number("balance_p", s.balance_p);
  s.franson_visibility = r.number("franson_visibility", s.franson_visibility);
  s.sum_phase = r.number("sum_phase_deg", 0.0) * kDeg;
  const std::string input = r.text("pol_input", "bell_p");
  if (input == "bell_p") {
    s.pol_input = PolInput::kBellP;
  } else if (input == "pure_HV") {
    s.pol_input = PolInput::kPureHV;
  } else if (input == "pure_VH") {
    s.pol_input = PolInput::kPureVH;
  } else {
    Reader::fail("source.pol_input", "expected bell_p, pure_HV or pure_VH, got \"" + input + "\"");
  }
  r.finish();
  return s;
}

NoisyChannelSpec parse_channel(const json* node) {
  NoisyChannelSpec spec;
  if (!node) return spec;
  Reader r(*node, "channel");
  const json* stages = r.child("stages");
  r.finish();
  if (!stages) return spec;
  if (!stages->is_array()) Reader::fail("channel.stages", "expected an array");
  for (std::size_t i = 0; i < stages->size(); ++i) {
    const std::string p = "channel.stages[" + std::to_string(i) + "]";
    Reader s((*stages)[i], p);
    const std::string type = s.text("type", "");
    if (type == "coherent") {
      CoherentStage c;
      c.arm_a = parse_plates(s.child("arm_a"), s.path("arm_a"));
      c.arm_b = parse_plates(s.child("arm_b"), s.path("arm_b"));
      spec.stages.emplace_back(std::move(c));
    } else if (type == "rotating_plate") {
      RotatingPlateStage rp;
      rp.arm = parse_arm(s.text("arm", "A"), s.path("arm"));
      rp.kind = parse_kind(s.text("kind", "half"), s.path("kind"));
      rp.steps = static_cast<int>(s.integer("steps", rp.steps));
      spec.stages.emplace_back(rp);
    } else {
      Reader::fail(s.path("type"), "expected \"coherent\" or \"rotating_plate\"");
    }
    s.finish();
  }
  return spec;
}

InterferometerConfig parse_interferometer(const json* node) {
  InterferometerConfig c;
  if (!node) return c;
  Reader r(*node, "interferometer");
  c.phase_a = r.number("phase_a_deg", 0.0) * kDeg;
  c.phase_b = r.number("phase_b_deg", 0.0) * kDeg;
  c.delta_t_ns = r.number("delta_t_ns", c.delta_t_ns);
  c.coincidence_window_ns = r.number("coincidence_window_ns", c.coincidence_window_ns);
  c.phase_jitter_sigma = r.number("phase_jitter_sigma_deg", 0.0) * kDeg;
  r.finish();
  return c;
}

TomographyConfig parse_tomography(const json* node) {
  TomographyConfig t;
  if (!node) return t;
  Reader r(*node, "tomography");
  t.pairs_per_setting = r.number("pairs_per_setting", t.pairs_per_setting);
  const std::string method = r.text("method", "mle");
  if (method == "mle") {
    t.method = ReconstructionMethod::kMle;
  } else if (method == "linear") {
    t.method = ReconstructionMethod::kLinear;
  } else {
    Reader::fail("tomography.method", "expected \"mle\" or \"linear\"");
  }
  t.n_mc_samples = static_cast<int>(r.integer("n_mc_samples", t.n_mc_samples));
  const std::string mode = r.text("mode", "sampled");
  if (mode == "sampled") {
    t.mode = CountMode::kSampled;
  } else if (mode == "analytic") {
    t.mode = CountMode::kAnalytic;
  } else {
    Reader::fail("tomography.mode", "expected \"sampled\" or \"analytic\"");
  }
  r.finish();
  return t;
}

std::optional<SweepConfig> parse_sweep(const json* node) {
  if (!node || node->is_null()) return std::nullopt;
  Reader r(*node, "sweep");
  SweepConfig s;
  const std::string param = r.text("parameter", "p");
  if (param == "p") {
    s.parameter = SweepParameter::kP;
  } else if (param == "visibility") {
    s.parameter = SweepParameter::kVisibility;
  } else if (param == "sum_phase") {
    s.parameter = SweepParameter::kSumPhase;
  } else {
    Reader::fail("sweep.parameter", "expected p, visibility or sum_phase");
  }
  const json* values = r.child("values");
  r.finish();
  if (!values || !values->is_array()) Reader::fail("sweep.values", "expected an array of numbers");
  const double scale = s.parameter == SweepParameter::kSumPhase ? kDeg : 1.0;
  for (std::size_t i = 0; i < values->size(); ++i) {
    if (!(*values)[i].is_number()) {
      Reader::fail("sweep.values[" + std::to_string(i) + "]", "expected a number");
    }
    s.values.push_back((*values)[i].get<double>() * scale);
  }
  return s;
}

json plates_json(const std::vector<WaveplateSpec>& plates) {
  json arr = json::array();
  for (const auto& w : plates) {
    arr.push_back({{"kind", std::string(to_string(w.kind))}, {"angle_deg", w.angle / kDeg}});
  }
  return arr;
}

}  // namespace

std::string_view to_string(CountMode mode) {
  return mode == CountMode::kSampled ? "sampled" : "analytic";
}

std::string_view to_string(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::kP: return "p";
    case SweepParameter::kVisibility: return "visibility";
    case SweepParameter::kSumPhase: return "sum_phase";
  }
  return "?";
}

ExperimentConfig parse_config(const json& tree) {
  Reader r(tree, "");
  ExperimentConfig cfg;
  cfg.source = parse_source(r.child("source"));
  cfg.channel = parse_channel(r.child("channel"));
  cfg.interferometer = parse_interferometer(r.child("interferometer"));
  cfg.tomography = parse_tomography(r.child("tomography"));
  cfg.sweep = parse_sweep(r.child("sweep"));
  const long long seed = r.integer("seed", 1);
  if (seed < 0) Reader::fail("seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.output_dir = r.text("output_dir", cfg.output_dir);
  cfg.threads = static_cast<int>(r.integer("threads", cfg.threads));
  r.finish();
  return cfg;
}

ExperimentConfig parse_config_text(std::string_view text) {
  json tree;
  try {
    tree = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
  return parse_config(tree);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const ExperimentConfig& cfg) {
  json stages = json::array();
  for (const auto& stage : cfg.channel.stages) {
    if (const auto* c = std::get_if<CoherentStage>(&stage)) {
      stages.push_back({{"type", "coherent"},
                        {"arm_a", plates_json(c->arm_a)},
                        {"arm_b", plates_json(c->arm_b)}});
    } else {
      const auto& rp = std::get<RotatingPlateStage>(stage);
      stages.push_back({{"type", "rotating_plate"},
                        {"arm", std::string(to_string(rp.arm))},
                        {"kind", std::string(to_string(rp.kind))},
                        {"steps", rp.steps}});
    }
  }
  json tree = {
      {"source",
       {{"balance_p", cfg.source.balance_p},
        {"franson_visibility", cfg.source.franson_visibility},
        {"sum_phase_deg", cfg.source.sum_phase / kDeg},
        {"pol_input", std::string(to_string(cfg.source.pol_input))}}},
      {"channel", {{"stages", stages}}},
      {"interferometer",
       {{"phase_a_deg", cfg.interferometer.phase_a / kDeg},
        {"phase_b_deg", cfg.interferometer.phase_b / kDeg},
        {"delta_t_ns", cfg.interferometer.delta_t_ns},
        {"coincidence_window_ns", cfg.interferometer.coincidence_window_ns},
        {"phase_jitter_sigma_deg", cfg.interferometer.phase_jitter_sigma / kDeg}}},
      {"tomography",
       {{"pairs_per_setting", cfg.tomography.pairs_per_setting},
        {"method", std::string(to_string(cfg.tomography.method))},
        {"n_mc_samples", cfg.tomography.n_mc_samples},
        {"mode", std::string(to_string(cfg.tomography.mode))}}},
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"threads", cfg.threads},
  };
  if (cfg.sweep) {
    const double scale = cfg.sweep->parameter == SweepParameter::kSumPhase ? 1.0 / kDeg : 1.0;
    json values = json::array();
    for (double v : cfg.sweep->values) values.push_back(v * scale);
    tree["sweep"] = {{"parameter", std::string(to_string(cfg.sweep->parameter))},
                     {"values", values}};
  } else {
    tree["sweep"] = nullptr;
  }
  return tree;
}

std::vector<Diagnostic> validate(const ExperimentConfig& cfg) {
  std::vector<Diagnostic> out;
  auto check = [&](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      out.push_back({field, e.what()});
    }
  };
  check("source", [&] { cfg.source.validate(); });
  check("channel", [&] { cfg.channel.validate(); });
  check("interferometer", [&] { cfg.interferometer.validate(); });
  if (!(cfg.tomography.pairs_per_setting > 0.0) || !std::isfinite(cfg.tomography.pairs_per_setting)) {
    out.push_back({"tomography.pairs_per_setting", "must be positive and finite"});
  }
  if (cfg.tomography.n_mc_samples < 10) {
    out.push_back({"tomography.n_mc_samples", "must be at least 10"});
  }
  if (cfg.threads < 1) out.push_back({"threads", "must be at least 1"});
  if (cfg.sweep) {
    if (cfg.sweep->values.empty()) out.push_back({"sweep.values", "must not be empty"});
    for (std::size_t i = 0; i < cfg.sweep->values.size(); ++i) {
      const double v = cfg.sweep->values[i];
      const std::string field = "sweep.values[" + std::to_string(i) + "]";
      switch (cfg.sweep->parameter) {
        case SweepParameter::kP:
          if (!(v >= 0.0 && v <= 0.5)) out.push_back({field, "balance parameter outside [0, 0.5]"});
          break;
        case SweepParameter::kVisibility:
          if (!(v >= 0.0 && v <= 1.0)) out.push_back({field, "visibility outside [0, 1]"});
          break;
        case SweepParameter::kSumPhase:
          if (!std::isfinite(v)) out.push_back({field, "phase must be finite"});
          break;
      }
    }
  }
  return out;
}

}  // namespace fransim
