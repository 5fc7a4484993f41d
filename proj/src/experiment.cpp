#include "fransim/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <sstream>
#include <utility>

#include "fransim/error.hpp"
#include "fransim/random.hpp"

namespace fransim {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const std::vector<double>& default_p_values() {
  static const std::vector<double> values = {0.0, 0.1, 0.25, 0.4, 0.5};
  return values;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void require_valid(const ExperimentConfig& cfg) {
  auto diags = validate(cfg);
  if (!diags.empty()) throw ConfigError(diags.front().field + ": " + diags.front().message);
}

json metric_json(const Metric& m) { return {{"value", m.value}, {"sigma", m.sigma}}; }

json model_json(const PointMetrics& m) {
  return {{"fidelity", m.fidelity},
          {"concurrence", m.concurrence},
          {"purity", m.purity},
          {"s_value", m.s_value}};
}

struct BranchResult {
  DensityMatrix truth;
  TomographyResult tomo;
  double weight;
};

json branch_json(const BranchResult& b) {
  const auto& m = b.tomo.metrics;
  const auto& r = b.tomo.reconstruction;
  return {{"fidelity", metric_json(m.fidelity)},
          {"concurrence", metric_json(m.concurrence)},
          {"purity", metric_json(m.purity)},
          {"s_value", metric_json(m.s_value)},
          {"model", model_json(state_metrics(b.truth))},
          {"postselection_weight", b.weight},
          {"reconstruction",
           {{"method", std::string(to_string(r.method))},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"loglike", r.loglike},
            {"probability_floor", r.probability_floor},
            {"floored", r.floored}}},
          {"monte_carlo", {{"n_samples", m.n_samples}, {"dropped", m.dropped}}}};
}

// Seed of branch `branch` (0 input, 1 output) at sweep point `point`.
std::uint64_t branch_seed(const ExperimentConfig& cfg, std::size_t point, int branch) {
  return derive_seed(tagged_seed(cfg.seed, StreamTag::kSweep), point, static_cast<std::uint64_t>(branch));
}

BranchResult tomography_branch(const DensityMatrix& truth, double weight,
                               const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto settings = standard_settings();
  const auto& t = cfg.tomography;
  const bool analytic = t.mode == CountMode::kAnalytic;
  CountData data = analytic ? expected_counts(truth, settings, t.pairs_per_setting)
                            : simulate_counts(truth, settings, t.pairs_per_setting, seed);
  MonteCarloOptions mc;
  mc.n_samples = t.n_mc_samples;
  mc.seed = derive_seed(seed, 0x4d43);
  // Noiseless data is inverted exactly; the iterative estimator only
  // approaches rank-deficient optima asymptotically.
  mc.method = analytic ? ReconstructionMethod::kLinear : t.method;
  mc.threads = cfg.threads;
  return {truth, analyze(data, mc), weight};
}

struct PointResult {
  BranchResult input;
  BranchResult output;
  TransferOutcome transfer;
};

PointResult run_point(const ExperimentConfig& cfg, std::size_t point) {
  PhotonPairState source = in_stage("source", [&] { return make_source_state(cfg.source); });
  PhotonPairState noisy = in_stage("channel", [&] { return apply_noisy_channel(source, cfg.channel); });
  BranchResult input = in_stage("input tomography", [&] {
    PhotonPairState blocked = block_long_arms(noisy);
    return tomography_branch(blocked.pol_marginal(), blocked.weight(), cfg, branch_seed(cfg, point, 0));
  });
  TransferOutcome out = in_stage("transfer", [&] { return transfer(noisy, cfg.interferometer); });
  BranchResult output = in_stage("output tomography", [&] {
    return tomography_branch(out.pol_out, out.joint_out.weight(), cfg, branch_seed(cfg, point, 1));
  });
  return {std::move(input), std::move(output), std::move(out)};
}

json transfer_json(const TransferOutcome& t) {
  double sum = 0.0;
  for (double p : t.port_probs) sum += p;
  return {{"port_probs",
           {{"SS", t.port_probs[0]}, {"SL", t.port_probs[1]}, {"LS", t.port_probs[2]},
            {"LL", t.port_probs[3]}}},
          {"port_prob_sum", sum},
          {"franson_postselection_fraction", t.franson_postselection_fraction},
          {"model_pol_out", model_json(state_metrics(t.pol_out))}};
}

json header(const ExperimentConfig& cfg, const char* experiment) {
  return {{"schema_version", kReportSchemaVersion},
          {"program", {{"name", "fransim"}, {"version", kProgramVersion}}},
          {"experiment", experiment},
          {"config", to_json(cfg)},
          {"timestamps", {{"started", utc_now()}}}};
}

void finish(RunReport& report) { report.payload["timestamps"]["finished"] = utc_now(); }

json gap_note(double model_fidelity) {
  return {{"measured_best_fidelity", kMeasuredBestFidelity},
          {"model_minus_measured", model_fidelity - kMeasuredBestFidelity},
          {"note",
           "The model includes only finite Franson visibility, phase jitter and the configured "
           "channel; laboratory values also reflect mode overlap and detector effects."}};
}

ExperimentConfig with_sweep_value(ExperimentConfig cfg, SweepParameter parameter, double v) {
  switch (parameter) {
    case SweepParameter::kP:
      cfg.source.balance_p = v;
      cfg.source.pol_input = PolInput::kBellP;
      break;
    case SweepParameter::kVisibility:
      cfg.source.franson_visibility = v;
      break;
    case SweepParameter::kSumPhase:
      cfg.interferometer.phase_a = v - cfg.interferometer.phase_b;
      break;
  }
  return cfg;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

RunReport run_purification(const ExperimentConfig& cfg) {
  require_valid(cfg);
  RunReport report;
  report.payload = header(cfg, "purify");
  PointResult r = run_point(cfg, 0);
  report.payload["stages"] = {{"input", branch_json(r.input)},
                              {"transfer", transfer_json(r.transfer)},
                              {"output", branch_json(r.output)}};
  report.payload["reference"] = gap_note(r.output.tomo.metrics.fidelity.value);
  report.matrices.push_back({"rho_in", r.input.tomo.reconstruction.rho.data()});
  report.matrices.push_back({"rho_out", r.output.tomo.reconstruction.rho.data()});
  finish(report);
  return report;
}

RunReport run_chsh_sweep(const ExperimentConfig& cfg) {
  require_valid(cfg);
  if (cfg.sweep && cfg.sweep->parameter != SweepParameter::kP) {
    throw ConfigError("sweep.parameter: chsh-sweep requires the balance parameter p");
  }
  const std::vector<double>& values = cfg.sweep ? cfg.sweep->values : default_p_values();
  RunReport report;
  report.payload = header(cfg, "chsh-sweep");
  SeriesTable table{"chsh_sweep", {"p", "s_in", "s_in_sigma", "s_out", "s_out_sigma"}, {}};
  json points = json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig point_cfg = with_sweep_value(cfg, SweepParameter::kP, values[i]);
    PointResult r = run_point(point_cfg, i);
    const auto& in = r.input.tomo.metrics.s_value;
    const auto& out = r.output.tomo.metrics.s_value;
    table.rows.push_back({values[i], in.value, in.sigma, out.value, out.sigma});
    points.push_back({{"p", values[i]},
                      {"s_in", metric_json(in)},
                      {"s_out", metric_json(out)},
                      {"input", branch_json(r.input)},
                      {"transfer", transfer_json(r.transfer)},
                      {"output", branch_json(r.output)}});
  }
  report.payload["points"] = std::move(points);
  report.series.push_back(std::move(table));
  finish(report);
  return report;
}

RunReport run_custom(const ExperimentConfig& cfg) {
  require_valid(cfg);
  if (!cfg.sweep) {
    RunReport report = run_purification(cfg);
    report.payload["experiment"] = "custom";
    return report;
  }
  RunReport report;
  report.payload = header(cfg, "custom");
  const SweepParameter param = cfg.sweep->parameter;
  const bool phase = param == SweepParameter::kSumPhase;
  SeriesTable table{"custom_sweep",
                    {phase ? "sum_phase_deg" : std::string(to_string(param)), "f_in", "f_in_sigma",
                     "c_in", "c_in_sigma", "purity_in", "purity_in_sigma", "s_in", "s_in_sigma",
                     "f_out", "f_out_sigma", "c_out", "c_out_sigma", "purity_out",
                     "purity_out_sigma", "s_out", "s_out_sigma"},
                    {}};
  json points = json::array();
  for (std::size_t i = 0; i < cfg.sweep->values.size(); ++i) {
    const double v = cfg.sweep->values[i];
    PointResult r = run_point(with_sweep_value(cfg, param, v), i);
    std::vector<double> row = {phase ? v / kDeg : v};
    for (const auto* b : {&r.input, &r.output}) {
      const auto& m = b->tomo.metrics;
      for (const Metric* x : {&m.fidelity, &m.concurrence, &m.purity, &m.s_value}) {
        row.push_back(x->value);
        row.push_back(x->sigma);
      }
    }
    table.rows.push_back(std::move(row));
    points.push_back({{"value", phase ? v / kDeg : v},
                      {"input", branch_json(r.input)},
                      {"transfer", transfer_json(r.transfer)},
                      {"output", branch_json(r.output)}});
  }
  report.payload["points"] = std::move(points);
  report.series.push_back(std::move(table));
  finish(report);
  return report;
}

RunReport run_fringe_scan(const ExperimentConfig& cfg) {
  require_valid(cfg);
  if (cfg.sweep && cfg.sweep->parameter != SweepParameter::kSumPhase) {
    throw ConfigError("sweep.parameter: fringe-scan requires sum_phase");
  }
  std::vector<double> phases;
  if (cfg.sweep) {
    phases = cfg.sweep->values;
  } else {
    for (int k = 0; k <= 72; ++k) phases.push_back(k * 5.0 * kDeg);
  }
  RunReport report;
  report.payload = header(cfg, "fringe-scan");
  PhotonPairState source = in_stage("source", [&] { return make_source_state(cfg.source); });
  PhotonPairState noisy = in_stage("channel", [&] { return apply_noisy_channel(source, cfg.channel); });
  auto scan = in_stage("fringe scan", [&] { return sum_phase_scan(noisy, cfg.interferometer, phases); });
  SeriesTable table{"fringe_scan", {"sum_phase_deg", "probability"}, {}};
  for (const auto& p : scan) table.rows.push_back({p.sum_phase / kDeg, p.probability});
  report.payload["visibility"] = fringe_visibility(scan);
  report.payload["n_points"] = scan.size();
  report.series.push_back(std::move(table));
  finish(report);
  return report;
}

json deterministic_payload(const RunReport& report) {
  json copy = report.payload;
  copy.erase("timestamps");
  return copy;
}

std::string series_csv(const SeriesTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::filesystem::path> write_report(const RunReport& report,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto path = dir / "report.json";
  write_file(path, report.payload.dump(2) + "\n");
  written.push_back(path);
  for (const auto& m : report.matrices) {
    std::ostringstream os;
    write_dump(os, m.data);
    path = dir / (m.name + ".dm");
    write_file(path, os.str());
    written.push_back(path);
  }
  for (const auto& s : report.series) {
    path = dir / (s.name + ".csv");
    write_file(path, series_csv(s));
    written.push_back(path);
  }
  return written;
}

std::vector<std::filesystem::path> emit_plot_data(const RunReport& report,
                                                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& m : report.matrices) {
    std::string body = "# row col magnitude phase_rad\n";
    for (Eigen::Index i = 0; i < m.data.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.data.cols(); ++j) {
        const Complex z = m.data(i, j);
        body += std::to_string(i) + ' ' + std::to_string(j) + ' ' + format_number(std::abs(z)) +
                ' ' + format_number(std::abs(z) > 0.0 ? std::arg(z) : 0.0) + '\n';
      }
    }
    auto path = dir / (m.name + "_bars.dat");
    write_file(path, body);
    written.push_back(path);
  }
  for (const auto& s : report.series) {
    std::string body = "#";
    for (const auto& c : s.columns) body += ' ' + c;
    body += '\n';
    for (const auto& row : s.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) body += ' ';
        body += format_number(row[c]);
      }
      body += '\n';
    }
    auto path = dir / (s.name + ".dat");
    write_file(path, body);
    written.push_back(path);
  }
  return written;
}

}  // namespace fransim
