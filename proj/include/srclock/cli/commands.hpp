/**
 * @brief Subcommands of the srclock tool. Each reads the JSON config, runs one
 * pipeline and writes its data files plus manifest.json into the output
 * directory. Failures are reported as exceptions.
 */
#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srclock/analysis.hpp"
#include "srclock/cli/config.hpp"
#include "srclock/interferometer.hpp"
#include "srclock/optimizer.hpp"
#include "srclock/waveform_io.hpp"

#ifndef SRCLOCK_VERSION
#define SRCLOCK_VERSION "dev"
#endif

namespace srclock::cli {

namespace fs = std::filesystem;

/// Flags shared by all subcommands.
struct Invocation {
  std::string command;
  json config = json::object();
  fs::path configDir = ".";  // relative paths in the config resolve against this
  std::uint64_t seed = 1;
  int workers = 1;
  fs::path out = "out";
  int mini = 1;
  std::string pulsePath;  // overrides config pulse.file
  std::ostream* log = &std::cout;
};

/// Collects written files and emits the manifest.
class Output {
 public:
  Output(const Invocation& inv, const PhysicalConstants& c) : inv_(inv), constantsHash_(constants_hash(c)) {
    fs::create_directories(inv.out);
  }

  fs::path path(const std::string& name) {
    files_.push_back(name);
    return inv_.out / name;
  }

  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write_manifest() const {
    json m;
    m["tool"] = "srclock";
    m["version"] = SRCLOCK_VERSION;
    m["command"] = inv_.command;
    m["seed"] = inv_.seed;
    m["workers"] = inv_.workers;
    m["mini"] = inv_.mini;
    m["constants_hash"] = constantsHash_;
    m["config"] = inv_.config;
    if (!inv_.pulsePath.empty()) m["pulse_file"] = inv_.pulsePath;
    m["files"] = files_;
    for (const auto& [k, v] : extra_) m[k] = v;
    std::ofstream os(inv_.out / "manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest in " + inv_.out.string());
    os << m.dump(2) << '\n';
  }

 private:
  const Invocation& inv_;
  std::string constantsHash_;
  std::vector<std::string> files_;
  std::map<std::string, json> extra_;
};

inline fs::path resolve(const Invocation& inv, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : inv.configDir / path;
}

/// pulse: {file} | {primitive: true} | {composite: name}; --pulse overrides.
inline Waveform pulse_from(const Invocation& inv, const Node& root, const PhysicalConstants& c) {
  if (!inv.pulsePath.empty()) return load_waveform(inv.pulsePath).waveform;
  const Node n = root.child("pulse");
  n.only({"file", "primitive", "composite", "target"});
  if (n.has("file")) return load_waveform(resolve(inv, n.required<std::string>("file")).string()).waveform;
  if (n.value("primitive", false)) return primitive_pi(c.rabiPeak, c);
  if (n.has("composite")) {
    try {
      return composite(parse_composite(n.required<std::string>("composite")), c);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("pulse.composite: ") + e.what());
    }
  }
  throw ConfigError("pulse: give one of 'file', 'primitive' or 'composite'");
}

/// pulse.target: "pi_x" (default) or "nominal" (the pulse's own zero-noise operation).
inline TargetOperation target_from(const Node& root, const Waveform& w, const SmoothingOptions& s,
                                   const PhysicalConstants& c) {
  std::string name = "pi_x";
  if (const auto p = root.optional_child("pulse")) name = p->value<std::string>("target", name);
  if (name == "pi_x") return {};
  if (name == "nominal") return nominal_target(w, s, c);
  throw ConfigError("pulse.target must be 'pi_x' or 'nominal'");
}

inline void check_sections(const Node& root) {
  root.only({"constants", "smoothing", "noise_widths", "optimizer", "pulse", "evaluate", "sweep", "area",
             "interferometer", "contrast", "plot"});
}

// ---------------------------------------------------------------------------

inline int cmd_optimize(const Invocation& inv) {
  const Node root(inv.config, "");
  check_sections(root);
  const auto c = constants_from(root);
  const auto cfg = optimizer_from(root, inv.seed, inv.workers);
  const auto dist = distribution_from(root);
  ControlModel model;
  model.constants = c;
  if (root.child("optimizer").value("ramp_aware", true)) model = ramp_aware(model, smoothing_from(root));
  const auto trace = optimize(cfg, dist, model);

  Output out(inv, c);
  Waveform best = trace.best;
  best.label = "optimized";
  save_waveform(out.path("pulse.txt").string(), best, c);
  {
    std::ofstream os(out.path("trace.csv"));
    os << "iteration,cost,best_cost,wall_time_s\n";
    for (const auto& r : trace.iterations)
      os << r.iteration << ',' << format_double(r.cost) << ',' << format_double(r.bestCost) << ','
         << format_double(r.wallSeconds) << '\n';
  }
  out.note("status", to_string(trace.status));
  out.note("best_cost", trace.bestCost);
  out.note("seeds", {{"optimizer/init", substream_seed(inv.seed, "optimizer/init")},
                     {"optimizer/batch", substream_seed(inv.seed, "optimizer/batch")}});
  out.write_manifest();
  *inv.log << "best_cost " << format_double(trace.bestCost) << "\nstatus " << to_string(trace.status)
           << "\niterations " << trace.iterations.size() << '\n';
  return 0;
}

inline int cmd_evaluate(const Invocation& inv) {
  const Node root(inv.config, "");
  check_sections(root);
  const auto c = constants_from(root);
  const auto s = smoothing_from(root);
  const Waveform w = pulse_from(inv, root, c);
  const auto target = target_from(root, w, s, c);

  NoiseParams p;
  double rmsA = 0.0, rmsP = 0.0;
  if (const auto e = root.optional_child("evaluate")) {
    e->only({"noise_point", "time_noise_rms_amplitude", "time_noise_rms_phase_rad"});
    if (const auto np = e->optional_child("noise_point")) p = noise_point_from(*np);
    rmsA = e->value("time_noise_rms_amplitude", 0.0);
    rmsP = e->value("time_noise_rms_phase_rad", 0.0);
  }
  const auto ev = single_pulse_evaluator(w, target, s, c);
  std::optional<TimeNoise> tn;
  if (rmsA > 0.0 || rmsP > 0.0) tn = synthesize_noise(rmsA, rmsP, repeat_noise_seed(inv.seed, 0), ev.window);
  const auto v = ev.evaluate(p, tn ? &*tn : nullptr);

  Output out(inv, c);
  {
    std::ofstream os(out.path("evaluate.csv"));
    os << "infidelity,phase_deviation_rad\n" << format_double(v[0]) << ',' << format_double(v[1]) << '\n';
  }
  out.write_manifest();
  *inv.log << "infidelity " << format_double(v[0]) << "\nphase_deviation_rad " << format_double(v[1]) << '\n';
  return 0;
}

inline StageCounts stage_counts_from(const Invocation& inv, const std::optional<Node>& n) {
  StageCounts counts;
  if (n) counts = {n->value("primitive_count", 20), n->value("optimized_count", 480)};
  if (inv.mini < 1) throw ConfigError("--mini must be at least 1");
  if (inv.mini > 1) {
    if (counts.primitive % inv.mini != 0 || counts.optimized % inv.mini != 0)
      throw ConfigError("--mini must divide both stage counts");
    counts = {counts.primitive / inv.mini, counts.optimized / inv.mini};
  }
  return counts;
}

/// interferometer: {primitive_count, optimized_count, include_recoil_shift, noise_point, time_noise_*}.
struct InterferometerSetup {
  SequencePlan plan;
  InterferometerOptions options;
};

inline InterferometerSetup interferometer_from(const Invocation& inv, const Node& root, const PhysicalConstants& c,
                                               const SmoothingOptions& s) {
  InterferometerSetup setup;
  setup.options.constants = c;
  setup.options.smoothing = s;
  const auto n = root.optional_child("interferometer");
  if (n) {
    n->only({"primitive_count", "optimized_count", "include_recoil_shift", "noise_point", "time_noise_rms_amplitude",
             "time_noise_rms_phase_rad"});
    setup.options.includeRecoilShift = n->value("include_recoil_shift", true);
  }
  const StageCounts counts = stage_counts_from(inv, n);
  setup.plan = build_sequence(pulse_from(inv, root, c), primitive_pi(c.rabiPeak, c), counts);
  return setup;
}

inline int run_sweep(const Invocation& inv, bool twoD) {
  const Node root(inv.config, "");
  check_sections(root);
  const auto c = constants_from(root);
  const auto s = smoothing_from(root);
  const Node n = root.child("sweep");
  const auto spec = sweep_from(n, twoD, inv.seed, inv.workers);
  const std::string kind = n.value<std::string>("evaluator", "single_pulse");
  Evaluator ev;
  if (kind == "single_pulse") {
    const Waveform w = pulse_from(inv, root, c);
    ev = single_pulse_evaluator(w, target_from(root, w, s, c), s, c);
  } else if (kind == "interferometer") {
    const auto setup = interferometer_from(inv, root, c, s);
    ev = interferometer_evaluator(setup.plan, setup.options);
  } else {
    throw ConfigError("sweep.evaluator must be 'single_pulse' or 'interferometer'");
  }
  const auto r = sweep(spec, ev, c);
  Output out(inv, c);
  save_sweep(out.path("sweep.csv").string(), r);
  out.path("sweep.csv.meta.json");
  out.write_manifest();
  *inv.log << "points " << r.nx() * r.ny() << "\nrepeats " << spec.repeats << '\n';
  return 0;
}

inline int cmd_sweep1d(const Invocation& inv) { return run_sweep(inv, false); }
inline int cmd_sweep2d(const Invocation& inv) { return run_sweep(inv, true); }

// ---------------------------------------------------------------------------
// CSV input

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("CSV has no column '" + name + "'");
  }
  std::vector<double> numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> v;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      try {
        v.push_back(std::stod(rows[r].at(c)));
      } catch (const std::exception&) {
        throw ConfigError("CSV row " + std::to_string(r + 2) + ": column '" + name + "' is not a number");
      }
    }
    return v;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CSV");
  t.header = split_csv_line(line);
  int lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw ConfigError(path.string() + ":" + std::to_string(lineNo) + ": expected " +
                        std::to_string(t.header.size()) + " columns");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// ---------------------------------------------------------------------------

/**
 * area: {threshold, metric, map_csv} reads a 2D sweep CSV; otherwise the
 * config's 2D sweep is run. With rms_levels and repeats the time-noise trend
 * is computed instead.
 */
inline int cmd_area(const Invocation& inv) {
  const Node root(inv.config, "");
  check_sections(root);
  const auto c = constants_from(root);
  const auto s = smoothing_from(root);
  const Node a = root.child("area");
  a.only({"threshold", "metric", "map_csv", "rms_levels", "repeats"});
  const double threshold = a.required<double>("threshold");
  if (!(threshold > 0.0)) throw ConfigError("area.threshold must be positive");
  const std::string metric = a.value<std::string>("metric", "infidelity");
  Output out(inv, c);

  if (a.has("map_csv")) {
    const auto t = read_csv(resolve(inv, a.required<std::string>("map_csv")));
    if (t.header.size() < 3) throw ConfigError("area.map_csv must be a 2D sweep CSV");
    const auto xs = t.numbers(t.header[0]), ys = t.numbers(t.header[1]);
    const auto values = t.numbers(metric + "_mean");
    auto axis = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      if (v.size() < 2) throw ConfigError("area.map_csv needs at least 2 points per axis");
      return Axis{v.front(), v.back(), static_cast<int>(v.size())};
    };
    const double area = effective_area(values, axis(xs), axis(ys), threshold);
    std::ofstream os(out.path("area.csv"));
    os << "threshold,area\n" << format_double(threshold) << ',' << format_double(area) << '\n';
    *inv.log << "area " << format_double(area) << '\n';
  } else {
    const Waveform w = pulse_from(inv, root, c);
    const auto ev = single_pulse_evaluator(w, target_from(root, w, s, c), s, c);
    const auto spec = sweep_from(root.child("sweep"), true, inv.seed, inv.workers);
    if (a.has("rms_levels")) {
      const auto levels = a.required<std::vector<double>>("rms_levels");
      const auto trend = noise_robustness_trend(ev, spec, levels, a.value("repeats", 3), threshold, c);
      std::ofstream os(out.path("area_trend.csv"));
      os << "rms,mean_area,std_area\n";
      for (const auto& t : trend)
        os << format_double(t.rms) << ',' << format_double(t.meanArea) << ',' << format_double(t.stdArea) << '\n';
      for (const auto& t : trend) *inv.log << "rms " << t.rms << " area " << format_double(t.meanArea) << '\n';
    } else {
      const auto r = sweep(spec, ev, c);
      save_sweep(out.path("sweep.csv").string(), r);
      out.path("sweep.csv.meta.json");
      const double area = effective_area(r, threshold, metric);
      std::ofstream os(out.path("area.csv"));
      os << "threshold,area\n" << format_double(threshold) << ',' << format_double(area) << '\n';
      *inv.log << "area " << format_double(area) << '\n';
    }
  }
  out.write_manifest();
  return 0;
}

inline int cmd_interferometer(const Invocation& inv) {
  const Node root(inv.config, "");
  check_sections(root);
  const auto c = constants_from(root);
  const auto s = smoothing_from(root);
  const auto setup = interferometer_from(inv, root, c, s);
  NoiseParams p;
  double rmsA = 0.0, rmsP = 0.0;
  if (const auto n = root.optional_child("interferometer")) {
    if (const auto np = n->optional_child("noise_point")) p = noise_point_from(*np);
    rmsA = n->value("time_noise_rms_amplitude", 0.0);
    rmsP = n->value("time_noise_rms_phase_rad", 0.0);
  }
  std::optional<TimeNoise> tn;
  if (rmsA > 0.0 || rmsP > 0.0)
    tn = synthesize_noise(rmsA, rmsP, repeat_noise_seed(inv.seed, 0), plan_duration(setup.plan, setup.options));
  const auto r = run(setup.plan, p, tn ? &*tn : nullptr, setup.options);

  Output out(inv, c);
  {
    std::ofstream os(out.path("interferometer.csv"));
    os << "pulses,transfer_efficiency,retained_population,arm_phase_difference_rad,upper_momentum,lower_momentum\n"
       << setup.plan.pulses.size() << ',' << format_double(r.transferEfficiency) << ','
       << format_double(r.retainedPopulation) << ',' << format_double(r.armPhaseDifference) << ','
       << r.arms[0].momentum << ',' << r.arms[1].momentum << '\n';
  }
  out.note("stage_counts", {{"primitive", setup.plan.counts.primitive}, {"optimized", setup.plan.counts.optimized}});
  out.write_manifest();
  *inv.log << "pulses " << setup.plan.pulses.size() << "\ntransfer_efficiency " << format_double(r.transferEfficiency)
           << "\narm_phase_difference_rad " << format_double(r.armPhaseDifference) << '\n';
  return 0;
}

/**
 * contrast: {channel, widths, n_samples, table_csv | table}. table_csv is a
 * 1D interferometer sweep; table is {x, transfer_efficiency, phase_mean_rad, phase_std_rad}.
 */
inline int cmd_contrast(const Invocation& inv) {
  const Node root(inv.config, "");
  check_sections(root);
  const auto c = constants_from(root);
  const Node n = root.child("contrast");
  n.only({"channel", "widths", "n_samples", "table_csv", "table"});
  ContrastSpec spec;
  spec.channel = n.value<std::string>("channel", spec.channel);
  spec.widths = n.required<std::vector<double>>("widths");
  spec.nSamples = n.value("n_samples", spec.nSamples);
  spec.workers = inv.workers;
  if (n.has("table_csv")) {
    const auto t = read_csv(resolve(inv, n.required<std::string>("table_csv")));
    spec.table.x = t.numbers(t.header.at(0));
    spec.table.transfer = t.numbers("transfer_efficiency_mean");
    spec.table.meanPhase = t.numbers("phase_difference_mean");
    bool hasStd = false;
    for (const auto& h : t.header) hasStd = hasStd || h == "phase_difference_std";
    spec.table.stdPhase = hasStd ? t.numbers("phase_difference_std") : std::vector<double>(spec.table.x.size(), 0.0);
    for (std::size_t i = 1; i < spec.table.meanPhase.size(); ++i)
      spec.table.meanPhase[i] =
          spec.table.meanPhase[i - 1] + wrap_phase(spec.table.meanPhase[i] - spec.table.meanPhase[i - 1]);
  } else {
    const Node t = n.child("table");
    t.only({"x", "transfer_efficiency", "phase_mean_rad", "phase_std_rad"});
    spec.table.x = t.required<std::vector<double>>("x");
    spec.table.transfer = t.required<std::vector<double>>("transfer_efficiency");
    spec.table.meanPhase = t.required<std::vector<double>>("phase_mean_rad");
    spec.table.stdPhase = t.value("phase_std_rad", std::vector<double>(spec.table.x.size(), 0.0));
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("contrast: ") + e.what());
  }
  const auto points = contrast(spec, substream_seed(inv.seed, "contrast"));
  Output out(inv, c);
  {
    std::ofstream os(out.path("contrast.csv"));
    write_contrast_csv(os, spec.channel, points);
  }
  out.write_manifest();
  for (const auto& p : points) *inv.log << "width " << p.width << " contrast " << format_double(p.contrast) << '\n';
  return 0;
}

/**
 * plot: {kind, data_csv, x, y?, value, title?}. Checks the columns, copies the
 * data next to a figure spec that the plotting scripts consume.
 */
inline int cmd_plot_export(const Invocation& inv) {
  const Node root(inv.config, "");
  check_sections(root);
  const auto c = constants_from(root);
  const Node n = root.child("plot");
  n.only({"kind", "data_csv", "x", "y", "value", "title"});
  const std::string kind = n.required<std::string>("kind");
  if (kind != "heatmap" && kind != "line" && kind != "contrast")
    throw ConfigError("plot.kind must be 'heatmap', 'line' or 'contrast'");
  const fs::path data = resolve(inv, n.required<std::string>("data_csv"));
  const auto table = read_csv(data);
  json fig;
  fig["kind"] = kind;
  fig["data"] = "data.csv";
  for (const char* key : {"x", "y", "value"}) {
    if (!n.has(key)) {
      if (std::string(key) == "y" && kind != "heatmap") continue;
      throw ConfigError("missing required field 'plot." + std::string(key) + "'");
    }
    const auto col = n.required<std::string>(key);
    table.column(col);
    fig[key] = col;
  }
  fig["title"] = n.value<std::string>("title", "");
  Output out(inv, c);
  fs::copy_file(data, out.path("data.csv"), fs::copy_options::overwrite_existing);
  {
    std::ofstream os(out.path("figure.json"));
    os << fig.dump(2) << '\n';
  }
  out.write_manifest();
  *inv.log << "rows " << table.rows.size() << '\n';
  return 0;
}

inline int dispatch(const Invocation& inv) {
  if (inv.command == "optimize") return cmd_optimize(inv);
  if (inv.command == "evaluate") return cmd_evaluate(inv);
  if (inv.command == "sweep1d") return cmd_sweep1d(inv);
  if (inv.command == "sweep2d") return cmd_sweep2d(inv);
  if (inv.command == "area") return cmd_area(inv);
  if (inv.command == "interferometer") return cmd_interferometer(inv);
  if (inv.command == "contrast") return cmd_contrast(inv);
  if (inv.command == "plot-export") return cmd_plot_export(inv);
  throw ConfigError("unknown command '" + inv.command + "'");
}

}  // namespace srclock::cli
