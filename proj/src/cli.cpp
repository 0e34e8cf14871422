#include "itedist/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "itedist/benchmark.hpp"
#include "itedist/bootstrap.hpp"
#include "itedist/error.hpp"
#include "itedist/parallel.hpp"

namespace itedist::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

const std::vector<std::string> kCommands = {"analyze", "compare", "simulate", "oracle"};
const std::vector<std::string> kStudies = {"table1",  "table2",  "table3",         "table4", "figure1",
                                           "figure2", "figure3", "variance-check", "dgp"};
const std::vector<std::string> kProducts = {"cdf", "quantile", "iqr", "prob-positive", "bands",
                                            "tests"};

// Keys that never enter the reproducibility block.
const std::set<std::string> kTransient = {"config", "output", "threads", "step"};

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

// Shortest text that reads back to the same double.
std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::string join(const std::vector<double>& xs) {
  std::vector<std::string> parts;
  for (double x : xs) parts.push_back(format_double(x));
  return join(parts);
}

double to_double(const std::string& key, const std::string& text) {
  double x = 0.0;
  const std::string t = trim(text);
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty() || !std::isfinite(x)) {
    throw ConfigError("--" + key + ": '" + text + "' is not a finite number");
  }
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t x = 0;
  const std::string t = trim(text);
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError("--" + key + ": '" + text + "' is not a non-negative integer");
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("--" + key + ": '" + text + "' is not a boolean");
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> xs;
  if (trim(text).empty()) return xs;
  for (const auto& part : split(text, ',')) xs.push_back(to_double(key, part));
  return xs;
}

Range to_range(const std::string& key, const std::string& text) {
  const auto xs = to_doubles(key, text);
  if (xs.size() != 2 || !(xs[0] < xs[1])) {
    throw ConfigError("--" + key + ": expected 'lower,upper' with lower < upper, got '" + text + "'");
  }
  return {xs[0], xs[1]};
}

std::string format_range(const Range& r) { return format_double(r.first) + "," + format_double(r.second); }

void require_one_of(const std::string& key, const std::string& value,
                    const std::vector<std::string>& allowed) {
  if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) {
    throw ConfigError("--" + key + ": '" + value + "' is not one of " + join(allowed));
  }
}

void check_levels(const std::string& key, const std::vector<double>& taus) {
  for (double t : taus) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("--" + key + ": level " + format_double(t) + " outside (0, 1)");
  }
}

std::size_t steps_to_size(const Range& r, double step) {
  if (!(step > 0.0)) throw ConfigError("--step must be positive");
  return grid_size_for_step(r.first, r.second, step);
}

// Per-command defaults that differ from the RunConfig member initializers.
struct Defaults {
  std::size_t bootstrap = 500;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::vector<double> tau;
  std::vector<double> v;
  std::optional<Range> tau_range;
  std::optional<Range> v_range;
  std::optional<double> step;
  std::vector<std::string> report;
};

Defaults defaults_for(const std::string& command, const std::string& study) {
  Defaults d;
  if (command == "analyze") {
    d.tau = {0.5};
    d.v = {0.0};
    d.report = {"prob-positive", "quantile", "iqr", "bands"};
  } else if (command == "compare") {
    d.tau = {0.5};
    d.report = {"quantile", "iqr", "bands", "tests"};
  } else if (command == "simulate") {
    d.bootstrap = 200;
    d.reps = 300;
    d.n = 250;
    if (study == "table1") {
      d.v = {0.5, 1.0, 2.0, 3.0, 3.5};
    } else if (study == "table2") {
      d.n = 500;
      d.v_range = Range{0.04, 3.96};
      d.step = 0.01;
    } else if (study == "table3") {
      d.tau = {0.1, 0.25, 0.5, 0.75, 0.9};
    } else if (study == "table4") {
      d.n = 500;
      d.tau_range = Range{0.05, 0.95};
      d.step = 0.01;
    } else if (study == "figure2") {
      d.n = 500;
      d.tau = {0.25, 0.5, 0.75};
    } else if (study == "figure3") {
      d.n = 500;
      d.tau = {0.1, 0.9};
    } else if (study == "variance-check") {
      d.n = 2000;
      d.reps = 1000;
      d.tau = {0.25, 0.5, 0.75};
    } else if (study == "dgp") {
      d.n = 1000;
    }
  }
  return d;
}

}  // namespace

bool RunConfig::wants(const std::string& product) const {
  return std::find(report.begin(), report.end(), product) != report.end();
}

const std::vector<std::string>& command_keys(const std::string& command) {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"analyze",
       {"input", "outcome-col", "treatment-col", "iv-col", "covariate-cols", "group", "alpha",
        "bootstrap", "seed", "max-redraws", "min-per-group", "tau-range", "v-range", "grid-size",
        "step", "report", "band", "clip", "tau", "v", "format", "output", "threads", "config"}},
      {"compare",
       {"input", "outcome-col", "treatment-col", "iv-col", "covariate-cols", "group0", "group1",
        "alpha", "bootstrap", "seed", "max-redraws", "min-per-group", "tau-range", "grid-size",
        "step", "report", "band", "tau", "format", "output", "threads", "config"}},
      {"simulate",
       {"study", "n", "reps", "bootstrap", "seed", "max-redraws", "levels", "tau", "v",
        "tau-range", "v-range", "grid-size", "step", "split-covariate", "bins", "format", "output",
        "threads", "config"}},
      {"oracle", {"tau", "v", "y", "format", "output", "config"}},
  };
  auto it = keys.find(command);
  if (it == keys.end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

RunConfig resolve(const std::string& command, const Settings& settings) {
  const auto& allowed = command_keys(command);
  for (const auto& [key, value] : settings) {
    if (key == "command") {
      if (value != command) throw ConfigError("config is for command '" + value + "', not '" + command + "'");
      continue;
    }
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("'" + key + "' is not a setting of '" + command + "'");
    }
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = settings.find(key);
    if (it == settings.end()) return std::nullopt;
    return it->second;
  };

  RunConfig cfg;
  cfg.command = command;
  if (auto s = get("study")) cfg.study = trim(*s);
  if (command == "simulate") {
    if (cfg.study.empty()) throw ConfigError("simulate needs --study (" + join(kStudies) + ")");
    require_one_of("study", cfg.study, kStudies);
  }
  const Defaults def = defaults_for(command, cfg.study);

  if (auto s = get("input")) cfg.input = *s;
  if (auto s = get("outcome-col")) cfg.columns.outcome = trim(*s);
  if (auto s = get("treatment-col")) cfg.columns.treatment = trim(*s);
  if (auto s = get("iv-col")) cfg.columns.instrument = trim(*s);
  if (auto s = get("covariate-cols"); s && !trim(*s).empty()) cfg.columns.covariates = split(*s, ',');
  if (auto s = get("group")) cfg.group = trim(*s).empty() ? "all" : trim(*s);
  if (auto s = get("group0")) cfg.group0 = trim(*s);
  if (auto s = get("group1")) cfg.group1 = trim(*s);

  if (auto s = get("alpha")) cfg.alpha = to_double("alpha", *s);
  cfg.bootstrap = def.bootstrap;
  if (auto s = get("bootstrap")) cfg.bootstrap = to_u64("bootstrap", *s);
  if (auto s = get("seed")) cfg.seed = to_u64("seed", *s);
  if (auto s = get("max-redraws")) cfg.max_redraws = to_u64("max-redraws", *s);
  if (auto s = get("min-per-group")) cfg.min_per_group = to_u64("min-per-group", *s);

  if (def.tau_range) cfg.tau_range = *def.tau_range;
  if (auto s = get("tau-range")) cfg.tau_range = to_range("tau-range", *s);
  cfg.v_range = def.v_range;
  if (auto s = get("v-range")) cfg.v_range = to_range("v-range", *s);
  if (auto s = get("step")) cfg.step = to_double("step", *s);
  if (auto s = get("grid-size")) {
    cfg.grid_size = to_u64("grid-size", *s);
  } else {
    const std::optional<double> step = cfg.step ? cfg.step : def.step;
    if (step) {
      const bool values = command == "simulate" && cfg.study == "table2";
      if (values && !cfg.v_range) throw ConfigError("--step needs --v-range");
      cfg.grid_size = steps_to_size(values ? *cfg.v_range : cfg.tau_range, *step);
    }
  }

  cfg.report = def.report;
  if (auto s = get("report")) {
    cfg.report.clear();
    for (const auto& p : split(*s, ',')) {
      require_one_of("report", p, kProducts);
      if (!cfg.wants(p)) cfg.report.push_back(p);
    }
  }
  if (auto s = get("band")) cfg.band = trim(*s);
  if (auto s = get("clip")) cfg.clip = to_bool("clip", *s);

  cfg.tau = def.tau;
  if (auto s = get("tau")) cfg.tau = to_doubles("tau", *s);
  cfg.v = def.v;
  if (auto s = get("v")) cfg.v = to_doubles("v", *s);
  if (auto s = get("y")) cfg.y = to_doubles("y", *s);

  cfg.n = def.n;
  if (auto s = get("n")) cfg.n = to_u64("n", *s);
  cfg.reps = def.reps;
  if (auto s = get("reps")) cfg.reps = to_u64("reps", *s);
  if (command == "simulate") cfg.levels = {0.9, 0.95, 0.99};
  if (auto s = get("levels")) cfg.levels = to_doubles("levels", *s);
  if (auto s = get("split-covariate")) cfg.split_covariate = to_bool("split-covariate", *s);
  if (auto s = get("bins")) cfg.bins = to_u64("bins", *s);

  cfg.format = command == "simulate" ? "csv" : "json";
  if (auto s = get("format")) cfg.format = trim(*s);
  if (auto s = get("output")) cfg.output = *s;
  if (auto s = get("threads")) cfg.threads = to_u64("threads", *s);

  // Validation.
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
  if (cfg.bootstrap < 2) throw ConfigError("--bootstrap must be at least 2");
  if (!(cfg.tau_range.first > 0.0 && cfg.tau_range.second < 1.0)) {
    throw ConfigError("--tau-range must lie inside (0, 1)");
  }
  if (cfg.grid_size < 2) throw ConfigError("--grid-size must be at least 2");
  require_one_of("band", cfg.band, {"constant", "variable"});
  require_one_of("format", cfg.format, {"json", "csv"});
  check_levels("tau", cfg.tau);
  check_levels("levels", cfg.levels);
  std::sort(cfg.levels.begin(), cfg.levels.end());
  cfg.levels.erase(std::unique(cfg.levels.begin(), cfg.levels.end()), cfg.levels.end());

  if (command == "analyze" || command == "compare") {
    if (cfg.input.empty()) throw ConfigError("--input is required");
    if (cfg.report.empty()) throw ConfigError("--report selects nothing");
    if (cfg.wants("quantile") && cfg.tau.empty()) throw ConfigError("--tau is empty");
  }
  if (command == "analyze") {
    if (cfg.wants("tests")) throw ConfigError("tests need two groups; use 'compare'");
    if (cfg.wants("cdf") && cfg.v.empty()) throw ConfigError("--v is empty");
  }
  if (command == "compare") {
    if (cfg.group0.empty() || cfg.group1.empty()) throw ConfigError("compare needs --group0 and --group1");
    if (cfg.wants("cdf") || cfg.wants("prob-positive")) {
      throw ConfigError("compare reports quantile, iqr, bands and tests only");
    }
  }
  if (command == "simulate") {
    if (cfg.n < 1) throw ConfigError("--n must be positive");
    if (cfg.reps < 1) throw ConfigError("--reps must be positive");
    if (cfg.levels.empty()) throw ConfigError("--levels is empty");
    if ((cfg.study == "table1") && cfg.v.empty()) throw ConfigError("--v is empty");
    if ((cfg.study == "table3" || cfg.study.rfind("figure", 0) == 0 || cfg.study == "variance-check") &&
        cfg.study != "figure1" && cfg.tau.empty()) {
      throw ConfigError("--tau is empty");
    }
    if ((cfg.study == "figure2" || cfg.study == "figure3") && cfg.reps < 30) {
      throw ConfigError("--reps must be at least 30 for the Gaussian diagnostic");
    }
    if (cfg.study == "table2" && !cfg.v_range) throw ConfigError("table2 needs --v-range");
    if (cfg.study == "dgp" && cfg.format != "csv") throw ConfigError("dgp writes CSV only");
  }
  if (command == "oracle") {
    if (cfg.tau.empty() && cfg.v.empty() && cfg.y.empty()) {
      throw ConfigError("oracle needs --tau, --v or --y");
    }
    for (double v : cfg.v) {
      if (!(v >= 0.0 && v <= 4.0)) throw ConfigError("--v " + format_double(v) + " outside the support [0, 4]");
    }
    for (double y : cfg.y) {
      if (!(y >= 1.0 && y <= 8.0)) throw ConfigError("--y " + format_double(y) + " outside the outcome support [1, 8]");
    }
  }
  return cfg;
}

Settings reproducibility(const RunConfig& cfg) {
  Settings all;
  all["input"] = cfg.input;
  all["outcome-col"] = cfg.columns.outcome;
  all["treatment-col"] = cfg.columns.treatment;
  all["iv-col"] = cfg.columns.instrument;
  all["covariate-cols"] = join(cfg.columns.covariates);
  all["group"] = cfg.group;
  all["group0"] = cfg.group0;
  all["group1"] = cfg.group1;
  all["alpha"] = format_double(cfg.alpha);
  all["bootstrap"] = std::to_string(cfg.bootstrap);
  all["seed"] = std::to_string(cfg.seed);
  all["max-redraws"] = std::to_string(cfg.max_redraws);
  all["min-per-group"] = std::to_string(cfg.min_per_group);
  all["tau-range"] = format_range(cfg.tau_range);
  if (cfg.v_range) all["v-range"] = format_range(*cfg.v_range);
  all["grid-size"] = std::to_string(cfg.grid_size);
  all["report"] = join(cfg.report);
  all["band"] = cfg.band;
  all["clip"] = cfg.clip ? "true" : "false";
  all["tau"] = join(cfg.tau);
  all["v"] = join(cfg.v);
  all["y"] = join(cfg.y);
  all["study"] = cfg.study;
  all["n"] = std::to_string(cfg.n);
  all["reps"] = std::to_string(cfg.reps);
  all["levels"] = join(cfg.levels);
  all["split-covariate"] = cfg.split_covariate ? "true" : "false";
  all["bins"] = std::to_string(cfg.bins);
  all["format"] = cfg.format;

  Settings out;
  out["command"] = cfg.command;
  for (const auto& key : command_keys(cfg.command)) {
    if (kTransient.contains(key)) continue;
    if (auto it = all.find(key); it != all.end()) out[key] = it->second;
  }
  return out;
}

Settings load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  Settings settings;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    const nlohmann::json& block = doc.contains("reproducibility") ? doc["reproducibility"] : doc;
    if (!block.is_object()) throw ConfigError("config file '" + path + "' has no settings object");
    for (const auto& [key, value] : block.items()) {
      if (value.is_string()) {
        settings[key] = value.get<std::string>();
      } else if (value.is_boolean()) {
        settings[key] = value.get<bool>() ? "true" : "false";
      } else if (value.is_number_integer() || value.is_number_unsigned()) {
        settings[key] = value.dump();
      } else if (value.is_number_float()) {
        settings[key] = format_double(value.get<double>());
      } else if (value.is_array()) {
        std::vector<std::string> parts;
        for (const auto& v : value) {
          parts.push_back(v.is_string() ? v.get<std::string>()
                          : v.is_number_float() ? format_double(v.get<double>())
                                                : v.dump());
        }
        settings[key] = join(parts);
      } else {
        throw ConfigError("config key '" + key + "' has an unsupported value");
      }
    }
    return settings;
  }

  std::istringstream lines(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config file '" + path + "' line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    settings[key] = trim(line.substr(eq + 1));
  }
  return settings;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json header(const RunConfig& cfg) {
  nlohmann::json body = nlohmann::json::object();
  body["schema"] = kReportSchema;
  body["command"] = cfg.command;
  body["status"] = "ok";
  body["reproducibility"] = reproducibility(cfg);
  return body;
}

void finish(ReportDocument& doc) {
  doc.body["warnings"] = doc.warnings;
}

BootstrapConfig bootstrap_config(const RunConfig& cfg) {
  BootstrapConfig b;
  b.B = cfg.bootstrap;
  b.seed = cfg.seed;
  b.alpha = cfg.alpha;
  b.max_redraws = cfg.max_redraws;
  b.grid = make_grid(GridKind::kLevels, cfg.tau_range.first, cfg.tau_range.second, cfg.grid_size);
  b.threads = cfg.threads == 0 ? default_thread_count() : cfg.threads;
  b.validate();
  return b;
}

BandKind band_kind(const RunConfig& cfg) {
  return cfg.band == "variable" ? BandKind::kVariable : BandKind::kConstant;
}

IngestResult load_input(const RunConfig& cfg) { return ingest_csv(cfg.input, cfg.columns); }

// Estimability table for one group; flags become warnings, blocking cells an error.
nlohmann::json screen(const Sample& sample, const RunConfig& cfg, const std::string& name,
                      ReportDocument& doc) {
  const EstimabilityReport report = check_estimability(sample, cfg.min_per_group);
  for (const auto& cell : report.cells) {
    for (const auto& flag : cell.flags) {
      doc.warnings.push_back(name + " cell " + format_key(cell.cell) + ": " + flag);
    }
  }
  require_estimable(sample);
  return to_json(report);
}

void note_band(const BandResult& band, const std::string& target, ReportDocument& doc) {
  for (const auto& w : band.warnings) doc.warnings.push_back(target + " band: " + w);
}

void note_redraws(std::size_t redraws, const std::string& name, ReportDocument& doc) {
  if (redraws > 0) {
    doc.warnings.push_back(name + ": " + std::to_string(redraws) +
                           " degenerate bootstrap resamples were redrawn");
  }
}

nlohmann::json clipped(nlohmann::json band) {
  for (const char* side : {"lower", "upper"}) {
    for (auto& x : band[side]) {
      if (x.is_number()) x = std::clamp(x.get<double>(), 0.0, 1.0);
    }
  }
  band["clipped"] = true;
  return band;
}

}  // namespace

ReportDocument cmd_analyze(const RunConfig& cfg) {
  ReportDocument doc;
  doc.body = header(cfg);
  const BootstrapConfig bcfg = bootstrap_config(cfg);
  const IngestResult ingest = load_input(cfg);
  const GroupSelector selector =
      GroupSelector::parse(cfg.group, ingest.sample.covariate_names(), ingest.labels);
  const Sample sample = select_group(ingest.sample, selector);
  const nlohmann::json cells = screen(sample, cfg, "group", doc);
  const Bounds bounds = estimate_bounds(sample);
  const BootstrapDistribution dist = BootstrapDistribution::run(sample, bounds, bcfg);
  const Ecdf& est = dist.estimate();

  nlohmann::json estimates = {{"n", sample.size()},
                              {"prob_positive", est.prob_positive()},
                              {"median", est.quantile(0.5)},
                              {"iqr", est.iqr()}};
  nlohmann::json intervals = nlohmann::json::array();
  nlohmann::json bands = nlohmann::json::array();

  if (cfg.wants("prob-positive")) intervals.push_back(to_json(ci_prob_positive(dist, cfg.alpha)));
  if (cfg.wants("quantile")) {
    nlohmann::json qs = nlohmann::json::array();
    for (double tau : cfg.tau) {
      qs.push_back({{"tau", tau}, {"value", est.quantile(tau)}});
      intervals.push_back(to_json(ci_quantile(dist, tau, cfg.alpha)));
    }
    estimates["quantiles"] = qs;
  }
  if (cfg.wants("iqr")) intervals.push_back(to_json(ci_iqr(dist, cfg.alpha)));
  if (cfg.wants("cdf")) {
    nlohmann::json fs = nlohmann::json::array();
    for (double v : cfg.v) {
      fs.push_back({{"v", v}, {"value", est.cdf(v)}});
      intervals.push_back(to_json(ci_cdf(dist, v, cfg.alpha)));
    }
    estimates["cdf"] = fs;
  }
  if (cfg.wants("bands")) {
    const BandResult qband = ucb_quantile(dist, bcfg.grid, cfg.alpha, band_kind(cfg));
    note_band(qband, "quantile", doc);
    bands.push_back(to_json(qband, "quantile"));
    if (cfg.wants("cdf")) {
      const Grid vgrid = cfg.v_range ? make_grid(GridKind::kValues, cfg.v_range->first,
                                                 cfg.v_range->second, cfg.grid_size)
                                     : default_value_grid(est, cfg.grid_size);
      const BandResult fband = ucb_cdf(dist, vgrid, cfg.alpha, band_kind(cfg));
      note_band(fband, "cdf", doc);
      bands.push_back(cfg.clip ? clipped(to_json(fband, "cdf")) : to_json(fband, "cdf"));
    }
  }
  note_redraws(dist.redraws(), "group", doc);

  doc.body["metadata"] = {{"version", kVersion},
                          {"seed", cfg.seed},
                          {"bootstrap", cfg.bootstrap},
                          {"alpha", cfg.alpha},
                          {"n", {{"group", sample.size()}}},
                          {"redraws", {{"group", dist.redraws()}}},
                          {"cells", {{"group", cells}}},
                          {"labels", to_json(ingest.labels)}};
  doc.body["estimates"] = estimates;
  doc.body["intervals"] = intervals;
  doc.body["bands"] = bands;
  doc.body["tests"] = nlohmann::json::array();
  finish(doc);
  return doc;
}

ReportDocument cmd_compare(const RunConfig& cfg) {
  ReportDocument doc;
  doc.body = header(cfg);
  const BootstrapConfig bcfg = bootstrap_config(cfg);
  const IngestResult ingest = load_input(cfg);
  const auto& names = ingest.sample.covariate_names();
  const GroupSelector sel0 = GroupSelector::parse(cfg.group0, names, ingest.labels);
  const GroupSelector sel1 = GroupSelector::parse(cfg.group1, names, ingest.labels);
  if (selectors_overlap(ingest.sample, sel0, sel1)) {
    throw ConfigError("--group0 '" + cfg.group0 + "' and --group1 '" + cfg.group1 +
                      "' select overlapping cells");
  }
  const Sample s0 = select_group(ingest.sample, sel0);
  const Sample s1 = select_group(ingest.sample, sel1);
  const nlohmann::json cells0 = screen(s0, cfg, "group0", doc);
  const nlohmann::json cells1 = screen(s1, cfg, "group1", doc);
  const QuantileDifference diff =
      QuantileDifference::run(s0, s1, estimate_bounds(s0), estimate_bounds(s1), bcfg);

  auto group_estimates = [&](int g) {
    const Ecdf& e = diff.group(g).estimate();
    return nlohmann::json{{"n", g == 0 ? s0.size() : s1.size()},
                          {"prob_positive", e.prob_positive()},
                          {"median", e.quantile(0.5)},
                          {"iqr", e.iqr()}};
  };
  nlohmann::json estimates = {{"group0", group_estimates(0)}, {"group1", group_estimates(1)}};
  nlohmann::json intervals = nlohmann::json::array();
  nlohmann::json bands = nlohmann::json::array();
  nlohmann::json tests = nlohmann::json::array();

  if (cfg.wants("quantile")) {
    nlohmann::json qs = nlohmann::json::array();
    for (double tau : cfg.tau) {
      qs.push_back({{"tau", tau}, {"value", diff.estimate(tau)}});
      intervals.push_back(to_json(ci_quantile_difference(diff, tau, cfg.alpha)));
    }
    estimates["quantile_differences"] = qs;
  }
  if (cfg.wants("iqr")) intervals.push_back(to_json(ci_iqr_difference(diff, cfg.alpha)));
  if (cfg.wants("bands")) {
    const BandResult band = ucb_quantile_difference(diff, bcfg.grid, cfg.alpha, band_kind(cfg));
    note_band(band, "quantile_difference", doc);
    bands.push_back(to_json(band, "quantile_difference"));
  }
  if (cfg.wants("tests")) {
    for (Hypothesis h : {Hypothesis::kEquality, Hypothesis::kLocationShift, Hypothesis::kDominance}) {
      tests.push_back(to_json(test_distributions(diff, bcfg.grid, cfg.alpha, h)));
    }
  }
  note_redraws(diff.group(0).redraws(), "group0", doc);
  note_redraws(diff.group(1).redraws(), "group1", doc);

  doc.body["metadata"] = {{"version", kVersion},
                          {"seed", cfg.seed},
                          {"bootstrap", cfg.bootstrap},
                          {"alpha", cfg.alpha},
                          {"n", {{"group0", s0.size()}, {"group1", s1.size()}}},
                          {"redraws", {{"group0", diff.group(0).redraws()},
                                       {"group1", diff.group(1).redraws()}}},
                          {"cells", {{"group0", cells0}, {"group1", cells1}}},
                          {"labels", to_json(ingest.labels)}};
  doc.body["estimates"] = estimates;
  doc.body["intervals"] = intervals;
  doc.body["bands"] = bands;
  doc.body["tests"] = tests;
  finish(doc);
  return doc;
}

ReportDocument cmd_simulate(const RunConfig& cfg) {
  ReportDocument doc;
  doc.body = header(cfg);
  const std::size_t threads = cfg.threads == 0 ? default_thread_count() : cfg.threads;
  std::ostringstream table;
  nlohmann::json meta = {{"version", kVersion},
                         {"seed", cfg.seed},
                         {"study", cfg.study},
                         {"n", cfg.n},
                         {"reps", cfg.reps}};

  const std::string& s = cfg.study;
  if (s == "table1" || s == "table2" || s == "table3" || s == "table4") {
    bench::CoverageStudy study;
    study.n = cfg.n;
    study.reps = cfg.reps;
    study.B = cfg.bootstrap;
    study.seed = cfg.seed;
    study.max_redraws = cfg.max_redraws;
    study.threads = threads;
    study.levels = cfg.levels;
    if (s == "table1") study.cdf_points = cfg.v;
    if (s == "table2") {
      study.cdf_grid = make_grid(GridKind::kValues, cfg.v_range->first, cfg.v_range->second, cfg.grid_size);
    }
    if (s == "table3") {
      study.tau_points = cfg.tau;
      study.iqr = true;
    }
    if (s == "table4") {
      study.quantile_grid = make_grid(GridKind::kLevels, cfg.tau_range.first, cfg.tau_range.second,
                                      cfg.grid_size);
    }
    study.validate();
    const auto rows = bench::run_coverage(study);
    bench::write_coverage_csv(table, rows);
    nlohmann::json coverage = nlohmann::json::array();
    std::size_t failures = 0;
    for (const auto& r : rows) {
      coverage.push_back(to_json(r));
      failures = std::max(failures, r.failures);
    }
    if (failures > 0) {
      doc.warnings.push_back(std::to_string(failures) + " Monte Carlo reps failed and were excluded");
    }
    meta["bootstrap"] = cfg.bootstrap;
    doc.body["coverage"] = coverage;
  } else if (s == "figure1") {
    const Grid levels = make_grid(GridKind::kLevels, cfg.tau_range.first, cfg.tau_range.second, cfg.grid_size);
    bench::write_variance_curve_csv(table, levels);
    nlohmann::json curve = nlohmann::json::array();
    for (double tau : levels.points) {
      const auto tv = bench::theory_variance(tau);
      curve.push_back({{"tau", tau}, {"v1_tilde", tv.v1_tilde}, {"v2_tilde", tv.v2_tilde}});
    }
    doc.body["variance_curve"] = curve;
  } else if (s == "variance-check") {
    const auto rows = bench::brute_force_variance_difference(cfg.tau, cfg.n, cfg.reps, cfg.seed, threads);
    table << "tau,n_var_feasible,n_var_infeasible,difference,standard_error,v2_tilde\n";
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
      const double v2 = bench::theory_variance(r.tau).v2_tilde;
      table << format_double(r.tau) << ',' << format_double(r.n_var_feasible) << ','
            << format_double(r.n_var_infeasible) << ',' << format_double(r.difference) << ','
            << format_double(r.standard_error) << ',' << format_double(v2) << '\n';
      out.push_back({{"tau", r.tau},
                     {"n_var_feasible", r.n_var_feasible},
                     {"n_var_infeasible", r.n_var_infeasible},
                     {"difference", r.difference},
                     {"standard_error", r.standard_error},
                     {"v2_tilde", v2}});
    }
    doc.body["variance_check"] = out;
  } else if (s == "figure2" || s == "figure3") {
    std::vector<bench::GaussianSummary> summaries;
    for (double tau : cfg.tau) {
      summaries.push_back(bench::gaussian_diagnostic(tau, cfg.n, cfg.reps, cfg.seed, threads, cfg.bins));
    }
    bench::write_gaussian_csv(table, summaries);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& g : summaries) {
      out.push_back({{"tau", g.tau},
                     {"n", g.n},
                     {"reps", g.reps},
                     {"truth", g.truth},
                     {"v_q", g.v_q},
                     {"mean", g.mean},
                     {"variance", g.variance},
                     {"skewness", g.skewness},
                     {"excess_kurtosis", g.excess_kurtosis},
                     {"standardized", g.standardized},
                     {"bin_edges", g.bin_edges},
                     {"bin_counts", g.bin_counts}});
    }
    doc.body["gaussian"] = out;
  } else if (s == "dgp") {
    Stream stream(derive_key(cfg.seed, {static_cast<std::uint64_t>(StreamTag::kGenerate), 0}));
    const auto generated = bench::generate(cfg.n, stream, {}, cfg.split_covariate);
    bench::write_sample_csv(table, generated);
  }

  doc.body["metadata"] = meta;
  doc.table = table.str();
  finish(doc);
  return doc;
}

ReportDocument cmd_oracle(const RunConfig& cfg) {
  ReportDocument doc;
  doc.body = header(cfg);
  nlohmann::json rows = nlohmann::json::array();
  for (double tau : cfg.tau) {
    const double q = bench::oracle::quantile(tau);
    const auto tv = bench::theory_variance(tau);
    rows.push_back({{"query", "tau"},
                    {"at", tau},
                    {"values", {{"quantile", q},
                                {"density", bench::oracle::density(q)},
                                {"v1_tilde", tv.v1_tilde},
                                {"v2_tilde", tv.v2_tilde},
                                {"v_q", tv.v1_tilde + tv.v2_tilde}}}});
  }
  for (double v : cfg.v) {
    rows.push_back({{"query", "v"},
                    {"at", v},
                    {"values", {{"cdf", bench::oracle::cdf(v)}, {"density", bench::oracle::density(v)}}}});
  }
  for (double y : cfg.y) {
    // phi_1 maps untreated outcomes, whose support ends at 4.
    rows.push_back({{"query", "y"},
                    {"at", y},
                    {"values", {{"phi0", bench::oracle::phi(0, y)},
                                {"phi1", y <= 4.0 ? number(bench::oracle::phi(1, y)) : nullptr}}}});
  }
  doc.body["metadata"] = {{"version", kVersion}};
  doc.body["oracle"] = rows;
  finish(doc);
  return doc;
}

ReportDocument run_command(const RunConfig& cfg) {
  if (cfg.command == "analyze") return cmd_analyze(cfg);
  if (cfg.command == "compare") return cmd_compare(cfg);
  if (cfg.command == "simulate") return cmd_simulate(cfg);
  if (cfg.command == "oracle") return cmd_oracle(cfg);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, std::string> kHelp = {
    {"input", "CSV file with outcome, treatment, instrument and covariate columns"},
    {"outcome-col", "outcome column name (default y)"},
    {"treatment-col", "binary treatment column name (default d)"},
    {"iv-col", "binary instrument column name (default z)"},
    {"covariate-cols", "comma-separated discrete covariate columns"},
    {"group", "selector such as 'size>=3,married=1' (default all)"},
    {"group0", "selector for the reference group"},
    {"group1", "selector for the comparison group"},
    {"alpha", "significance level in (0, 1) (default 0.05)"},
    {"bootstrap", "bootstrap replications B"},
    {"seed", "master seed (default 0)"},
    {"max-redraws", "redraws allowed per degenerate resample (default 100)"},
    {"min-per-group", "warn when an instrument margin is smaller (default 10)"},
    {"tau-range", "level grid 'lo,hi' for quantile bands and tests"},
    {"v-range", "value grid 'lo,hi' for CDF bands"},
    {"grid-size", "grid points T (default 161)"},
    {"step", "grid spacing; sets the grid size from the range"},
    {"report", "products: cdf,quantile,iqr,prob-positive,bands,tests"},
    {"band", "constant or variable width bands"},
    {"clip", "clamp reported CDF bands to [0, 1]"},
    {"tau", "comma-separated levels"},
    {"v", "comma-separated ITE values"},
    {"y", "comma-separated outcomes for the counterfactual maps"},
    {"study", "table1..table4, figure1..figure3, variance-check or dgp"},
    {"n", "sample size per Monte Carlo rep"},
    {"reps", "Monte Carlo reps"},
    {"levels", "nominal coverage levels (default 0.9,0.95,0.99)"},
    {"split-covariate", "add a fair-coin covariate g to generated samples"},
    {"bins", "histogram bins for the Gaussian diagnostic"},
    {"format", "json or csv"},
    {"output", "output file (default standard output)"},
    {"threads", "worker threads; results do not depend on it"},
    {"config", "key = value file or a previous JSON report"},
};

const std::set<std::string> kFlags = {"clip", "split-covariate"};

int exit_code_for(const std::exception& e, std::string& kind) {
  if (dynamic_cast<const ConfigError*>(&e)) return kind = "config", kExitConfig;
  if (dynamic_cast<const IngestError*>(&e)) return kind = "ingest", kExitIngest;
  if (dynamic_cast<const EstimabilityError*>(&e)) return kind = "estimability", kExitEstimability;
  if (dynamic_cast<const ReplicationError*>(&e)) return kind = "replication", kExitReplication;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kind = "config", kExitConfig;
  return kind = "internal", kExitFailure;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bootstrap inference on the distribution of individual treatment effects", "itedist"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, bool>> flags;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> descriptions = {
      {"analyze", "single-group inference from a CSV file"},
      {"compare", "two-group quantile contrasts and distribution tests"},
      {"simulate", "Monte Carlo studies on the benchmark design"},
      {"oracle", "closed-form truth and variances of the benchmark design"},
  };
  for (const auto& command : kCommands) {
    CLI::App* sub = app.add_subcommand(command, descriptions.at(command));
    for (const auto& key : command_keys(command)) {
      if (kFlags.contains(key)) {
        sub->add_flag("--" + key, flags[command][key], kHelp.at(key));
      } else if (key == "bootstrap") {
        sub->add_option("-B,--bootstrap", raw[command][key], kHelp.at(key));
      } else {
        sub->add_option("--" + key, raw[command][key], kHelp.at(key));
      }
    }
    subs[command] = sub;
  }

  std::string command = "itedist";
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      return app.exit(CLI::CallForHelp(), out, err);
    } catch (const CLI::CallForAllHelp&) {
      return app.exit(CLI::CallForAllHelp(), out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }

    CLI::App* sub = app.get_subcommands().front();
    command = sub->get_name();
    Settings settings;
    if (auto* opt = sub->get_option_no_throw("--config"); opt && opt->count() > 0) {
      settings = load_config(raw[command]["config"]);
    }
    for (const auto& key : command_keys(command)) {
      if (key == "config") continue;
      const CLI::Option* opt = sub->get_option("--" + key);
      if (opt->count() == 0) continue;
      settings[key] = kFlags.contains(key) ? (flags[command][key] ? "true" : "false") : raw[command][key];
    }

    const auto start = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(command, settings);
    ReportDocument doc = run_command(cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string text = cfg.format == "csv" ? doc.to_csv() : doc.to_json();
    if (cfg.output.empty()) {
      out << text;
    } else {
      write_file(cfg.output, text);
      if (doc.body.contains("metadata") && doc.body["metadata"].contains("labels") &&
          !doc.body["metadata"]["labels"].empty()) {
        write_file(cfg.output + ".labels.json", doc.body["metadata"]["labels"].dump(2) + "\n");
      }
    }
    for (const auto& w : doc.warnings) err << "itedist: warning: " << w << '\n';
    err << "itedist: " << command << " finished in " << std::fixed << std::setprecision(2) << seconds
        << " s\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::string kind;
    const int code = exit_code_for(e, kind);
    err << error_document(command, kind, e.what()).dump() << '\n';
    return code;
  }
}

}  // namespace itedist::cli
