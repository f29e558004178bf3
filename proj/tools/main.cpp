#include "agmf/errors.hpp"
#include "agmf/scenarios.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kUsageError = 2;
constexpr int kIoError = 1;

using json = nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

agmf::SchemeConfig parse_scheme(const std::string& name, double kappa) {
  if (name == "ut") return agmf::SchemeConfig::unscented(kappa);
  if (name == "ge2") return agmf::SchemeConfig::gaussian_estimator(2);
  if (name == "ge4") return agmf::SchemeConfig::gaussian_estimator(4);
  throw agmf::InvalidInput("unknown scheme '" + name + "'");
}

void write_meta(const std::string& out, const json& config, const json& seed, const json& extra) {
  json meta = {{"config", config}, {"seed", seed}, {"version", kVersion}, {"timestamp", timestamp()}};
  for (const auto& [key, value] : extra.items()) meta[key] = value;
  std::ofstream file(out + ".meta.json");
  if (!file) throw std::ios_base::failure("cannot write " + out + ".meta.json");
  file << meta.dump(2) << '\n';
}

struct ShapeOptions {
  std::string out = "shape.csv";
  std::string density;
  double gamma = 0.5;
  std::string scheme = "ge4";
  double kappa = 0.5;
};

int cmd_shape(const ShapeOptions& opt) {
  agmf::ShapeScenario scenario;
  scenario.gamma = opt.gamma;
  scenario.scheme = parse_scheme(opt.scheme, opt.kappa);
  scenario.validate();

  std::ofstream csv(opt.out, std::ios::binary);
  if (!csv) {
    std::cerr << "error: cannot open " << opt.out << " for writing\n";
    return kIoError;
  }
  const agmf::ShapeResult result = agmf::run_shape(scenario);
  csv << "scheme,components,kld_x10\n";
  for (const auto& row : result.rows) {
    csv << row.scheme << ',' << row.components << ',' << fmt(row.kld_x10) << '\n';
  }
  if (!csv.flush()) {
    std::cerr << "error: failed writing " << opt.out << '\n';
    return kIoError;
  }

  if (!opt.density.empty()) {
    std::ofstream dump(opt.density, std::ios::binary);
    if (!dump) {
      std::cerr << "error: cannot open " << opt.density << " for writing\n";
      return kIoError;
    }
    constexpr std::size_t stride = 10;
    dump << "scheme,components,y,density\n";
    for (std::size_t n = 0; n < result.truth.values.size(); n += stride) {
      dump << "truth,0," << fmt(result.truth.grid.at(n)) << ',' << fmt(result.truth.values[n]) << '\n';
    }
    for (const auto& row : result.rows) {
      const agmf::TabulatedDensity tab = agmf::tabulate(row.output, result.truth.grid);
      for (std::size_t n = 0; n < tab.values.size(); n += stride) {
        dump << row.scheme << ',' << row.components << ',' << fmt(tab.grid.at(n)) << ','
             << fmt(tab.values[n]) << '\n';
      }
    }
    if (!dump.flush()) {
      std::cerr << "error: failed writing " << opt.density << '\n';
      return kIoError;
    }
  }

  json summaries = json::array();
  for (const auto& s : result.summaries) {
    summaries.push_back({{"scheme", s.scheme}, {"splits", s.splits}, {"xi_splits", s.xi_splits}});
  }
  const json config = {{"gamma", opt.gamma},
                       {"scheme", agmf::to_string(scenario.scheme)},
                       {"kappa", opt.kappa},
                       {"schedule", scenario.schedule},
                       {"grid", {{"lo", scenario.grid.lo}, {"hi", scenario.grid.hi}, {"step", scenario.grid.step}}},
                       {"truth_nodes", scenario.truth_nodes}};
  write_meta(opt.out, config, nullptr, {{"split_directions", summaries}});
  return 0;
}

struct TrackOptions {
  std::string out = "track.csv";
  std::vector<double> betas = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::size_t> reductions = {8};
  std::vector<std::string> filters = {"agmf", "mwe", "ukf", "pf"};
  int runs = 50;
  int steps = 100;
  std::uint64_t seed = 1;
  std::size_t particles = 10000;
  double eps_max = 0.05;
  double d_max = 1.0;
  std::size_t l_max = 128;
  double gamma = 0.5;
  std::string scheme = "ut";
  double kappa = 0.5;
  double noise_scale = 1.0;
  bool truth_at_mean = false;
};

int cmd_track(const TrackOptions& opt) {
  agmf::FilterConfig config;
  config.gamma = opt.gamma;
  config.eps_max = opt.eps_max;
  config.d_max = opt.d_max;
  config.l_max = opt.l_max;
  config.scheme = parse_scheme(opt.scheme, opt.kappa);
  config.reduce_pred = 1;
  config.reduce_filt = 1;
  config.validate();
  if (opt.betas.empty() || opt.filters.empty()) {
    throw agmf::InvalidInput("--beta and --filters need at least one value");
  }

  std::vector<agmf::FilterSpec> specs;
  std::vector<std::string> names = opt.filters;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::vector<std::size_t> reductions = opt.reductions;
  std::sort(reductions.begin(), reductions.end());
  reductions.erase(std::unique(reductions.begin(), reductions.end()), reductions.end());
  for (const auto& name : names) {
    const agmf::FilterKind kind = agmf::parse_filter(name);
    if (kind == agmf::FilterKind::kAgmf || kind == agmf::FilterKind::kMwe) {
      if (reductions.empty()) throw agmf::InvalidInput("--reduction needs at least one value");
      for (std::size_t r : reductions) {
        if (r < 1 || r > opt.l_max) throw agmf::InvalidInput("--reduction values must lie in [1, --l-max]");
        specs.push_back({kind, r});
      }
    } else {
      specs.push_back({kind, 0});
    }
  }

  std::vector<double> betas = opt.betas;
  std::sort(betas.begin(), betas.end());
  std::vector<agmf::TrackScenario> scenarios;
  for (double beta : betas) {
    agmf::TrackScenario scn;
    scn.beta = beta;
    scn.runs = opt.runs;
    scn.steps = opt.steps;
    scn.seed = opt.seed;
    scn.particles = opt.particles;
    scn.noise_scale = opt.noise_scale;
    scn.truth_from_prior = !opt.truth_at_mean;
    scn.validate();
    scenarios.push_back(scn);
  }

  std::ofstream csv(opt.out, std::ios::binary);
  if (!csv) {
    std::cerr << "error: cannot open " << opt.out << " for writing\n";
    return kIoError;
  }

  std::vector<agmf::TrackRow> rows;
  for (const auto& scn : scenarios) {
    for (auto& row : agmf::run_tracking(scn, specs, config)) rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const agmf::TrackRow& a, const agmf::TrackRow& b) {
    if (a.filter != b.filter) return a.filter < b.filter;
    if (a.beta != b.beta) return a.beta < b.beta;
    return a.reduction < b.reduction;
  });

  csv << "filter,beta,reduction,rmse,runtime_s,avg_splits,diverged_runs\n";
  json degenerate = json::array();
  for (const auto& row : rows) {
    csv << row.filter << ',' << fmt(row.beta) << ',' << row.reduction << ',' << fmt(row.rmse) << ','
        << fmt(row.runtime_s) << ',' << fmt(row.avg_splits) << ',' << row.diverged_runs << '\n';
    degenerate.push_back({{"filter", row.filter},
                          {"beta", row.beta},
                          {"reduction", row.reduction},
                          {"degenerate_runs", row.degenerate_runs}});
  }
  if (!csv.flush()) {
    std::cerr << "error: failed writing " << opt.out << '\n';
    return kIoError;
  }

  const json config_json = {{"beta", betas},
                            {"reduction", reductions},
                            {"filters", names},
                            {"runs", opt.runs},
                            {"steps", opt.steps},
                            {"particles", opt.particles},
                            {"gamma", opt.gamma},
                            {"eps_max", opt.eps_max},
                            {"d_max", opt.d_max},
                            {"l_max", opt.l_max},
                            {"scheme", opt.scheme},
                            {"kappa", opt.kappa},
                            {"noise_scale", opt.noise_scale},
                            {"truth_from_prior", !opt.truth_at_mean}};
  write_meta(opt.out, config_json, opt.seed, {{"degenerate_updates", degenerate}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Gaussian mixture filter experiments"};
  app.require_subcommand(1);

  ShapeOptions shape;
  auto* shape_cmd = app.add_subcommand("shape", "Approximate the growth-process density by splitting");
  shape_cmd->add_option("--out", shape.out, "CSV output path")->capture_default_str();
  shape_cmd->add_option("--density", shape.density, "Optional tabulated density dump (CSV)");
  shape_cmd->add_option("--gamma", shape.gamma, "Selection interpolation for the adaptive scheme")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  shape_cmd->add_option("--scheme", shape.scheme, "Linearization scheme")
      ->capture_default_str()->check(CLI::IsMember({"ut", "ge2", "ge4"}));
  shape_cmd->add_option("--kappa", shape.kappa, "Unscented transform kappa")->capture_default_str();

  TrackOptions track;
  auto* track_cmd = app.add_subcommand("track", "Monte Carlo bicycle/radar tracking comparison");
  track_cmd->add_option("--out", track.out, "CSV output path")->capture_default_str();
  track_cmd->add_option("--beta", track.betas, "Glint probabilities (comma separated)")
      ->delimiter(',')->capture_default_str()->check(CLI::Range(0.0, 1.0));
  track_cmd->add_option("--reduction", track.reductions, "Reduction thresholds (comma separated)")
      ->delimiter(',')->capture_default_str();
  track_cmd->add_option("--filters", track.filters, "Filters: agmf,mwe,ukf,pf")
      ->delimiter(',')->capture_default_str()->check(CLI::IsMember({"agmf", "mwe", "ukf", "pf"}));
  track_cmd->add_option("--runs", track.runs, "Monte Carlo runs")->capture_default_str()->check(CLI::PositiveNumber);
  track_cmd->add_option("--steps", track.steps, "Time steps per run")->capture_default_str()->check(CLI::PositiveNumber);
  track_cmd->add_option("--seed", track.seed, "Scenario seed")->capture_default_str();
  track_cmd->add_option("--particles", track.particles, "Particle filter sample count")
      ->capture_default_str()->check(CLI::PositiveNumber);
  track_cmd->add_option("--eps-max", track.eps_max, "Error threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  track_cmd->add_option("--d-max", track.d_max, "Deviation (ISD) threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  track_cmd->add_option("--l-max", track.l_max, "Component threshold")->capture_default_str()->check(CLI::PositiveNumber);
  track_cmd->add_option("--gamma", track.gamma, "Selection interpolation")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  track_cmd->add_option("--scheme", track.scheme, "Linearization scheme")
      ->capture_default_str()->check(CLI::IsMember({"ut", "ge2", "ge4"}));
  track_cmd->add_option("--kappa", track.kappa, "Unscented transform kappa")->capture_default_str();
  track_cmd->add_option("--noise-scale", track.noise_scale, "Multiplier on all noise covariances")
      ->capture_default_str();
  track_cmd->add_flag("--truth-at-mean", track.truth_at_mean,
                      "Start the ground truth at the prior mean instead of a prior draw");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*shape_cmd) return cmd_shape(shape);
    return cmd_track(track);
  } catch (const agmf::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  }
}
