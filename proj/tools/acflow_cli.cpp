// acflow: single runs, batch experiments, threshold calibration and mask dumps.

#include "acflow/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct Options {
  std::vector<std::string> configs;
  std::string world;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::string out_dir{"out"};
  std::optional<std::size_t> ticks_max;
};

std::vector<acflow::RunConfig> load_all(const Options& o) {
  std::vector<acflow::RunConfig> out;
  for (const auto& path : o.configs) {
    acflow::RunConfig c = acflow::load_config(path);
    if (!o.world.empty()) {
      c.world_path = o.world;
      c.world = acflow::load_world(o.world);
    }
    if (o.ticks_max) c.max_time = static_cast<double>(*o.ticks_max) / c.tick_hz;
    out.push_back(std::move(c));
  }
  return out;
}

void add_common(CLI::App* app, Options& o, bool many_configs) {
  if (many_configs) {
    app->add_option("--config", o.configs, "configuration file(s)")->required()->check(CLI::ExistingFile);
  } else {
    app->add_option("--config", o.configs, "configuration file")->required()->expected(1)->check(CLI::ExistingFile);
  }
  app->add_option("--world", o.world, "world file overriding the configuration's")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--out-dir", o.out_dir, "output directory");
  app->add_option("--ticks-max", o.ticks_max, "tick limit per run");
}

int cmd_run(const Options& o) {
  auto cfgs = load_all(o);
  const acflow::RunConfig& cfg = cfgs.front();
  const std::uint64_t seed = o.seed.value_or(cfg.seed);
  acflow::RunResult r;
  try {
    r = acflow::run_single(cfg, seed);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return 2;
  }
  std::filesystem::create_directories(o.out_dir);
  std::ofstream f(std::filesystem::path(o.out_dir) / "trajectory.csv");
  acflow::write_trajectory_csv(f, r);
  std::cout << cfg.name << " seed " << seed << ": " << (r.completed ? "completed" : "not completed")
            << ", " << (r.collided ? "COLLIDED" : "no collision") << ", waypoints "
            << r.waypoints_reached << "/" << cfg.world.waypoints.size() << ", ticks "
            << r.trajectory.size() << ", max tick " << r.max_tick_ms << " ms\n";
  return r.collided ? 1 : 0;
}

int cmd_batch(const Options& o) {
  const auto cfgs = load_all(o);
  const std::uint64_t seed = o.seed.value_or(cfgs.front().seed);
  const acflow::BatchReport rep = acflow::run_batch(cfgs, seed, o.runs);
  acflow::write_batch_outputs(rep, o.out_dir);
  for (std::size_t c = 0; c < rep.runs.size(); ++c) {
    std::size_t coll = 0, comp = 0, err = 0;
    for (const auto& r : rep.runs[c]) {
      coll += r.collided;
      comp += r.completed;
      err += !r.error.empty();
      if (!r.error.empty()) std::cerr << rep.config_names[c] << ": " << r.error << '\n';
    }
    std::cout << rep.config_names[c] << ": " << rep.runs[c].size() << " runs, " << comp
              << " completed, " << coll << " collisions, " << err << " errors\n";
  }
  std::cout << "total: " << rep.total_runs() << " runs, " << rep.completions() << " completed, "
            << rep.collisions() << " collisions, " << rep.errors() << " errors\n";
  return rep.collisions() == 0 && rep.errors() == 0 ? 0 : 1;
}

int cmd_calibrate(const Options& o) {
  int status = 0;
  for (const auto& cfg : load_all(o)) {
    const acflow::CalibrationReport rep = acflow::calibrate(cfg);
    std::cout << cfg.name << '\n';
    for (const auto& l : rep.layers) {
      std::printf("  %-10s noise_p99 %.4f  T %.4f  echo %.4f  %s\n", l.layer.c_str(), l.noise_p99,
                  l.threshold, l.echo_peak, l.pass ? "ok" : "FAIL");
      if (!l.pass) {
        std::fprintf(stderr, "%s: %s threshold %.4f outside the feasible window (%.4f, %.4f)\n",
                     cfg.name.c_str(), l.layer.c_str(), l.threshold, l.noise_p99, l.echo_peak);
      }
    }
    if (!rep.ok()) status = 1;
  }
  return status;
}

int cmd_dump(const Options& o) {
  for (const auto& cfg : load_all(o)) {
    const auto dir = std::filesystem::path(o.out_dir) / cfg.name;
    acflow::dump_masks(cfg, dir);
    std::cout << "wrote " << dir.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acoustic flow controller simulator"};
  app.require_subcommand(1);
  Options run_o, batch_o, cal_o, dump_o;
  auto* run = app.add_subcommand("run", "single seeded run");
  add_common(run, run_o, false);
  auto* batch = app.add_subcommand("batch", "configurations x repeated runs");
  add_common(batch, batch_o, true);
  batch->add_option("--runs", batch_o.runs, "runs per configuration");
  auto* cal = app.add_subcommand("calibrate", "check thresholds against noise and echo levels");
  add_common(cal, cal_o, true);
  auto* dump = app.add_subcommand("dump-masks", "write masks and flow-line rasters as CSV");
  add_common(dump, dump_o, true);
  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_o);
    if (*batch) return cmd_batch(batch_o);
    if (*cal) return cmd_calibrate(cal_o);
    if (*dump) return cmd_dump(dump_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
