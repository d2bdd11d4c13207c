// Command-line driver: run, batch, gen-ref, validate-ref, gravity-map.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "scb/logging.hpp"
#include "scb/reference.hpp"
#include "scb/scenario.hpp"
#include "scb/simulation.hpp"

namespace fs = std::filesystem;
using namespace scb;

namespace {

constexpr int kRuntimeError = 4;

void print_summary(const std::string& label, const RunResult& r) {
  std::printf("%s: %s", label.c_str(), to_string(r.status).c_str());
  if (r.t_l) std::printf(" at t = %.2f s", *r.t_l);
  std::printf("\n  terminal errors: |r-r_f| = %.4f m, e_s.(r-r_f) = %.4f m, |v-v_f| = %.4f m/s\n",
              r.position_error, r.altitude_error, r.speed_error);
  std::printf("  propellant used: %.3f kg, filter active on %.1f%% of steps\n", r.propellant_used,
              100.0 * r.intervention_fraction);
  for (const auto& [name, s] : r.constraints) {
    std::printf("  min %-5s = % .6g at t = %.2f s%s\n", name.c_str(), s.min_value, s.min_time,
                s.first_violation ? "  (violated)" : "");
  }
  if (!r.message.empty()) std::printf("  %s\n", r.message.c_str());
}

// "x0:x1:nx,y0:y1:ny,z0:z1:nz"
std::array<std::tuple<double, double, int>, 3> parse_grid(const std::string& spec) {
  std::array<std::tuple<double, double, int>, 3> out;
  std::stringstream ss(spec);
  std::string axis;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, axis, ',')) throw CLI::ValidationError("--grid", "needs three axes");
    double lo = 0.0, hi = 0.0;
    int n = 0;
    if (std::sscanf(axis.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 1) {
      throw CLI::ValidationError("--grid", "axis '" + axis + "' is not lo:hi:n");
    }
    out[static_cast<std::size_t>(i)] = {lo, hi, n};
  }
  return out;
}

double grid_value(const std::tuple<double, double, int>& axis, int i) {
  const auto& [lo, hi, n] = axis;
  return n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Safe soft-landing simulator for small bodies"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, control, manifest, ref_path, grid;
  double t_max = 0.0;
  unsigned threads = 0;

  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario");
  run_cmd->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "Output directory for telemetry and metrics");
  run_cmd->add_option("--control", control, "full | ref | ud | ud-sat")
      ->check(CLI::IsMember({"full", "ref", "ud", "ud-sat"}));
  run_cmd->add_option("--t-max", t_max, "Override the simulated time limit [s]")
      ->check(CLI::PositiveNumber);

  auto* batch_cmd = app.add_subcommand("batch", "Run every scenario listed in a manifest");
  batch_cmd->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
  batch_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* gen_cmd = app.add_subcommand("gen-ref", "Write the generated reference trajectory");
  gen_cmd->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", out_dir)->required();

  auto* val_cmd = app.add_subcommand("validate-ref", "Check a reference file against the constraints");
  val_cmd->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);
  val_cmd->add_option("file", ref_path)->required()->check(CLI::ExistingFile);

  auto* map_cmd = app.add_subcommand("gravity-map", "Export potential, gradient and model error on a grid");
  map_cmd->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);
  map_cmd->add_option("--grid", grid, "x0:x1:nx,y0:y1:ny,z0:z1:nz")->required();
  map_cmd->add_option("--out", out_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const Scenario s = load_scenario(scenario_path);
      RunOptions opts;
      if (!control.empty()) opts.control = parse_control_mode(control);
      if (t_max > 0.0) opts.t_max = t_max;
      const auto start = std::chrono::steady_clock::now();
      const RunOutput out = run(s, opts);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!out_dir.empty()) emit(out, out_dir);
      print_summary(s.name + " [" + out.result.control + "]", out.result);
      std::printf("  wall clock: %.2f s\n", wall);
      return exit_code(out.result);
    }
    if (*batch_cmd) {
      const auto outcomes = run_batch(load_manifest(manifest), threads);
      int code = 0;
      for (const auto& o : outcomes) {
        if (!o.result) {
          std::printf("%s: error: %s\n", o.entry.scenario.string().c_str(), o.error.c_str());
          code = kRuntimeError;
          continue;
        }
        print_summary(o.entry.scenario.string() + " -> " + o.entry.out_dir.string(), *o.result);
        code = std::max(code, exit_code(*o.result));
      }
      return code;
    }
    if (*gen_cmd) {
      const Scenario s = load_scenario(scenario_path);
      if (!s.reference.generate) throw ScenarioError("scenario does not declare reference.generate");
      const ReferenceTrajectory traj = generate_reference(*s.reference.generate, s.env, s.vehicle);
      save_reference(traj, out_dir);
      std::printf("wrote %zu samples to %s\n", traj.samples().size(), out_dir.c_str());
      return 0;
    }
    if (*val_cmd) {
      const Scenario s = load_scenario(scenario_path);
      const ReferenceTrajectory traj = load_reference(ref_path, s.env);
      const ReferenceReport rep = validate_reference(traj, s.constraints);
      for (std::size_t i = 0; i < 4; ++i) {
        const auto& c = rep.constraints[i];
        std::printf("%-5s min % .6g at t = %.2f s", kConstraintNames[i], c.min_value, c.min_time);
        if (c.first_violation) {
          std::printf(", violated on");
          for (const auto& [a, b] : c.violating_intervals) std::printf(" [%.2f, %.2f]", a, b);
        }
        std::printf("\n");
      }
      std::printf("hold: psi1 %.6g, psi2 %.6g, phi1 %.6g, phi2 %.6g\n", rep.hold.psi1, rep.hold.psi2,
                  rep.hold.phi1, rep.hold.phi2);
      return rep.feasible() ? 0 : 3;
    }
    if (*map_cmd) {
      const Scenario s = load_scenario(scenario_path);
      const auto axes = parse_grid(grid);
      std::FILE* f = std::fopen(out_dir.c_str(), "w");
      if (!f) throw std::runtime_error("cannot write " + out_dir);
      std::fprintf(f, "x,y,z,U,gx,gy,gz,wnorm\n");
      const GravityModel& truth = s.env.truth();
      for (int i = 0; i < std::get<2>(axes[0]); ++i) {
        for (int j = 0; j < std::get<2>(axes[1]); ++j) {
          for (int k = 0; k < std::get<2>(axes[2]); ++k) {
            const Eigen::Vector3d r(grid_value(axes[0], i), grid_value(axes[1], j),
                                    grid_value(axes[2], k));
            bool inside = false;
            for (const auto& e : s.ellipsoids) inside = inside || e.contains(r);
            if (inside) continue;
            const Eigen::Vector3d g = truth.gradient(r);
            std::fprintf(f, "%.10g,%.10g,%.10g,%.12g,%.12g,%.12g,%.12g,%.12g\n", r[0], r[1], r[2],
                         truth.potential(r), g[0], g[1], g[2], s.env.gravity.disturbance(r).norm());
          }
        }
      }
      std::fclose(f);
      return 0;
    }
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kRuntimeError;
  }
  return 0;
}
