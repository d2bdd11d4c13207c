#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scb/scenario.hpp"

namespace scb {

enum class RunStatus { Landed, Timeout, PropellantExhausted, FilterInfeasible, GuardTripped };

std::string to_string(RunStatus status);
RunStatus parse_run_status(const std::string& name);

struct LandingCheck {
  bool met = false;
  double position_error = 0.0;  // |r - r_f|
  double altitude_error = 0.0;  // e_s . (r - r_f)
  double speed_error = 0.0;     // |v - v_f|
  bool position_ok = false;
  bool altitude_ok = false;
  bool speed_ok = false;
};

LandingCheck landing_check(const SpacecraftState& x, const Scenario& s);

/// Values the monitor sees at one control instant. CBF entries are NaN when
/// they could not be evaluated (baseline modes near the cone apex).
struct MonitorRecord {
  double t = 0.0;
  double psi1 = 0.0;
  double psi2 = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double h = 0.0;
  double h11 = 0.0;
  double h22 = 0.0;
  double h30 = 0.0;
  double h40 = 0.0;
  double phi = 0.0;
  double lambda = 0.0;
  bool landing_instant = false;
};

struct ConstraintStat {
  double min_value = 0.0;
  double min_time = 0.0;
  std::optional<double> first_violation;
  int violation_count = 0;

  bool operator==(const ConstraintStat&) const = default;
};

inline constexpr double kViolationTolerance = 1e-6;

/// Running minima and violation bookkeeping. psi1 is not counted at the
/// landing instant itself; its value there is kept separately.
class ConstraintMonitor {
 public:
  void update(const MonitorRecord& rec);

  const std::map<std::string, ConstraintStat>& stats() const { return stats_; }
  std::optional<double> terminal_psi1() const { return terminal_psi1_; }
  std::vector<std::string> violated() const;

  static const std::vector<std::string>& monitored();

 private:
  void note(const std::string& name, double value, double t);

  std::map<std::string, ConstraintStat> stats_;
  std::optional<double> terminal_psi1_;
};

struct RunResult {
  RunStatus status = RunStatus::Timeout;
  std::string control = "full";
  double t_end = 0.0;
  std::optional<double> t_l;
  double position_error = 0.0;
  double altitude_error = 0.0;
  double speed_error = 0.0;
  std::map<std::string, ConstraintStat> constraints;
  std::vector<std::string> violations;
  std::optional<double> terminal_psi1;
  double propellant_used = 0.0;
  int control_steps = 0;
  double intervention_fraction = 0.0;
  double max_intervention = 0.0;
  std::string message;
  std::vector<double> final_state;  // r, v, m at t_end (or at the failure)

  bool landed() const { return status == RunStatus::Landed; }
  bool operator==(const RunResult&) const = default;
};

void to_json(nlohmann::json& j, const RunResult& r);
void from_json(const nlohmann::json& j, RunResult& r);

/// Control-rate telemetry: one row per control instant.
struct Telemetry {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

const std::vector<std::string>& telemetry_columns();

struct RunOptions {
  std::optional<ControlMode> control;
  std::optional<double> t_max;
  bool record = true;
};

struct RunOutput {
  RunResult result;
  Telemetry telemetry;
};

/// Sampled-data closed loop: control at the control rate with zero-order
/// held surrogate control, RK4 over the plant, thrust lag, and observer.
RunOutput run(const Scenario& s, const RunOptions& opts = {});
RunOutput run(const Scenario& s, const ReferenceTrajectory& ref, const RunOptions& opts = {});

/// Writes telemetry.csv, metrics.json and plots.gp into `out_dir`.
void emit(const RunOutput& out, const std::filesystem::path& out_dir);
void write_telemetry_csv(const Telemetry& t, const std::filesystem::path& path);
std::string plot_script(const std::string& csv_name = "telemetry.csv");

struct BatchEntry {
  std::filesystem::path scenario;
  std::filesystem::path out_dir;
  RunOptions options;
};

struct BatchOutcome {
  BatchEntry entry;
  std::optional<RunResult> result;
  std::string error;
};

/// Manifest: {"runs": [{"scenario": path, "out": dir, "control": mode, "t_max": s}, ...]}.
std::vector<BatchEntry> load_manifest(const std::filesystem::path& path);

/// Executes independent runs on up to `threads` workers (0: hardware
/// concurrency); results come back in manifest order.
std::vector<BatchOutcome> run_batch(const std::vector<BatchEntry>& entries, unsigned threads = 0);

/// CLI-style exit code for a finished run.
int exit_code(const RunResult& r);

}  // namespace scb
