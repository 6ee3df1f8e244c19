// Command-line driver: Monte Carlo simulation, log replay, and analytic
// verification for the SE2(3) navigation filters.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "se23nav/harness.hpp"

namespace {

using namespace se23nav;

std::vector<ErrorDef> parse_filters(const std::string& csv) {
  std::vector<ErrorDef> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(start, comma - start);
    if (!tok.empty()) out.push_back(filter_from_name(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::runtime_error("no filters given");
  return out;
}

void print_summaries(const Scenario& sc, const std::vector<RunResult>& results) {
  std::printf("scenario %s: %d run(s), aiding %s, terminal RMS over final 10 s\n",
              sc.name.c_str(), sc.runs, sc.aiding == AidingType::gps ? "gps" : "odometer");
  std::printf("%-6s %12s %12s %12s %12s %12s %12s %12s %12s %12s\n", "filter", "pitch[deg]",
              "roll[deg]", "yaw[deg]", "lat[m]", "lon[m]", "h[m]", "vn[m/s]", "ve[m/s]",
              "vd[m/s]");
  for (const FilterSummary& s : summarize(results)) {
    std::printf("%-6s %12.5g %12.5g %12.5g %12.5g %12.5g %12.5g %12.5g %12.5g %12.5g\n",
                filter_name(s.def), s.terminal_att_rms_deg[0], s.terminal_att_rms_deg[1],
                s.terminal_att_rms_deg[2], s.terminal_pos_rms_m[0], s.terminal_pos_rms_m[1],
                s.terminal_pos_rms_m[2], s.terminal_vel_rms[0], s.terminal_vel_rms[1],
                s.terminal_vel_rms[2]);
    std::printf(
        "       covariance: psd_ok=%d worst_eig_ratio=%.3g max_asymmetry=%.3g "
        "feedback_residual=%.3g epochs=%llu updates=%llu eig_fallbacks=%llu\n",
        s.hygiene.psd_ok ? 1 : 0, s.hygiene.worst_eig_ratio, s.hygiene.max_asymmetry,
        s.hygiene.max_feedback_residual,
        static_cast<unsigned long long>(s.hygiene.epochs),
        static_cast<unsigned long long>(s.hygiene.updates),
        static_cast<unsigned long long>(s.hygiene.eig_fallbacks));
  }
}

int run_verify(int pairs, int states, std::uint64_t seed) {
  bool ok = true;
  const GroupAffineReport ga = verify_group_affine(pairs, seed);
  const bool ga_ok = ga.max_transformed < 1e-9 && ga.min_classic > 1e-3;
  ok = ok && ga_ok;
  std::printf("group-affine (%d pairs): transformed max residual %.3g (< 1e-9), "
              "classic min residual %.3g (> 1e-3)  [%s]\n",
              pairs, ga.max_transformed, ga.min_classic, ga_ok ? "ok" : "FAIL");

  const LogLinearityReport ll = verify_log_linearity();
  const bool ll_ok = ll.right < 1e-6 && ll.left < 1e-6 && ll.so > 1e-2;
  ok = ok && ll_ok;
  std::printf("log-linearity (30 deg errors, 60 s): right %.3g, left %.3g (< 1e-6), "
              "additive %.3g (> 1e-2)  [%s]\n",
              ll.right, ll.left, ll.so, ll_ok ? "ok" : "FAIL");

  const JacobianReport jr = verify_jacobians(states, seed);
  const bool jr_ok = jr.max_error() < 1e-4;
  std::printf("jacobians (%d states, eps 1e-5): F right/left/so %.3g %.3g %.3g, "
              "H gps %.3g %.3g %.3g, H odo %.3g %.3g %.3g (< 1e-4)  [%s]\n",
              states, jr.f_right, jr.f_left, jr.f_so, jr.h_gps_right, jr.h_gps_left,
              jr.h_gps_so, jr.h_odo_right, jr.h_odo_left, jr.h_odo_so,
              jr_ok ? "ok" : "FAIL");
  ok = ok && jr_ok;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SE2(3) invariant-filter navigation benchmark"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo simulation of a scenario");
  std::string sim_scenario, sim_filters, sim_out = "out", sim_export_dir;
  int sim_runs = -1, sim_export_run = 0;
  std::int64_t sim_seed = -1;
  sim->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
  sim->add_option("--runs", sim_runs, "override run count");
  sim->add_option("--seed", sim_seed, "override base seed");
  sim->add_option("--filters", sim_filters, "comma list: rse,lse,so");
  sim->add_option("--out", sim_out, "output directory for CSV results");
  sim->add_option("--export-logs", sim_export_dir, "also export replay logs to this directory");
  sim->add_option("--export-run", sim_export_run, "run index for --export-logs");

  // replay
  auto* rep = app.add_subcommand("replay", "run filters over logged data");
  std::string rep_scenario, rep_imu, rep_gps, rep_odo, rep_ref, rep_filters, rep_out = "out";
  int rep_run = 0;
  rep->add_option("--scenario", rep_scenario, "scenario JSON file")->required();
  rep->add_option("--imu", rep_imu, "IMU log CSV")->required();
  rep->add_option("--ref", rep_ref, "reference trajectory CSV")->required();
  rep->add_option("--gps", rep_gps, "GPS log CSV");
  rep->add_option("--odo", rep_odo, "odometer log CSV");
  rep->add_option("--run", rep_run, "run index the logs were exported from");
  rep->add_option("--filters", rep_filters, "comma list: rse,lse,so");
  rep->add_option("--out", rep_out, "output directory for CSV results");

  // verify
  auto* ver = app.add_subcommand("verify", "analytic model checks");
  int ver_pairs = 1000, ver_states = 100;
  std::uint64_t ver_seed = 12345;
  ver->add_option("--pairs", ver_pairs, "random group-element pairs");
  ver->add_option("--states", ver_states, "random linearization points");
  ver->add_option("--seed", ver_seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      Scenario sc = load_scenario(sim_scenario);
      if (sim_runs > 0) sc.runs = sim_runs;
      if (sim_seed >= 0) sc.seed = static_cast<std::uint64_t>(sim_seed);
      if (!sim_filters.empty()) sc.filters = parse_filters(sim_filters);
      const std::vector<RunResult> results = run_scenario(sc);
      write_results_csv(sc, results, sim_out);
      print_summaries(sc, results);
      if (!sim_export_dir.empty()) {
        export_logs(sc, sim_export_run, sim_export_dir);
        std::printf("exported replay logs for run %d to %s\n", sim_export_run,
                    sim_export_dir.c_str());
      }
      std::printf("results written to %s\n", sim_out.c_str());
      return 0;
    }
    if (rep->parsed()) {
      Scenario sc = load_scenario(rep_scenario);
      if (!rep_filters.empty()) sc.filters = parse_filters(rep_filters);
      ReplayPaths paths;
      paths.imu = rep_imu;
      paths.gps = rep_gps;
      paths.odo = rep_odo;
      paths.ref = rep_ref;
      const std::vector<RunResult> results = replay_logs(sc, paths, rep_run);
      write_results_csv(sc, results, rep_out);
      print_summaries(sc, results);
      std::printf("results written to %s\n", rep_out.c_str());
      return 0;
    }
    return run_verify(ver_pairs, ver_states, ver_seed);
  } catch (const std::exception& e) {
    std::cerr << "ERROR " << e.what() << "\n";
    return 1;
  }
}
