// fdcap: capacity regions of a full-duplex link from the command line.
//
//   fdcap [region] --mode single --gamma-bm-db 30 --gamma-mb-db 30 --gamma-mm-db 0 --gamma-bb-db 0
//   fdcap compare --profile band.csv --points 21 --out results
//   fdcap improve --mode single --gamma-mm-db 0 --gamma-bb-db 0 --snr-step 2
//   fdcap synth --preset wideband --snr-db 20 --channels 52 --file band.csv

#include "fdcap/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace fdcap::cli;

struct CommonFlags {
  std::string mode = "single";
  std::string profile;
  double bm = 0, mb = 0, mm = 0, bb = 0;
  int points = 21;
  std::vector<double> rb_list;
  double eps = 1e-6;
  int restarts = 8;
  std::uint64_t seed = 42;
  int jobs = 1;
  std::string out = ".";
  std::string format = "csv";
  bool debug_hull = false;
};

void add_common(CLI::App& app, CommonFlags& f) {
  app.add_option("--mode", f.mode, "single | fixed | general-altmax | general-heuristic")
      ->check(CLI::IsMember({"single", "fixed", "general-altmax", "general-heuristic"}));
  auto* profile = app.add_option("--profile", f.profile, "per-channel gains CSV")->check(CLI::ExistingFile);
  auto* bm = app.add_option("--gamma-bm-db", f.bm, "BS->MS SNR (dB), single channel");
  auto* mb = app.add_option("--gamma-mb-db", f.mb, "MS->BS SNR (dB)");
  auto* mm = app.add_option("--gamma-mm-db", f.mm, "XINR at the MS (dB)");
  auto* bb = app.add_option("--gamma-bb-db", f.bb, "XINR at the BS (dB)");
  for (auto* o : {bm, mb, mm, bb}) o->excludes(profile);
  auto* points = app.add_option("--points", f.points, "evenly spaced sweep points")->check(CLI::Range(2, 1000000));
  app.add_option("--rb-list", f.rb_list, "explicit r_b values")->delimiter(',')->excludes(points);
  app.add_option("--eps", f.eps, "rate tolerance")->check(CLI::PositiveNumber);
  app.add_option("--restarts", f.restarts, "alternating-maximization starts")->check(CLI::PositiveNumber);
  app.add_option("--seed", f.seed, "random restart seed");
  app.add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", f.out, "output directory");
  app.add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--debug-hull", f.debug_hull, "cross-check hulls against dense samples");
}

RunConfig to_config(const CommonFlags& f, const CLI::App& app) {
  RunConfig cfg;
  cfg.mode = parse_mode(f.mode);
  const bool any_inline = app.count("--gamma-bm-db") || app.count("--gamma-mb-db") ||
                          app.count("--gamma-mm-db") || app.count("--gamma-bb-db");
  if (!f.profile.empty()) cfg.profile = f.profile;
  if (any_inline) cfg.inline_db = InlineGainsDb{f.bm, f.mb, f.mm, f.bb};
  cfg.n_points = f.points;
  cfg.rb_list = f.rb_list;
  cfg.tol.eps_rate = f.eps;
  cfg.restarts = f.restarts;
  cfg.seed = f.seed;
  cfg.jobs = f.jobs;
  cfg.out_dir = f.out;
  cfg.format = f.format == "json" ? OutputFormat::json : OutputFormat::csv;
  cfg.debug_hull = f.debug_hull;
  return cfg;
}

int report(const RunReport& r) {
  for (const auto& file : r.files) std::cout << file << '\n';
  if (!r.diagnostic.empty()) std::cerr << "fdcap: " << r.diagnostic << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity regions of a full-duplex link"};
  app.require_subcommand(0, 1);

  CommonFlags region_flags, compare_flags, improve_flags;
  auto* region = app.add_subcommand("region", "region.csv and summary.json (default)");
  add_common(*region, region_flags);
  add_common(app, region_flags);

  auto* compare = app.add_subcommand("compare", "altmax vs heuristic, compare.csv");
  add_common(*compare, compare_flags);

  auto* improve = app.add_subcommand("improve", "rate-improvement grid, improve.csv");
  add_common(*improve, improve_flags);
  SnrGrid grid;
  improve->add_option("--snr-min", grid.min_db, "lowest SNR (dB)");
  improve->add_option("--snr-max", grid.max_db, "highest SNR (dB)");
  improve->add_option("--snr-step", grid.step_db, "SNR step (dB)")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "write a synthetic K-channel profile");
  std::string preset = "wideband", file;
  double snr = 20.0, snr_mb = 0.0;
  long channels = 52;
  synth->add_option("--preset", preset, "narrowband | mid | wideband")
      ->check(CLI::IsMember({"narrowband", "mid", "wideband"}));
  synth->add_option("--snr-db", snr, "per-channel SNR at equal power (dB)");
  auto* mb_opt = synth->add_option("--snr-mb-db", snr_mb, "uplink SNR if different (dB)");
  synth->add_option("--channels", channels, "channel count")->check(CLI::Range(1L, 4096L));
  synth->add_option("--file", file, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const double up = mb_opt->count() ? snr_mb : snr;
      write_profile(file, synthetic_profile(parse_preset(preset), snr, up, channels));
      std::cout << file << '\n';
      return 0;
    }
    if (*compare) return report(run_compare(to_config(compare_flags, *compare)));
    if (*improve) return report(run_improve(to_config(improve_flags, *improve), grid));
    const CLI::App& src = *region ? *region : app;
    return report(run_region(to_config(region_flags, src)));
  } catch (const std::exception& e) {
    std::cerr << "fdcap: " << e.what() << '\n';
    return 1;
  }
}
