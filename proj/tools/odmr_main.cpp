// Command-line front end: simulate, heatmap, fit, invert, classify.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "odmr/errors.hpp"
#include "odmr/io.hpp"

namespace {

using odmr::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitComputation = 4;

// Every tunable of every subcommand, with defaults. A JSON config file sets
// values first; explicitly passed flags override it; the resolved struct is
// echoed into each output document.
struct RunConfig {
  double d_zfs_mhz = 2870.0;
  double gamma_mhz_per_mt = 28.0;
  double contrast = 0.01;
  double fwhm_mhz = 12.0;
  double baseline = 1.0;
  double intrinsic_splitting_mhz = 0.0;
  double grid_start_mhz = 2700.0;
  double grid_stop_mhz = 3040.0;
  std::size_t grid_points = 2048;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double merge_threshold_mhz = 12.0;
  double prominence = 1e-3;
  double min_separation_mhz = 6.0;
  double bmag_mt = 3.0;
  double theta_step_deg = 1.0;
  double phi_step_deg = 1.0;
  std::size_t fit_max_iterations = 200;
  double fit_gradient_tolerance = 1e-10;
  double fit_step_tolerance = 1e-12;
  double fit_initial_damping = 1e-3;

  json to_json() const {
    return json{{"d_zfs_mhz", d_zfs_mhz},
                {"gamma_mhz_per_mt", gamma_mhz_per_mt},
                {"contrast", contrast},
                {"fwhm_mhz", fwhm_mhz},
                {"baseline", baseline},
                {"intrinsic_splitting_mhz", intrinsic_splitting_mhz},
                {"grid_start_mhz", grid_start_mhz},
                {"grid_stop_mhz", grid_stop_mhz},
                {"grid_points", grid_points},
                {"noise_sigma", noise_sigma},
                {"seed", seed},
                {"merge_threshold_mhz", merge_threshold_mhz},
                {"prominence", prominence},
                {"min_separation_mhz", min_separation_mhz},
                {"bmag_mt", bmag_mt},
                {"theta_step_deg", theta_step_deg},
                {"phi_step_deg", phi_step_deg},
                {"fit_max_iterations", fit_max_iterations},
                {"fit_gradient_tolerance", fit_gradient_tolerance},
                {"fit_step_tolerance", fit_step_tolerance},
                {"fit_initial_damping", fit_initial_damping}};
  }

  void load(const json& j) {
    auto get = [&](const char* key, auto& slot) {
      if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("d_zfs_mhz", d_zfs_mhz);
    get("gamma_mhz_per_mt", gamma_mhz_per_mt);
    get("contrast", contrast);
    get("fwhm_mhz", fwhm_mhz);
    get("baseline", baseline);
    get("intrinsic_splitting_mhz", intrinsic_splitting_mhz);
    get("grid_start_mhz", grid_start_mhz);
    get("grid_stop_mhz", grid_stop_mhz);
    get("grid_points", grid_points);
    get("noise_sigma", noise_sigma);
    get("seed", seed);
    get("merge_threshold_mhz", merge_threshold_mhz);
    get("prominence", prominence);
    get("min_separation_mhz", min_separation_mhz);
    get("bmag_mt", bmag_mt);
    get("theta_step_deg", theta_step_deg);
    get("phi_step_deg", phi_step_deg);
    get("fit_max_iterations", fit_max_iterations);
    get("fit_gradient_tolerance", fit_gradient_tolerance);
    get("fit_step_tolerance", fit_step_tolerance);
    get("fit_initial_damping", fit_initial_damping);
  }

  odmr::HamiltonianParams hamiltonian() const {
    return {d_zfs_mhz, gamma_mhz_per_mt, 50.0};
  }
  odmr::LineshapeParams lineshape() const {
    return {contrast, fwhm_mhz, baseline, intrinsic_splitting_mhz};
  }
  odmr::FrequencyGrid grid() const {
    return {grid_start_mhz, grid_stop_mhz, grid_points};
  }
  odmr::PeakDetectParams detect() const {
    return {prominence, min_separation_mhz, 5};
  }
  odmr::FitOptions fit_options() const {
    return {fit_max_iterations, fit_gradient_tolerance, fit_step_tolerance,
            fit_initial_damping, false};
  }
};

json config_block(const RunConfig& cfg) { return cfg.to_json(); }

void emit(const std::string& out_path, const json& doc) {
  if (out_path.empty() || out_path == "-")
    std::cout << doc.dump(2) << "\n";
  else
    odmr::write_json_atomic(out_path, doc);
}

int run_with_error_mapping(const std::string& out_path, const RunConfig& cfg,
                           const std::function<json()>& body) {
  try {
    emit(out_path, odmr::make_document(config_block(cfg), body()));
    return kExitOk;
  } catch (const odmr::csv_format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const odmr::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const odmr::computation_error& e) {
    json err{{"type", "computation_error"}, {"message", e.what()}};
    if (dynamic_cast<const odmr::no_peaks_found*>(&e)) err["type"] = "no_peaks_found";
    if (dynamic_cast<const odmr::unpairable_dips*>(&e)) err["type"] = "unpairable_dips";
    if (dynamic_cast<const odmr::empty_candidate_set*>(&e))
      err["type"] = "empty_candidate_set";
    if (dynamic_cast<const odmr::singular_normal_equations*>(&e))
      err["type"] = "singular_normal_equations";
    emit(out_path, json{{"schema_version", 1},
                        {"config", config_block(cfg)},
                        {"error", err}});
    std::cerr << "error: " << e.what() << "\n";
    return kExitComputation;
  } catch (const odmr::invalid_argument_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble magnetometry spectrum toolkit"};
  app.require_subcommand(1);
  // Shared flags live on the top-level app; fallthrough lets them appear
  // after the subcommand name as well.
  app.fallthrough();

  RunConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")
      ->check(CLI::ExistingFile);

  // simulate ----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "synthesize a spectrum for a field");
  double bx = 0, by = 0, bz = 0, theta = 0, phi = 0, bmag = 0;
  auto* sim_bx = sim->add_option("--bx", bx, "field x component, mT");
  auto* sim_by = sim->add_option("--by", by, "field y component, mT");
  auto* sim_bz = sim->add_option("--bz", bz, "field z component, mT");
  auto* sim_bmag = sim->add_option("--bmag", bmag, "field magnitude, mT");
  auto* sim_theta = sim->add_option("--theta", theta, "polar angle, degrees");
  auto* sim_phi = sim->add_option("--phi", phi, "azimuth, degrees");
  std::string sim_out_csv = "spectrum.csv";
  std::string sim_out_json = "transitions.json";
  sim->add_option("--out-spectrum", sim_out_csv, "spectrum CSV path");
  sim->add_option("--out-transitions", sim_out_json, "transitions JSON path");

  // heatmap -----------------------------------------------------------------
  auto* hm = app.add_subcommand("heatmap", "dip-count map over field directions");
  std::string hm_out_csv = "heatmap.csv";
  std::string hm_out_meta = "heatmap_meta.json";
  std::string hm_out_svg;
  double hm_step = 0.0;
  double hm_bmag = 0.0;
  auto* hm_bmag_opt = hm->add_option("--bmag", hm_bmag, "field magnitude, mT");
  hm->add_option("--step", hm_step, "grid step for both angles, degrees");
  hm->add_option("--out-csv", hm_out_csv, "heat-map CSV path");
  hm->add_option("--out-meta", hm_out_meta, "metadata JSON path");
  hm->add_option("--svg", hm_out_svg, "optional SVG rendering path");

  // fit ---------------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "multi-Lorentzian fit of a spectrum CSV");
  std::string fit_input;
  std::string fit_out;
  std::size_t fit_n_peaks = 0;
  fit->add_option("input", fit_input, "spectrum CSV")->required();
  fit->add_option("--n-peaks", fit_n_peaks,
                  "fit exactly this many peaks (0 = detected count)");
  fit->add_option("--out", fit_out, "output JSON path (default stdout)");

  // invert ------------------------------------------------------------------
  auto* inv = app.add_subcommand("invert", "candidate fields from a spectrum");
  std::string inv_input;
  std::string inv_out;
  std::vector<double> inv_dips;
  inv->add_option("input", inv_input, "spectrum CSV");
  inv->add_option("--dips", inv_dips, "skip fitting; use these dip centers, MHz");
  inv->add_option("--out", inv_out, "output JSON path (default stdout)");

  // classify ----------------------------------------------------------------
  auto* cls = app.add_subcommand("classify", "degeneracy case of a field");
  double cbx = 0, cby = 0, cbz = 0, ctheta = 0, cphi = 0, cbmag = 0;
  auto* cls_bx = cls->add_option("--bx", cbx, "field x component, mT");
  auto* cls_by = cls->add_option("--by", cby, "field y component, mT");
  auto* cls_bz = cls->add_option("--bz", cbz, "field z component, mT");
  auto* cls_bmag = cls->add_option("--bmag", cbmag, "field magnitude, mT");
  auto* cls_theta = cls->add_option("--theta", ctheta, "polar angle, degrees");
  auto* cls_phi = cls->add_option("--phi", cphi, "azimuth, degrees");
  std::vector<double> cls_proj;
  auto* cls_projections =
      cls->add_option("--projections", cls_proj, "four signed projections, mT")
          ->expected(4);
  std::string cls_out;
  cls->add_option("--out", cls_out, "output JSON path (default stdout)");

  // Flag overrides for RunConfig fields, attached to the top level so they
  // work uniformly with every subcommand.
  double o_d = 0, o_gamma = 0, o_contrast = 0, o_fwhm = 0, o_baseline = 0;
  double o_intrinsic = 0, o_start = 0, o_stop = 0, o_sigma = 0, o_thresh = 0;
  double o_prom = 0, o_minsep = 0, o_tstep = 0, o_pstep = 0;
  std::size_t o_points = 0;
  std::uint64_t o_seed = 0;
  auto* f_d = app.add_option("--d-zfs", o_d, "zero-field splitting, MHz");
  auto* f_gamma = app.add_option("--gamma", o_gamma, "gyromagnetic ratio, MHz/mT");
  auto* f_contrast = app.add_option("--contrast", o_contrast, "dip contrast");
  auto* f_fwhm = app.add_option("--fwhm", o_fwhm, "Lorentzian FWHM, MHz");
  auto* f_baseline = app.add_option("--baseline", o_baseline, "baseline level");
  auto* f_intrinsic = app.add_option("--intrinsic-splitting", o_intrinsic,
                                     "doublet splitting per resonance, MHz");
  auto* f_start = app.add_option("--grid-start", o_start, "grid start, MHz");
  auto* f_stop = app.add_option("--grid-stop", o_stop, "grid stop, MHz");
  auto* f_points = app.add_option("--grid-points", o_points, "grid sample count");
  auto* f_sigma = app.add_option("--noise-sigma", o_sigma, "Gaussian noise sigma");
  auto* f_seed = app.add_option("--seed", o_seed, "noise RNG seed");
  auto* f_thresh = app.add_option("--threshold", o_thresh,
                                  "dip merge threshold, MHz");
  auto* f_prom = app.add_option("--prominence", o_prom, "detection prominence");
  auto* f_minsep = app.add_option("--min-separation", o_minsep,
                                  "detection min separation, MHz");
  auto* f_tstep = app.add_option("--theta-step", o_tstep, "theta step, degrees");
  auto* f_pstep = app.add_option("--phi-step", o_pstep, "phi step, degrees");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitUsage;
  }

  // Resolution order: defaults, then config file, then explicit flags.
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config '" << config_path << "'\n";
      return kExitIo;
    }
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      std::cerr << "error: config '" << config_path << "': " << e.what() << "\n";
      return kExitIo;
    }
    try {
      cfg.load(j);
    } catch (const json::exception& e) {
      std::cerr << "error: config '" << config_path << "': " << e.what() << "\n";
      return kExitUsage;
    }
  }
  if (*f_d) cfg.d_zfs_mhz = o_d;
  if (*f_gamma) cfg.gamma_mhz_per_mt = o_gamma;
  if (*f_contrast) cfg.contrast = o_contrast;
  if (*f_fwhm) cfg.fwhm_mhz = o_fwhm;
  if (*f_baseline) cfg.baseline = o_baseline;
  if (*f_intrinsic) cfg.intrinsic_splitting_mhz = o_intrinsic;
  if (*f_start) cfg.grid_start_mhz = o_start;
  if (*f_stop) cfg.grid_stop_mhz = o_stop;
  if (*f_points) cfg.grid_points = o_points;
  if (*f_sigma) cfg.noise_sigma = o_sigma;
  if (*f_seed) cfg.seed = o_seed;
  if (*f_thresh) cfg.merge_threshold_mhz = o_thresh;
  if (*f_prom) cfg.prominence = o_prom;
  if (*f_minsep) cfg.min_separation_mhz = o_minsep;
  if (*f_tstep) cfg.theta_step_deg = o_tstep;
  if (*f_pstep) cfg.phi_step_deg = o_pstep;

  const auto hamiltonian = cfg.hamiltonian();

  // Resolve a field from cartesian/spherical flag groups. Returns false and
  // prints a message when the combination is invalid.
  auto resolve_field = [&](bool has_cart, bool all_cart, bool has_sph,
                           bool all_sph, double x, double y, double z,
                           double mag, double th, double ph,
                           odmr::FieldVector& out) {
    if (has_cart && has_sph) {
      std::cerr << "error: give either --bx/--by/--bz or --bmag/--theta/--phi, "
                   "not both\n";
      return false;
    }
    if (has_cart) {
      if (!all_cart) {
        std::cerr << "error: --bx, --by and --bz must all be given\n";
        return false;
      }
      out = {x, y, z};
      return true;
    }
    if (has_sph) {
      if (!all_sph) {
        std::cerr << "error: --bmag, --theta and --phi must all be given\n";
        return false;
      }
      out = odmr::spherical_to_cartesian({mag, th, ph});
      return true;
    }
    std::cerr << "error: a field is required (--bx/--by/--bz or "
                 "--bmag/--theta/--phi)\n";
    return false;
  };

  if (sim->parsed()) {
    const bool has_cart = *sim_bx || *sim_by || *sim_bz;
    const bool all_cart = *sim_bx && *sim_by && *sim_bz;
    const bool has_sph = *sim_bmag || *sim_theta || *sim_phi;
    const bool all_sph = *sim_bmag && *sim_theta && *sim_phi;
    odmr::FieldVector field;
    if (!resolve_field(has_cart, all_cart, has_sph, all_sph, bx, by, bz, bmag,
                       theta, phi, field))
      return kExitUsage;

    return run_with_error_mapping(sim_out_json, cfg, [&]() -> json {
      std::optional<odmr::NoiseModel> noise;
      if (cfg.noise_sigma > 0.0) noise = odmr::NoiseModel{cfg.noise_sigma, cfg.seed};
      auto spec = odmr::synthesize_field_spectrum(field, hamiltonian,
                                                  cfg.lineshape(), cfg.grid(), noise);
      odmr::write_spectrum_csv(sim_out_csv, spec);

      const auto proj = odmr::project_field(field);
      json result{
          {"field", field},
          {"projections", proj},
          {"first_order", odmr::first_order_transitions(proj, hamiltonian)},
          {"exact", odmr::exact_transitions(field, hamiltonian)},
          {"case", odmr::classify_case(proj, hamiltonian, cfg.merge_threshold_mhz)},
          {"dip_count",
           odmr::count_dips(field, hamiltonian, cfg.merge_threshold_mhz)},
          {"grid_too_narrow", spec.grid_too_narrow},
          {"spectrum_csv", sim_out_csv}};
      return result;
    });
  }

  if (hm->parsed()) {
    if (*hm_bmag_opt) cfg.bmag_mt = hm_bmag;
    if (hm_step > 0.0) {
      cfg.theta_step_deg = hm_step;
      cfg.phi_step_deg = hm_step;
    }
    return run_with_error_mapping(hm_out_meta, cfg, [&]() -> json {
      const auto map = odmr::dip_count_map(cfg.bmag_mt, cfg.theta_step_deg,
                                           cfg.phi_step_deg, hamiltonian,
                                           cfg.merge_threshold_mhz);
      odmr::write_heatmap_csv(hm_out_csv, map);
      if (!hm_out_svg.empty())
        odmr::write_text_atomic(hm_out_svg, odmr::heatmap_svg(map));

      int min_count = 9, max_count = 0;
      for (int c : map.counts) {
        min_count = std::min(min_count, c);
        max_count = std::max(max_count, c);
      }
      json result{{"magnitude_mt", map.magnitude_mt},
                  {"threshold_mhz", map.threshold_mhz},
                  {"theta_points", map.theta_axis.values.size()},
                  {"phi_points", map.phi_axis.values.size()},
                  {"min_count", min_count},
                  {"max_count", max_count},
                  {"csv", hm_out_csv}};
      if (!hm_out_svg.empty()) result["svg"] = hm_out_svg;
      return result;
    });
  }

  if (fit->parsed()) {
    return run_with_error_mapping(fit_out, cfg, [&]() -> json {
      auto spec = odmr::read_spectrum_csv(fit_input);
      auto guesses = odmr::detect_peaks(spec, cfg.detect());
      if (fit_n_peaks > 0) {
        // Trim to the most prominent or split the deepest until the count fits.
        std::sort(guesses.begin(), guesses.end(),
                  [](const auto& a, const auto& b) { return a.depth > b.depth; });
        if (guesses.size() > fit_n_peaks) guesses.resize(fit_n_peaks);
        while (guesses.size() < fit_n_peaks) {
          auto g = guesses.front();
          guesses.front().center_mhz -= g.fwhm_mhz / 4.0;
          guesses.front().depth = g.depth / 2.0;
          g.center_mhz += g.fwhm_mhz / 4.0;
          g.depth /= 2.0;
          guesses.push_back(g);
          std::sort(guesses.begin(), guesses.end(),
                    [](const auto& a, const auto& b) { return a.depth > b.depth; });
        }
        std::sort(guesses.begin(), guesses.end(), [](const auto& a, const auto& b) {
          return a.center_mhz < b.center_mhz;
        });
      }
      const auto result = odmr::fit_multi_lorentzian(spec, guesses, cfg.fit_options());
      return json{{"input", fit_input},
                  {"n_peaks", result.peaks.size()},
                  {"fit", result}};
    });
  }

  if (inv->parsed()) {
    if (inv_input.empty() == inv_dips.empty()) {
      std::cerr << "error: give a spectrum CSV or --dips, not both or neither\n";
      return kExitUsage;
    }
    return run_with_error_mapping(inv_out, cfg, [&]() -> json {
      odmr::InversionConfig icfg;
      icfg.hamiltonian = hamiltonian;
      icfg.detect = cfg.detect();
      icfg.fit = cfg.fit_options();
      icfg.magnitudes = {cfg.merge_threshold_mhz, 0.0};

      if (!inv_dips.empty()) {
        const auto sets =
            odmr::dips_to_magnitudes(inv_dips, hamiltonian, icfg.magnitudes);
        json jsets = json::array();
        std::vector<odmr::FieldCandidate> all;
        for (const auto& ms : sets) {
          jsets.push_back(std::vector<double>(ms.begin(), ms.end()));
          try {
            for (const auto& c : odmr::enumerate_candidates(ms, icfg.candidates))
              all.push_back(c);
          } catch (const odmr::empty_candidate_set&) {
          }
        }
        if (all.empty())
          throw odmr::empty_candidate_set(
              "no magnitude multiset admits a sum-zero assignment");
        return json{{"dip_centers_mhz", inv_dips},
                    {"magnitude_sets_mt", jsets},
                    {"candidates", all},
                    {"candidate_count", all.size()}};
      }

      auto spec = odmr::read_spectrum_csv(inv_input);
      const auto result = odmr::invert_spectrum(spec, icfg);
      json j;
      odmr::to_json(j, result);
      j["input"] = inv_input;
      return j;
    });
  }

  if (cls->parsed()) {
    return run_with_error_mapping(cls_out, cfg, [&]() -> json {
      odmr::ProjectionSet proj;
      json result;
      if (*cls_projections) {
        if (*cls_bx || *cls_by || *cls_bz || *cls_bmag || *cls_theta || *cls_phi)
          throw odmr::invalid_argument_error(
              "--projections excludes the field flags");
        proj = odmr::ProjectionSet::from(
            {cls_proj[0], cls_proj[1], cls_proj[2], cls_proj[3]});
        // Validates the sum-zero constraint; throws inconsistent_projections.
        const auto field = odmr::reconstruct_field(proj);
        result["field"] = field;
      } else {
        const bool has_cart = *cls_bx || *cls_by || *cls_bz;
        const bool all_cart = *cls_bx && *cls_by && *cls_bz;
        const bool has_sph = *cls_bmag || *cls_theta || *cls_phi;
        const bool all_sph = *cls_bmag && *cls_theta && *cls_phi;
        odmr::FieldVector field;
        if (!resolve_field(has_cart, all_cart, has_sph, all_sph, cbx, cby, cbz,
                           cbmag, ctheta, cphi, field))
          throw odmr::invalid_argument_error("field flags are incomplete");
        proj = odmr::project_field(field);
        result["field"] = field;
      }
      result["projections"] = proj;
      result["case"] =
          odmr::classify_case(proj, hamiltonian, cfg.merge_threshold_mhz);
      result["first_order"] = odmr::first_order_transitions(proj, hamiltonian);
      const auto f = odmr::first_order_transitions(proj, hamiltonian).all_frequencies();
      result["dip_count"] = odmr::cluster_dips(
          std::vector<double>(f.begin(), f.end()), cfg.merge_threshold_mhz).size();
      return result;
    });
  }

  return kExitUsage;
}
