// Command-line front end: tbf <command> [--config file] [overrides]
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "tbf/error.hpp"
#include "tbf/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  std::optional<int> samples;
  std::optional<int> bootstrap;
  std::optional<double> dt;
  std::optional<double> width;
  std::optional<double> peak_geff_mhz;
  std::optional<double> kappa_in_hz;
  bool lossless = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "INI parameter file (built-in defaults when omitted)");
  cmd->add_option("--out", f.out, "Output directory (default: [run] output_dir, else ./out)");
  cmd->add_option("--seed", f.seed, "RNG seed; overrides TBF_SEED and the config");
  cmd->add_flag("--paper-scale", f.paper_scale, "10^4 samples per setting and 250 bootstrap resamples");
  cmd->add_option("--samples", f.samples, "Samples per measurement setting");
  cmd->add_option("--bootstrap", f.bootstrap, "Bootstrap resamples (0 disables)");
  cmd->add_option("--dt", f.dt, "Integration step in seconds");
  cmd->add_option("--width", f.width, "Coupling pulse width in seconds");
  cmd->add_option("--peak-geff-mhz", f.peak_geff_mhz, "Peak effective coupling g_eff / 2pi in MHz");
  cmd->add_option("--kappa-in-hz", f.kappa_in_hz, "Internal cavity loss kappa_in / 2pi in Hz");
  cmd->add_flag("--lossless", f.lossless, "Disable every decoherence channel");
}

tbf::ExperimentConfig resolve(const CommonFlags& f) {
  tbf::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = tbf::load_experiment_config(tbf::ConfigDocument::load(f.config));
  tbf::apply_seed_environment(cfg);
  if (f.seed) cfg.seed = *f.seed;
  if (f.paper_scale) {
    cfg.samples_per_setting = 10000;
    cfg.bootstrap = 250;
  }
  if (f.samples) {
    if (*f.samples < 1) throw tbf::ConfigError("--samples must be positive");
    cfg.samples_per_setting = *f.samples;
  }
  if (f.bootstrap) {
    if (*f.bootstrap < 0 || *f.bootstrap == 1) throw tbf::ConfigError("--bootstrap must be 0 or at least 2");
    cfg.bootstrap = *f.bootstrap;
  }
  if (f.dt) {
    if (!(*f.dt > 0.0)) throw tbf::ConfigError("--dt must be positive");
    cfg.dt = *f.dt;
  }
  if (f.width) {
    if (!(*f.width > 0.0)) throw tbf::ConfigError("--width must be positive");
    cfg.pulse.width = *f.width;
  }
  if (f.peak_geff_mhz) {
    if (!(*f.peak_geff_mhz > 0.0)) throw tbf::ConfigError("--peak-geff-mhz must be positive");
    cfg.pulse.peak_geff = tbf::hz_to_angular(*f.peak_geff_mhz * 1e6);
  }
  if (f.kappa_in_hz) {
    if (!(*f.kappa_in_hz >= 0.0)) throw tbf::ConfigError("--kappa-in-hz must be non-negative");
    cfg.system.kappa_in = tbf::hz_to_angular(*f.kappa_in_hz);
  }
  if (f.lossless) cfg.system = tbf::lossless(cfg.system);
  if (!f.out.empty()) cfg.output_dir = f.out;
  return cfg;
}

tbf::InitialState parse_init(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw tbf::ConfigError("--init expects three real amplitudes c0,c1,c2, got '" + text + "'");
    }
  }
  if (v.size() != 3) throw tbf::ConfigError("--init expects three real amplitudes c0,c1,c2, got '" + text + "'");
  tbf::InitialState s{v[0], v[1], v[2]};
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw tbf::ConfigError(e.what());
  }
  return s;
}

void print_files(const std::filesystem::path& dir, const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << "  wrote " << (dir / f).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-bin photon generation and tomography toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TBF_VERSION);

  CommonFlags gen_f, eff_f, tomo_f, phase_f, chirp_f;

  auto* gen = app.add_subcommand("generate", "Two-bin emission trace for an initial qubit-cavity state");
  add_common(gen, gen_f);
  std::string init_text = "0.7071067811865476,0.5,0.5";
  gen->add_option("--init", init_text, "Initial amplitudes c0,c1,c2 of |g0>, |e0>, |f0>");

  auto* eff = app.add_subcommand("efficiency", "Single-bin generation efficiency");
  add_common(eff, eff_f);

  auto* tomo = app.add_subcommand("tomography", "Sample, reconstruct and score one state");
  add_common(tomo, tomo_f);
  std::string state_text = "timebin:+";
  std::string drift_text = "none";
  bool loss_correct = false;
  bool want_wigner = false;
  std::optional<double> eta;
  tomo->add_option("--state", state_text, "timebin:<c>, singlerail:<c>, transmon:<c> (c in 0,1,+,-,+i,-i) or fock:<n>");
  tomo->add_option("--drift", drift_text, "Common phase drift: none or per-shot-uniform")
      ->check(CLI::IsMember({"none", "per-shot-uniform"}));
  tomo->add_flag("--loss-correct", loss_correct, "Project onto the single-photon subspace (time-bin only)");
  tomo->add_option("--eta", eta, "Overall efficiency; replaces eta_gen * eta_meas");
  tomo->add_flag("--wigner", want_wigner, "Write the Wigner function of the reconstruction (single mode)");

  auto* phase = app.add_subcommand("phase-reference", "Shared versus separate clock for single-rail and time-bin |+>");
  add_common(phase, phase_f);

  auto* chirp = app.add_subcommand("chirp-sweep", "Ground-state population versus chirp coefficient");
  add_common(chirp, chirp_f);
  std::optional<double> c_stark_mhz;
  double sweep_min = -3.5, sweep_max = 1.5, sweep_step = 0.05;
  chirp->add_option("--c-stark-mhz", c_stark_mhz, "Injected Stark coefficient / 2pi in MHz (default: config)");
  chirp->add_option("--sweep-min", sweep_min, "Lowest chirp coefficient / 2pi in MHz");
  chirp->add_option("--sweep-max", sweep_max, "Highest chirp coefficient / 2pi in MHz");
  chirp->add_option("--sweep-step", sweep_step, "Sweep step / 2pi in MHz");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      const auto cfg = resolve(gen_f);
      const auto init = parse_init(init_text);
      const auto r = tbf::cmd_generate(cfg, init, cfg.output_dir);
      std::cout << "eta_gen " << r.efficiency.eta_gen << "  early energy " << r.early_energy << "  late energy "
                << r.late_energy << '\n';
      print_files(cfg.output_dir, r.files);
    } else if (eff->parsed()) {
      const auto cfg = resolve(eff_f);
      const auto r = tbf::cmd_efficiency(cfg, cfg.output_dir);
      std::cout << "eta_gen " << r.report.eta_gen << "  P_e0_sc " << r.report.p_e0_sc << "  (" << r.runtime_s
                << " s)\n";
      print_files(cfg.output_dir, r.files);
    } else if (tomo->parsed()) {
      const auto cfg = resolve(tomo_f);
      tbf::TomographyRequest req;
      req.state = tbf::StateSpec::parse(state_text);
      req.per_shot_drift = drift_text == "per-shot-uniform";
      req.loss_correct = loss_correct;
      req.eta = eta;
      req.wigner = want_wigner;
      const auto r = tbf::cmd_tomography(cfg, req, cfg.output_dir);
      std::cout << "fidelity " << r.run.fidelity;
      if (!r.run.fidelity_bootstrap.sd.empty()) std::cout << " +- " << r.run.fidelity_bootstrap.sd[0];
      if (r.wigner_origin) std::cout << "  W(0,0) " << *r.wigner_origin;
      std::cout << '\n';
      print_files(cfg.output_dir, r.files);
    } else if (phase->parsed()) {
      const auto cfg = resolve(phase_f);
      const auto r = tbf::cmd_phase_reference(cfg, cfg.output_dir);
      for (const auto& row : r.rows) {
        std::cout << row.encoding << " / " << row.clock << ": " << row.fidelity << " +- " << row.sd << '\n';
      }
      print_files(cfg.output_dir, r.files);
    } else if (chirp->parsed()) {
      auto cfg = resolve(chirp_f);
      tbf::ChirpSweepRequest req;
      req.c_stark = c_stark_mhz ? tbf::hz_to_angular(*c_stark_mhz * 1e6) : cfg.stark_coeff;
      req.min = tbf::hz_to_angular(sweep_min * 1e6);
      req.max = tbf::hz_to_angular(sweep_max * 1e6);
      req.step = tbf::hz_to_angular(sweep_step * 1e6);
      const auto r = tbf::cmd_chirp_sweep(cfg, req, cfg.output_dir);
      std::cout << "argmax C_ch / 2pi = " << tbf::angular_to_hz(r.argmax) * 1e-6 << " MHz\n";
      print_files(cfg.output_dir, r.files);
    }
  } catch (const tbf::ConfigError& e) {
    std::cerr << "tbf: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "tbf: invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const tbf::NumericalError& e) {
    std::cerr << "tbf: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "tbf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
