#include "tbf/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "tbf/error.hpp"

namespace tbf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int require_int(const ConfigDocument& doc, const std::string& section, const std::string& key, int fallback) {
  const auto v = doc.get_double(section, key);
  if (!v) return fallback;
  if (*v != std::floor(*v) || std::abs(*v) > 1e9) {
    throw ConfigError("value of '" + key + "' in [" + section + "] must be an integer");
  }
  return static_cast<int>(*v);
}

double optional_double(const ConfigDocument& doc, const std::string& section, const std::string& key, double fallback) {
  return doc.get_double(section, key).value_or(fallback);
}

std::uint64_t parse_seed(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    throw ConfigError(where + " must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

void check_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(c.pulse.width > 0.0)) fail("pulse width must be positive");
  if (!(c.pulse.peak_geff >= 0.0)) fail("coupling peak must be non-negative");
  if (!(c.bin_separation > 0.0)) fail("bin separation must be positive");
  if (!(c.control_width > 0.0)) fail("control pulse width must be positive");
  if (!(c.dt > 0.0)) fail("integration step must be positive");
  if (!(c.window > 0.0)) fail("integration window must be positive");
  if (c.samples_per_setting < 1) fail("samples_per_setting must be at least 1");
  if (c.phases < 1) fail("phases must be at least 1");
  if (!(c.eta_meas > 0.0 && c.eta_meas <= 1.0)) fail("eta_meas must lie in (0, 1]");
  if (!(c.eta_gen > 0.0 && c.eta_gen <= 1.0)) fail("eta_gen must lie in (0, 1]");
  if (c.cutoff < 1 || c.cutoff > 12) fail("cutoff must lie in [1, 12]");
  if (c.bootstrap < 0 || c.bootstrap == 1) fail("bootstrap must be 0 (off) or at least 2");
  if (c.bins < 1) fail("bins must be at least 1");
  if (!(c.q_max > 0.0)) fail("q_max must be positive");
}

void finish(const ExperimentConfig& cfg, const std::string& command, const std::filesystem::path& out,
            std::vector<std::string>& files, Clock::time_point start) {
  RunManifest manifest;
  manifest.command = command;
  manifest.seed = cfg.seed;
  manifest.config = cfg.to_json();
  manifest.wall_clock_s = seconds_since(start);
  manifest.write(out, files);
  files.push_back("manifest.json");
}

Json bootstrap_json(const BootstrapResult& b) {
  if (b.resamples == 0) return Json{{"resamples", 0}};
  return Json{{"resamples", b.resamples}, {"mean", b.mean[0]}, {"sd", b.sd[0]}, {"lo3", b.lo3[0]}, {"hi3", b.hi3[0]}};
}

double bootstrap_sd(const BootstrapResult& b) { return b.sd.empty() ? 0.0 : b.sd[0]; }

}  // namespace

DynamicsOptions ExperimentConfig::dynamics_options() const {
  DynamicsOptions o;
  o.dt = dt;
  o.frame = frame;
  if (stark_coeff != 0.0) {
    if (!(pulse.peak_geff > 0.0)) throw ConfigError("Stark injection needs a non-zero coupling peak");
    o.stark = StarkInjection{stark_coeff, pulse.peak_geff};
  }
  return o;
}

MeasurementSettings ExperimentConfig::measurement_settings() const {
  MeasurementSettings s;
  s.phases = uniform_phases(phases);
  s.samples_per_setting = samples_per_setting;
  s.eta_meas = eta_meas;
  s.bins = Binning{q_max, bins};
  s.seed = seed;
  return s;
}

TomographyOptions ExperimentConfig::tomography_options() const {
  TomographyOptions o;
  o.settings = measurement_settings();
  o.cutoff = cutoff;
  o.bootstrap = bootstrap;
  return o;
}

Json ExperimentConfig::to_json() const {
  const auto hz = [](double w) { return angular_to_hz(w); };
  return Json{
      {"system",
       {{"omega_c_hz", hz(system.omega_c)},
        {"omega_c_g_hz", hz(system.omega_c_g)},
        {"omega_ge_hz", hz(system.omega_ge)},
        {"omega_ef_hz", hz(system.omega_ef)},
        {"alpha_hz", hz(system.alpha)},
        {"g_hz", hz(system.g)},
        {"kappa_ex_hz", hz(system.kappa_ex)},
        {"kappa_in_hz", hz(system.kappa_in)},
        {"t1_ge_s", system.t1_ge},
        {"t2_ge_s", system.t2_ge},
        {"t1_ef_s", system.t1_ef},
        {"t2_ef_s", system.t2_ef}}},
      {"pulse",
       {{"width_s", pulse.width},
        {"peak_geff_hz", hz(pulse.peak_geff)},
        {"chirp_coeff_hz", hz(pulse.chirp_coeff)},
        {"stark_coeff_hz", hz(stark_coeff)},
        {"phase_offset_rad", pulse.phase_offset},
        {"bin_separation_s", bin_separation},
        {"control_width_s", control_width},
        {"beta_ge", beta_ge},
        {"beta_ef", beta_ef}}},
      {"dynamics", {{"dt_s", dt}, {"window_s", window}, {"frame", frame == Frame::Literal ? "literal" : "interaction"}}},
      {"tomography",
       {{"samples_per_setting", samples_per_setting},
        {"phases", phases},
        {"eta_meas", eta_meas},
        {"eta_gen", eta_gen},
        {"cutoff", cutoff},
        {"bootstrap", bootstrap},
        {"bins", bins},
        {"q_max", q_max}}},
      {"run", {{"seed", seed}, {"output_dir", output_dir.string()}}},
  };
}

ExperimentConfig load_experiment_config(const ConfigDocument& doc) {
  ExperimentConfig c;
  if (doc.has_section("system")) c.system = load_system_params(doc);
  if (doc.has_section("lo")) {
    c.lo = load_lo_frequencies(doc);
    c.lo_tolerance = optional_double(doc, "lo", "tolerance", c.lo_tolerance);
    validate_lo_matching(*c.lo, c.lo_tolerance);
  }

  const std::string p = "pulse";
  c.pulse.width = optional_double(doc, p, "width_s", c.pulse.width);
  c.pulse.peak_geff = hz_to_angular(optional_double(doc, p, "peak_geff_hz", angular_to_hz(c.pulse.peak_geff)));
  c.pulse.chirp_coeff = hz_to_angular(optional_double(doc, p, "chirp_coeff_hz", angular_to_hz(c.pulse.chirp_coeff)));
  c.stark_coeff = hz_to_angular(optional_double(doc, p, "stark_coeff_hz", angular_to_hz(c.stark_coeff)));
  c.pulse.phase_offset = optional_double(doc, p, "phase_offset_rad", c.pulse.phase_offset);
  c.bin_separation = optional_double(doc, p, "bin_separation_s", c.bin_separation);
  c.control_width = optional_double(doc, p, "control_width_s", c.control_width);
  c.beta_ge = optional_double(doc, p, "beta_ge", c.beta_ge);
  c.beta_ef = optional_double(doc, p, "beta_ef", c.beta_ef);

  c.dt = optional_double(doc, "dynamics", "dt_s", c.dt);
  c.window = optional_double(doc, "dynamics", "window_s", c.window);
  if (const auto frame = doc.get("dynamics", "frame")) {
    if (*frame == "interaction") {
      c.frame = Frame::Interaction;
    } else if (*frame == "literal") {
      c.frame = Frame::Literal;
    } else {
      throw ConfigError("dynamics frame must be 'interaction' or 'literal', got '" + *frame + "'");
    }
  }

  const std::string t = "tomography";
  c.samples_per_setting = require_int(doc, t, "samples_per_setting", c.samples_per_setting);
  c.phases = require_int(doc, t, "phases", c.phases);
  c.eta_meas = optional_double(doc, t, "eta_meas", c.eta_meas);
  c.eta_gen = optional_double(doc, t, "eta_gen", c.eta_gen);
  c.cutoff = require_int(doc, t, "cutoff", c.cutoff);
  c.bootstrap = require_int(doc, t, "bootstrap", c.bootstrap);
  c.bins = require_int(doc, t, "bins", c.bins);
  c.q_max = optional_double(doc, t, "q_max", c.q_max);

  if (const auto seed = doc.get("run", "seed")) c.seed = parse_seed(*seed, "[run] seed");
  if (const auto dir = doc.get("run", "output_dir")) c.output_dir = *dir;
  check_config(c);
  return c;
}

void apply_seed_environment(ExperimentConfig& cfg) {
  if (const char* env = std::getenv("TBF_SEED"); env != nullptr && *env != '\0') {
    cfg.seed = parse_seed(env, "TBF_SEED");
  }
}

// ---------------------------------------------------------------------------

GenerateResult cmd_generate(const ExperimentConfig& cfg, const InitialState& init, const std::filesystem::path& out) {
  const auto start = Clock::now();
  init.validate();
  SequenceSpec spec = standard_timebin_spec(cfg.pulse, cfg.bin_separation, cfg.control_width, 0.5 * cfg.dt);
  spec.control_ge.beta = cfg.beta_ge;
  spec.control_ef.beta = cfg.beta_ef;
  // Nominal preparation rotation that would produce the requested e/f superposition.
  const PrepAngles prep{2.0 * std::atan2(std::abs(init.c2), std::abs(init.c1)), std::arg(init.c2) - std::arg(init.c1)};
  const TimebinSequence seq = build_timebin_sequence(spec, prep);
  const DynamicsOptions opts = cfg.dynamics_options();

  GenerateResult r;
  r.dynamics = run_timebin_protocol(init, seq, cfg.system, opts);
  const auto& f = r.dynamics.f0t;
  std::vector<double> early(f.size(), 0.0), late(f.size(), 0.0);
  for (std::size_t k = 0; k < f.size(); ++k) (f.time(k) < cfg.bin_separation ? early : late)[k] = std::norm(f[k]);
  r.early_energy = trapezoid(early, f.dt());
  r.late_energy = trapezoid(late, f.dt());
  std::optional<double> overlap;
  if (r.early_energy > 0.0 && r.late_energy > 0.0) {
    r.modes = extract_temporal_modes(f, cfg.bin_separation);
    overlap = r.modes->overlap;
  }
  r.efficiency = generation_efficiency(cfg.system, cfg.pulse, cfg.window, opts);

  std::vector<std::vector<double>> rows;
  rows.reserve(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto& c = r.dynamics.trajectory[k];
    rows.push_back({f.time(k), f[k].real(), f[k].imag(), c.p_g0(), c.p_e0(), c.p_f0(), c.p_g1()});
  }
  write_csv(out / "trace.csv", {"t_s", "re_f", "im_f", "P_g0", "P_e0", "P_f0", "P_g1"}, rows);

  const auto& fin = r.dynamics.final_state();
  write_json(out / "summary.json",
             Json{{"initial_state",
                   {{"c0", {init.c0.real(), init.c0.imag()}},
                    {"c1", {init.c1.real(), init.c1.imag()}},
                    {"c2", {init.c2.real(), init.c2.imag()}}}},
                  {"eta_gen", r.efficiency.eta_gen},
                  {"P_e0_sc", r.efficiency.p_e0_sc},
                  {"early_energy", r.early_energy},
                  {"late_energy", r.late_energy},
                  {"total_energy", f.energy()},
                  {"swap_time_s", seq.swap_time},
                  {"mode_overlap", overlap ? Json(*overlap) : Json(nullptr)},
                  {"final_populations",
                   {{"P_g0", fin.p_g0()}, {"P_e0", fin.p_e0()}, {"P_f0", fin.p_f0()}, {"P_g1", fin.p_g1()}}}});

  std::vector<std::vector<double>> wave;
  wave.reserve(seq.coupling.size());
  for (std::size_t k = 0; k < seq.coupling.size(); ++k) {
    wave.push_back({seq.coupling.time(k), seq.coupling[k].real(), seq.coupling[k].imag(), seq.control[k].real(),
                    seq.control[k].imag()});
  }
  write_csv(out / "coupling.csv", {"t_s", "re_geff", "im_geff", "re_control", "im_control"}, wave);
  Json events = Json::array();
  for (const auto& e : seq.events) events.push_back({{"kind", to_string(e.kind)}, {"time_s", e.time}, {"phase_rad", e.phase}});
  write_json(out / "coupling.json", Json{{"t0_s", seq.coupling.t0()},
                                         {"dt_s", seq.coupling.dt()},
                                         {"count", seq.coupling.size()},
                                         {"units", "rad/s"},
                                         {"events", std::move(events)}});

  r.files = {"trace.csv", "summary.json", "coupling.csv", "coupling.json"};
  finish(cfg, "generate", out, r.files, start);
  return r;
}

EfficiencyResult cmd_efficiency(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const auto start = Clock::now();
  EfficiencyResult r;
  r.report = generation_efficiency(cfg.system, cfg.pulse, cfg.window, cfg.dynamics_options());
  r.runtime_s = seconds_since(start);
  write_json(out / "efficiency.json", Json{{"eta_gen", r.report.eta_gen},
                                           {"P_e0_sc", r.report.p_e0_sc},
                                           {"P_e0_raw", r.report.p_e0_raw},
                                           {"P_f0_leftover", r.report.p_f0_leftover},
                                           {"emitted_energy", r.report.emitted_energy},
                                           {"window_s", cfg.window},
                                           {"kappa_in_hz", angular_to_hz(cfg.system.kappa_in)}});
  r.files = {"efficiency.json"};
  finish(cfg, "efficiency", out, r.files, start);
  return r;
}

// ---------------------------------------------------------------------------

StateSpec StateSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("state must look like <kind>:<label>, got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string label = text.substr(colon + 1);
  StateSpec s;
  if (kind == "fock") {
    s.kind = QubitKind::SingleRail;
    std::size_t used = 0;
    int n = -1;
    try {
      n = std::stoi(label, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != label.size() || n < 0) throw ConfigError("fock state needs a photon number, got '" + label + "'");
    s.fock_number = n;
    s.label = label;
    return s;
  }
  if (kind == "timebin") {
    s.kind = QubitKind::TimeBin;
  } else if (kind == "singlerail") {
    s.kind = QubitKind::SingleRail;
  } else if (kind == "transmon") {
    s.kind = QubitKind::TransmonSim;
  } else {
    throw ConfigError("unknown state kind '" + kind + "' (expected timebin, singlerail, transmon or fock)");
  }
  bool known = false;
  for (const auto& l : cardinal_labels()) known = known || l == label;
  if (!known) throw ConfigError("unknown cardinal state '" + label + "' (expected 0, 1, +, -, +i or -i)");
  s.label = label;
  return s;
}

std::string StateSpec::to_string() const {
  if (fock_number) return "fock:" + std::to_string(*fock_number);
  switch (kind) {
    case QubitKind::TimeBin: return "timebin:" + label;
    case QubitKind::SingleRail: return "singlerail:" + label;
    case QubitKind::TransmonSim: return "transmon:" + label;
  }
  return label;
}

TomographyCommandResult cmd_tomography(const ExperimentConfig& cfg, const TomographyRequest& request,
                                       const std::filesystem::path& out) {
  const auto start = Clock::now();
  TomographyOptions opts = cfg.tomography_options();
  opts.loss_correct = request.loss_correct;
  ChannelStack channels;
  channels.per_shot_drift = request.per_shot_drift;
  if (request.eta) {
    if (!(*request.eta > 0.0 && *request.eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
    channels.eta = *request.eta;
    opts.settings.eta_meas = 1.0;
  } else {
    channels.eta = cfg.eta_gen;
  }
  if (request.loss_correct && request.state.kind != QubitKind::TimeBin) {
    throw ConfigError("--loss-correct applies to time-bin states only");
  }
  if (request.wigner && request.state.kind == QubitKind::TimeBin) {
    throw ConfigError("--wigner needs a single-mode state");
  }

  TomographyCommandResult r;
  const std::string description = request.state.to_string();
  if (request.state.kind == QubitKind::TransmonSim) {
    if (request.wigner) throw ConfigError("--wigner needs a photonic state");
    r.run = run_transmon_readout(cardinal_amplitudes(request.state.label), channels, opts);
    const FockDensityMatrix rho(1, 1, r.run.projected->eval());
    write_json(out / "rho.json", density_matrix_to_json(rho));
    r.files.push_back("rho.json");
  } else {
    CVector target;
    if (request.state.fock_number) {
      if (*request.state.fock_number > opts.cutoff) throw ConfigError("fock state exceeds the cutoff");
      target = fock_amplitudes({*request.state.fock_number}, opts.cutoff);
    } else {
      const Eigen::Vector2cd q = cardinal_amplitudes(request.state.label);
      target = request.state.kind == QubitKind::TimeBin ? time_bin_amplitudes(q(0), q(1), opts.cutoff)
                                                        : single_rail_amplitudes(q(0), q(1), opts.cutoff);
    }
    const int modes = request.state.kind == QubitKind::TimeBin ? 2 : 1;
    r.run = run_tomography(pure_state(target, modes, opts.cutoff), target, channels, opts);
    r.run.data->state = description;

    std::vector<std::vector<std::string>> rows;
    for (std::size_t s = 0; s < r.run.data->shots.size(); ++s) {
      const auto& ph = r.run.data->phases[s];
      for (const auto& shot : r.run.data->shots[s]) {
        if (modes == 2) {
          rows.push_back({std::to_string(s), format_double(ph[0]), format_double(ph[1]), format_double(shot[0]),
                          format_double(shot[1])});
        } else {
          rows.push_back({std::to_string(s), format_double(ph[0]), "", format_double(shot[0]), ""});
        }
      }
    }
    write_csv(out / "dataset.csv", {"setting_index", "phi_E", "phi_L", "q_E", "q_L"}, rows);
    write_json(out / "dataset.json", Json{{"seed", r.run.data->seed},
                                          {"state", description},
                                          {"eta_channel", channels.eta},
                                          {"eta_meas", r.run.data->eta_meas},
                                          {"per_shot_drift", channels.per_shot_drift},
                                          {"modes", modes},
                                          {"settings", r.run.data->shots.size()},
                                          {"samples_per_setting", opts.settings.samples_per_setting}});
    write_json(out / "rho.json", density_matrix_to_json(*r.run.rho));

    const auto& mle = *r.run.mle;
    MeasurementSettings povm_settings = opts.settings;
    povm_settings.modes = modes;
    Json diag{{"iterations", mle.iterations},
              {"converged", mle.converged},
              {"loglik_per_sample", mle.loglik},
              {"loglik_trace", mle.loglik_trace},
              {"floored_bins", mle.floored_bins},
              {"diluted_steps", mle.diluted_steps},
              {"povm_completeness_residual", build_povm(povm_settings, opts.cutoff).completeness_residual()},
              {"fidelity", r.run.fidelity},
              {"loss_corrected", request.loss_correct},
              {"bootstrap", bootstrap_json(r.run.fidelity_bootstrap)}};
    if (request.wigner) {
      r.wigner_origin = wigner(*r.run.rho, 0.0, 0.0);
      diag["wigner_origin"] = *r.wigner_origin;
      std::vector<double> grid;
      for (int k = -40; k <= 40; ++k) grid.push_back(0.1 * k);
      const Eigen::MatrixXd w = wigner_grid(*r.run.rho, grid, grid);
      std::vector<std::vector<double>> wrows;
      for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < grid.size(); ++j) wrows.push_back({grid[i], grid[j], w(i, j)});
      write_csv(out / "wigner.csv", {"q", "p", "W"}, wrows);
    }
    write_json(out / "diagnostics.json", diag);
    r.files = {"dataset.csv", "dataset.json", "rho.json", "diagnostics.json"};
    if (request.wigner) r.files.push_back("wigner.csv");
  }

  const auto& b = r.run.fidelity_bootstrap;
  const bool has_boot = b.resamples > 0;
  write_csv(out / "fidelity.csv", {"state", "fidelity", "sd", "lo3", "hi3", "loss_corrected"},
            std::vector<std::vector<std::string>>{{description, format_double(r.run.fidelity),
                                                   format_double(bootstrap_sd(b)),
                                                   has_boot ? format_double(b.lo3[0]) : "",
                                                   has_boot ? format_double(b.hi3[0]) : "",
                                                   request.loss_correct ? "true" : "false"}});
  r.files.push_back("fidelity.csv");
  finish(cfg, "tomography", out, r.files, start);
  return r;
}

// ---------------------------------------------------------------------------

const PhaseReferenceRow& PhaseReferenceResult::row(const std::string& encoding, const std::string& clock) const {
  for (const auto& r : rows) {
    if (r.encoding == encoding && r.clock == clock) return r;
  }
  throw std::out_of_range("no phase-reference row " + encoding + "/" + clock);
}

PhaseReferenceResult cmd_phase_reference(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const auto start = Clock::now();
  PhaseReferenceResult r;
  std::vector<std::vector<std::string>> table;
  const Eigen::Vector2cd plus = cardinal_amplitudes("+");
  std::uint64_t offset = 0;
  for (const auto kind : {QubitKind::SingleRail, QubitKind::TimeBin}) {
    for (const bool drift : {false, true}) {
      TomographyOptions opts = cfg.tomography_options();
      // Only the clock differs between rows: no loss, ideal detection.
      opts.settings.eta_meas = 1.0;
      opts.settings.seed = cfg.seed + 1000003ULL * ++offset;
      const ChannelStack channels{1.0, drift};
      const CVector target = kind == QubitKind::TimeBin ? time_bin_amplitudes(plus(0), plus(1), opts.cutoff)
                                                        : single_rail_amplitudes(plus(0), plus(1), opts.cutoff);
      const int modes = kind == QubitKind::TimeBin ? 2 : 1;
      const TomographyRun run = run_tomography(pure_state(target, modes, opts.cutoff), target, channels, opts);
      PhaseReferenceRow row{kind == QubitKind::TimeBin ? "time-bin" : "single-rail", drift ? "separate" : "shared",
                            run.fidelity, bootstrap_sd(run.fidelity_bootstrap)};
      table.push_back({row.encoding, row.clock, format_double(row.fidelity), format_double(row.sd),
                       format_double(row.fidelity - 3.0 * row.sd), format_double(row.fidelity + 3.0 * row.sd)});
      r.rows.push_back(std::move(row));
    }
  }
  write_csv(out / "phase_reference.csv", {"encoding", "clock", "fidelity", "sd", "lo3", "hi3"}, table);
  r.files = {"phase_reference.csv"};
  finish(cfg, "phase-reference", out, r.files, start);
  return r;
}

// ---------------------------------------------------------------------------

ChirpSweepResult cmd_chirp_sweep(const ExperimentConfig& cfg, const ChirpSweepRequest& request,
                                 const std::filesystem::path& out) {
  const auto start = Clock::now();
  if (!(request.step > 0.0)) throw ConfigError("sweep step must be positive");
  if (!(request.max >= request.min)) throw ConfigError("sweep maximum must not be below the minimum");
  if (!(cfg.pulse.peak_geff > 0.0)) throw ConfigError("chirp sweep needs a non-zero coupling peak");
  const auto n = static_cast<std::size_t>(std::floor((request.max - request.min) / request.step + 1e-9)) + 1;

  DynamicsOptions opts = cfg.dynamics_options();
  opts.stark.reset();
  if (request.c_stark != 0.0) opts.stark = StarkInjection{request.c_stark, cfg.pulse.peak_geff};
  const TimeGrid grid = TimeGrid::covering(0.0, cfg.window, 0.5 * cfg.dt);
  const InitialState excited{cplx{}, cplx{}, cplx{1.0, 0.0}};

  ChirpSweepResult r;
  std::vector<std::vector<double>> rows;
  double best = -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    CouplingPulseSpec pulse = cfg.pulse;
    pulse.chirp_coeff = request.min + static_cast<double>(k) * request.step;
    const SampledWaveform g = coupling_pulse(pulse, grid, 0.0);
    const DynamicsResult run = integrate(excited, g, cfg.system, 0.0, cfg.window, opts);
    const auto& fin = run.final_state();
    const double pg = fin.p_g0() + fin.p_g1();
    r.chirp.push_back(pulse.chirp_coeff);
    r.ground_population.push_back(pg);
    rows.push_back({angular_to_hz(pulse.chirp_coeff) * 1e-6, pg});
    if (pg > best) {
      best = pg;
      r.argmax = pulse.chirp_coeff;
    }
  }
  write_csv(out / "chirp_sweep.csv", {"c_ch_mhz", "P_g"}, rows);
  write_json(out / "chirp_sweep.json", Json{{"c_stark_mhz", angular_to_hz(request.c_stark) * 1e-6},
                                            {"step_mhz", angular_to_hz(request.step) * 1e-6},
                                            {"argmax_mhz", angular_to_hz(r.argmax) * 1e-6},
                                            {"P_g_max", best}});
  r.files = {"chirp_sweep.csv", "chirp_sweep.json"};
  finish(cfg, "chirp-sweep", out, r.files, start);
  return r;
}

}  // namespace tbf
