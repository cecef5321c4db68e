#include "cli.hpp"

#include "mgpbd/analysis.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef MGPBD_REVISION
#define MGPBD_REVISION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace mgpbd::cli {

namespace {

// Errors that map to a specific exit code.
struct CliError : std::runtime_error {
  ExitCode code;
  CliError(ExitCode c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct SceneOptions {
  std::string preset;
  std::string scene_file;
  std::optional<std::string> solver;
  std::optional<long> frames;
  std::optional<int> maxiter;
  std::optional<double> tol;
  std::optional<double> dt;
  std::optional<double> stiffness;
  std::optional<int> setup_interval;
  std::optional<double> omega;
  std::optional<std::uint64_t> seed;
};

struct OutputOptions {
  std::string output_dir = "out";
  bool deterministic = false;
  bool export_mesh = false;
  bool diagnostics = false;
};

struct Resolved {
  SceneDef scene;
  ordered_json source;
};

void add_scene_options(CLI::App& app, SceneOptions& o) {
  auto* p = app.add_option("--preset", o.preset, "Built-in scene (see `mgpbd presets`)");
  auto* s = app.add_option("--scene", o.scene_file, "Scene definition file");
  p->excludes(s);
  app.add_option("--solver", o.solver, "mgpbd | xpbd_jacobi | pcg_jacobi");
  app.add_option("--frames", o.frames, "Number of frames")->check(CLI::PositiveNumber);
  app.add_option("--maxiter", o.maxiter, "Outer iterations per frame")->check(CLI::NonNegativeNumber);
  app.add_option("--tol", o.tol, "Relative dual residual tolerance");
  app.add_option("--dt", o.dt, "Time step in seconds");
  app.add_option("--stiffness", o.stiffness, "Pa for solids, N/m for cloth");
  app.add_option("--setup-interval", o.setup_interval, "Frames between AMG setups");
  app.add_option("--omega", o.omega, "Outer relaxation of the global solvers");
  app.add_option("--seed", o.seed, "Seed of the near-kernel bootstrap");
}

void add_output_options(CLI::App& app, OutputOptions& o) {
  app.add_option("--output-dir", o.output_dir, "Directory for the manifest, CSVs and meshes");
  app.add_flag("--deterministic", o.deterministic, "Ignore time budgets and write zero wall times");
  app.add_flag("--export-mesh", o.export_mesh, "Write one OBJ per frame to <output-dir>/meshes");
  app.add_flag("--diagnostics", o.diagnostics, "Write hierarchy reports and inner PCG histories");
}

SceneDef load_preset(const std::string& name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw CliError(unknown_preset, "unknown preset '" + name + "'");
  return preset(name);
}

SceneDef load_scene_file(const std::string& path) {
  if (!fs::exists(path)) throw CliError(usage_error, "scene file '" + path + "' not found");
  try {
    return load_scene(path);
  } catch (const ParseError& e) {
    throw CliError(usage_error, path + ": " + e.what());
  }
}

Resolved resolve(const SceneOptions& o) {
  if (o.preset.empty() == o.scene_file.empty())
    throw CliError(usage_error, "exactly one of --preset and --scene is required");
  Resolved r;
  if (!o.preset.empty()) {
    r.scene = load_preset(o.preset);
    r.source = {{"preset", o.preset}};
  } else {
    r.scene = load_scene_file(o.scene_file);
    r.source = {{"scene_file", fs::absolute(o.scene_file).lexically_normal().string()}};
  }
  SimConfig& c = r.scene.sim;
  try {
    if (o.solver) c.solver = solver_kind_from_string(*o.solver);
  } catch (const std::invalid_argument& e) {
    throw CliError(usage_error, e.what());
  }
  if (o.frames) c.frames = *o.frames;
  if (o.maxiter) c.maxiter = *o.maxiter;
  if (o.tol) c.tol = *o.tol;
  if (o.dt) c.dt = *o.dt;
  if (o.stiffness) r.scene.stiffness = *o.stiffness;
  if (o.setup_interval) c.setup_interval = *o.setup_interval;
  if (o.omega) c.omega_relax = *o.omega;
  if (o.seed) c.seed = *o.seed;
  return r;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw CliError(output_unwritable, "cannot create output directory '" + dir.string() + "'");
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw CliError(output_unwritable, "output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw CliError(io_error, "cannot write '" + path.string() + "'");
  return f;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json scene_summary(const SceneDef& s) {
  return {{"name", s.name},
          {"kind", s.kind == ConstraintKind::distance ? "distance" : "arap"},
          {"vertices", s.positions.size()},
          {"constraints", s.elements.size() / static_cast<std::size_t>(arity(s.kind))},
          {"pins", s.pins.size()},
          {"stiffness", s.stiffness}};
}

Simulation instantiate(const SceneDef& scene) {
  try {
    scene.sim.validate();
    return make_simulation(scene);
  } catch (const std::invalid_argument& e) {
    throw CliError(usage_error, e.what());
  }
}

// Runs every frame and writes all outputs; the manifest goes first.
int simulate(const Resolved& r, const OutputOptions& o, std::ostream& out, std::ostream& err) {
  SceneDef scene = r.scene;
  scene.sim.deterministic = o.deterministic || scene.sim.deterministic;
  scene.sim.record_pcg = o.diagnostics;
  Simulation sim = instantiate(scene);

  const fs::path dir = o.output_dir;
  prepare_dir(dir);
  if (o.export_mesh) prepare_dir(dir / "meshes");

  ordered_json manifest;
  manifest["tool"] = "mgpbd";
  manifest["revision"] = revision();
  manifest["source"] = r.source;
  manifest["scene"] = scene_summary(scene);
  manifest["seed"] = scene.sim.seed;
  manifest["deterministic"] = o.deterministic;
  manifest["export_mesh"] = o.export_mesh;
  manifest["diagnostics"] = o.diagnostics;
  manifest["config"] = config_to_json(scene.sim);
  ordered_json files = {{"stats", "stats.csv"}, {"residuals", "residuals.csv"}};
  if (o.export_mesh) files["meshes"] = "meshes/frame_NNNNNN.obj";
  if (o.diagnostics) {
    files["hierarchy"] = "hierarchy.txt";
    files["pcg"] = "pcg.csv";
  }
  manifest["outputs"] = files;
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';

  std::ofstream stats = open_out(dir / "stats.csv");
  std::ofstream residuals = open_out(dir / "residuals.csv");
  stats << "frame,iterations,final_rel_dual_residual,setup_performed,omega_final,pcg_iterations,flops,wall_time\n";
  residuals << "frame,iteration,rel_dual_residual\n";
  std::ofstream hierarchy, pcg;
  if (o.diagnostics) {
    hierarchy = open_out(dir / "hierarchy.txt");
    pcg = open_out(dir / "pcg.csv");
    pcg << "frame,outer_iteration,pcg_iteration,rel_residual\n";
  }

  const long frames = scene.sim.frames;
  try {
    for (long f = 0; f < frames; ++f) {
      const FrameStats st = sim.step();
      stats << st.frame << ',' << st.iterations_used << ',' << num(st.final_rel_dual_residual) << ','
            << (st.setup_performed ? 1 : 0) << ',' << num(st.omega_final) << ',' << st.pcg_iterations << ','
            << num(st.flops) << ',' << num(o.deterministic ? 0.0 : st.wall_time) << '\n';
      for (std::size_t k = 0; k < st.residual_history.size(); ++k)
        residuals << st.frame << ',' << k << ',' << num(st.residual_history[k]) << '\n';
      if (o.diagnostics) {
        if (st.setup_performed && sim.hierarchy()) {
          write_hierarchy_report(hierarchy, *sim.hierarchy());
          hierarchy << '\n';
        }
        for (std::size_t k = 0; k < st.pcg_reports.size(); ++k)
          write_solve_report_csv(pcg, st.pcg_reports[k], st.frame, static_cast<long>(k));
      }
      if (o.export_mesh) {
        try {
          export_frame(dir / "meshes", st.frame, sim.state().x, scene.surface);
        } catch (const std::runtime_error& e) {
          throw CliError(io_error, e.what());
        }
      }
      out << "frame " << st.frame << ": " << st.iterations_used << " iterations, residual "
          << st.final_rel_dual_residual << (st.setup_performed ? ", setup" : "") << '\n';
    }
  } catch (const SolverAbort& e) {
    err << "solver aborted: " << e.what() << '\n';
    return solver_abort;
  }
  stats.flush();
  residuals.flush();
  if (!stats || !residuals) throw CliError(io_error, "write failed in '" + dir.string() + "'");
  return ok;
}

int spectrum(const Resolved& r, const OutputOptions& o, std::ostream& out, std::ostream& err) {
  if (!r.scene.grid) throw CliError(spectrum_unavailable, "scene '" + r.scene.name + "' is not a regular cloth grid");
  SceneDef scene = r.scene;
  scene.sim.deterministic = true;
  Simulation sim = instantiate(scene);
  try {
    for (long f = 0; f < scene.sim.frames; ++f) sim.step();
  } catch (const SolverAbort& e) {
    err << "solver aborted: " << e.what() << '\n';
    return solver_abort;
  }
  const Spectrum s = residual_spectrum(sim.last_rhs(), scene.grid);
  const fs::path dir = o.output_dir;
  prepare_dir(dir);
  std::ofstream csv = open_out(dir / "spectrum.csv");
  csv << "bin,frequency,power\n" << 0 << ',' << 0 << ',' << num(s.dc) << '\n';
  for (std::size_t b = 0; b < s.power.size(); ++b)
    csv << b + 1 << ',' << num(s.frequency[b]) << ',' << num(s.power[b]) << '\n';
  out << "spectrum of " << scene.name << " after " << scene.sim.frames << " frame(s): " << s.power.size()
      << " bins, dc " << s.dc << '\n';
  return ok;
}

Resolved resolve_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(usage_error, "cannot open manifest '" + path + "'");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw CliError(usage_error, path + ": " + e.what());
  }
  Resolved r;
  try {
    const json& src = m.at("source");
    if (src.contains("preset")) r.scene = load_preset(src.at("preset").get<std::string>());
    else r.scene = load_scene_file(src.at("scene_file").get<std::string>());
    r.source = src;
    r.scene.stiffness = m.at("scene").at("stiffness").get<double>();
    config_from_json(m.at("config"), r.scene.sim);
  } catch (const json::exception& e) {
    throw CliError(usage_error, path + ": " + e.what());
  }
  return r;
}

}  // namespace

const char* revision() { return MGPBD_REVISION; }

ordered_json config_to_json(const SimConfig& c) {
  const auto& a = c.amg;
  const auto& s = a.smoother;
  return {
      {"dt", c.dt},
      {"frames", c.frames},
      {"maxiter", c.maxiter},
      {"time_budget", c.time_budget ? json(*c.time_budget) : json(nullptr)},
      {"deterministic", c.deterministic},
      {"tol", c.tol},
      {"omega_relax", c.omega_relax},
      {"backtracking", c.backtracking},
      {"omega_min", c.omega_min},
      {"setup_interval", c.setup_interval},
      {"solver", std::string(to_string(c.solver))},
      {"gravity", {c.gravity.x(), c.gravity.y(), c.gravity.z()}},
      {"seed", c.seed},
      {"damping", c.damping},
      {"xpbd_relax", c.xpbd_relax},
      {"pcg_tol", c.pcg_tol},
      {"pcg_maxiter", c.pcg_maxiter},
      {"amg",
       {{"min_coarse_size", a.min_coarse_size},
        {"theta_s", a.theta_s},
        {"n_kernel_vecs", a.n_kernel_vecs},
        {"bootstrap_sweeps", a.bootstrap_sweeps},
        {"kernel", a.kernel == KernelSource::bootstrap ? "bootstrap" : "ones"},
        {"max_levels", a.max_levels},
        {"stall_ratio", a.stall_ratio},
        {"max_direct_size", a.max_direct_size},
        {"refresh_smoother", a.refresh_smoother},
        {"smoother",
         {{"kind", std::string(to_string(s.kind))},
          {"lambda_min_est", s.lambda_min_est},
          {"cheb_lower_frac", s.cheb_lower_frac},
          {"cheb_degree", s.cheb_degree},
          {"lmax_margin", s.lmax_margin},
          {"sweeps", s.sweeps},
          {"power_iters", s.power_iters}}}}},
  };
}

void config_from_json(const json& j, SimConfig& c) {
  auto get = [](const json& o, const char* k, auto& v) {
    if (o.contains(k)) v = o.at(k).get<std::remove_reference_t<decltype(v)>>();
  };
  get(j, "dt", c.dt);
  get(j, "frames", c.frames);
  get(j, "maxiter", c.maxiter);
  if (j.contains("time_budget")) {
    const json& t = j.at("time_budget");
    c.time_budget = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
  }
  get(j, "deterministic", c.deterministic);
  get(j, "tol", c.tol);
  get(j, "omega_relax", c.omega_relax);
  get(j, "backtracking", c.backtracking);
  get(j, "omega_min", c.omega_min);
  get(j, "setup_interval", c.setup_interval);
  if (j.contains("solver")) c.solver = solver_kind_from_string(j.at("solver").get<std::string>());
  if (j.contains("gravity")) {
    const auto g = j.at("gravity").get<std::vector<double>>();
    if (g.size() != 3) throw std::invalid_argument("gravity must have three components");
    c.gravity = Vec3(g[0], g[1], g[2]);
  }
  get(j, "seed", c.seed);
  get(j, "damping", c.damping);
  get(j, "xpbd_relax", c.xpbd_relax);
  get(j, "pcg_tol", c.pcg_tol);
  get(j, "pcg_maxiter", c.pcg_maxiter);
  if (!j.contains("amg")) return;
  const json& a = j.at("amg");
  get(a, "min_coarse_size", c.amg.min_coarse_size);
  get(a, "theta_s", c.amg.theta_s);
  get(a, "n_kernel_vecs", c.amg.n_kernel_vecs);
  get(a, "bootstrap_sweeps", c.amg.bootstrap_sweeps);
  if (a.contains("kernel"))
    c.amg.kernel = a.at("kernel").get<std::string>() == "ones" ? KernelSource::ones : KernelSource::bootstrap;
  get(a, "max_levels", c.amg.max_levels);
  get(a, "stall_ratio", c.amg.stall_ratio);
  get(a, "max_direct_size", c.amg.max_direct_size);
  get(a, "refresh_smoother", c.amg.refresh_smoother);
  if (!a.contains("smoother")) return;
  const json& s = a.at("smoother");
  auto& sc = c.amg.smoother;
  if (s.contains("kind")) sc.kind = smoother_kind_from_string(s.at("kind").get<std::string>());
  get(s, "lambda_min_est", sc.lambda_min_est);
  get(s, "cheb_lower_frac", sc.cheb_lower_frac);
  get(s, "cheb_degree", sc.cheb_degree);
  get(s, "lmax_margin", sc.lmax_margin);
  get(s, "sweeps", sc.sweeps);
  get(s, "power_iters", sc.power_iters);
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multigrid-preconditioned position-based dynamics", "mgpbd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("mgpbd ") + MGPBD_REVISION);

  SceneOptions scene_opts;
  OutputOptions out_opts;
  auto* run = app.add_subcommand("run", "Simulate a scene and write per-frame statistics");
  add_scene_options(*run, scene_opts);
  add_output_options(*run, out_opts);

  SceneOptions spec_opts;
  OutputOptions spec_out;
  auto* spec = app.add_subcommand("spectrum", "Power spectrum of the cloth dual residual after the last frame");
  add_scene_options(*spec, spec_opts);
  spec->add_option("--output-dir", spec_out.output_dir, "Directory for spectrum.csv");

  std::string manifest;
  OutputOptions replay_out;
  replay_out.output_dir.clear();
  auto* replay = app.add_subcommand("replay", "Re-run the configuration recorded in a manifest");
  replay->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  replay->add_option("--output-dir", replay_out.output_dir, "Defaults to <manifest dir>/replay");

  app.add_subcommand("presets", "List built-in scenes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return ok;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return usage_error;
  }

  try {
    if (run->parsed()) return simulate(resolve(scene_opts), out_opts, out, err);
    if (spec->parsed()) return spectrum(resolve(spec_opts), spec_out, out, err);
    if (replay->parsed()) {
      const Resolved r = resolve_manifest(manifest);
      std::ifstream in(manifest);
      const json m = json::parse(in);
      OutputOptions o;
      o.deterministic = m.value("deterministic", false);
      o.export_mesh = m.value("export_mesh", false);
      o.diagnostics = m.value("diagnostics", false);
      o.output_dir = replay_out.output_dir.empty() ? (fs::path(manifest).parent_path() / "replay").string()
                                                   : replay_out.output_dir;
      return simulate(r, o, out, err);
    }
    for (const auto& name : preset_names()) out << name << '\n';
    return ok;
  } catch (const CliError& e) {
    err << "error: " << e.what() << '\n';
    return e.code;
  } catch (const SpectrumUnavailable& e) {
    err << "error: " << e.what() << '\n';
    return spectrum_unavailable;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  }
}

}  // namespace mgpbd::cli
