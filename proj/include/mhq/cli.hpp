#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mhq/diagnostics.hpp"
#include "mhq/mvi.hpp"
#include "mhq/solver.hpp"
#include "mhq/synth.hpp"
#include "mhq/view.hpp"

namespace mhq::cli {

enum Exit { kOk = 0, kValidation = 2, kSolver = 3 };

struct Options {
  std::string command;
  std::string manifold;
  std::string penalty = "phi1";
  double eps = 0.1;
  double lambda = 1.0;
  double lambda_b = 0.0;
  std::string mode = "aniso";
  std::string inner = "newton";
  int inner_steps = 5;
  double tol = 1e-8;
  int max_iters = 500;
  std::uint64_t seed = 0;
  std::string in, out, ref, view, report, preset;
  std::size_t rows = 0, cols = 0;
  bool timing = false;
  bool cb = false;
  std::vector<std::string> given;  // flags present on the command line

  bool has(const std::string& flag) const { return std::find(given.begin(), given.end(), flag) != given.end(); }
};

// ---------------------------------------------------------------------------
// Presets.

struct Scenario {
  AnyImage input;
  std::optional<AnyImage> reference;
};

struct Preset {
  std::string name;
  std::string command;  // denoise or inpaint
  std::string penalty;
  double eps;
  double lambda;
  double lambda_b;  // brightness channel, cb-color only
  std::string mode;
  bool cb;
  Scenario (*make)(std::uint64_t seed);
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"signal-s1", "denoise", "phi1", 0.6, 3.4, 0.0, "aniso", false,
       [](std::uint64_t seed) {
         const auto clean = spiral_signal(101);
         return Scenario{add_noise(clean, {NoiseKind::WrappedGaussian, 0.3, seed}), clean};
       }},
      {"disc-s1", "inpaint", "phi1", 1e-2, 1e-3, 0.0, "iso", false,
       [](std::uint64_t) {
         const auto clean = atan2_image(129);
         return Scenario{clean.with_mask(disc_mask(clean.shape(), 0.15)), clean};
       }},
      {"field-s2", "denoise", "phi1", 0.1, 0.3, 0.0, "aniso", false,
       [](std::uint64_t seed) {
         const auto clean = sphere_field(32);
         return Scenario{add_noise(clean, {NoiseKind::TangentGaussian, 0.1, seed}), clean};
       }},
      {"spd-jump", "denoise", "phi1", 0.1, 0.3, 0.0, "aniso", false,
       [](std::uint64_t seed) {
         const auto clean = spd_jump_image(16);
         return Scenario{add_noise(clean, {NoiseKind::TangentGaussian, 0.1, seed}), clean};
       }},
      {"spd-inpaint", "inpaint", "phi1", 1e-3, 1e-3, 0.0, "aniso", false,
       [](std::uint64_t) {
         const auto clean = spd_jump_image(16);
         return Scenario{clean.with_mask(centered_block_mask(clean.shape(), 12, 12)), clean};
       }},
      {"grainlike-so3", "inpaint", "phi1", 1e-2, 3e-2, 0.0, "aniso", false,
       [](std::uint64_t seed) {
         const auto clean = grain_image(32, 8, seed);
         const auto noisy = add_noise(clean, {NoiseKind::TangentGaussian, 0.05, seed + 1});
         return Scenario{noisy.with_mask(random_mask(clean.shape(), 0.3, seed + 2)), clean};
       }},
      {"cb-color", "denoise", "phi1", 0.1, 0.1, 0.1, "aniso", true,
       [](std::uint64_t seed) {
         const auto clean = rgb_test_image(32);
         return Scenario{add_noise(clean, {NoiseKind::AmbientRgbGaussian, 0.1, seed}), clean};
       }},
  };
  return table;
}

inline const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string names;
  for (const auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
  throw ValidationError("unknown preset '" + name + "' (available: " + names + ")");
}

/// Preset values fill in every solver flag the user did not give.
inline void apply_preset(Options& o, const Preset& p) {
  if (!o.has("--penalty")) o.penalty = p.penalty;
  if (!o.has("--eps")) o.eps = p.eps;
  if (!o.has("--lambda")) o.lambda = p.lambda;
  if (!o.has("--lambda-b")) o.lambda_b = p.lambda_b;
  if (!o.has("--mode")) o.mode = p.mode;
  if (p.cb) o.cb = true;
}

// ---------------------------------------------------------------------------
// Report.

inline std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class Report {
 public:
  void kv(const std::string& k, const std::string& v) { os_ << k << ' ' << v << '\n'; }
  void kv(const std::string& k, double v) { kv(k, num(v)); }
  void line(const std::string& s) { os_ << s << '\n'; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

inline SolverConfig make_config(const Options& o, double lambda) {
  SolverConfig c;
  c.lambda = lambda;
  c.mode = parse_mode(o.mode);
  c.penalty = Penalty(parse_penalty_kind(o.penalty), o.eps);
  c.inner_method = parse_inner_method(o.inner);
  c.inner_steps = o.inner_steps;
  c.outer_tol = o.tol;
  c.outer_max_iters = o.max_iters;
  c.validate();
  return c;
}

inline void echo_config(Report& r, const SolverConfig& c) {
  r.kv("penalty", std::string(to_string(c.penalty.kind())));
  r.kv("eps", c.penalty.eps());
  r.kv("lambda", c.lambda);
  r.kv("mode", std::string(to_string(c.mode)));
  r.kv("inner", std::string(to_string(c.inner_method)));
  r.kv("inner_steps", std::to_string(c.inner_steps));
  r.kv("tol", c.outer_tol);
  r.kv("max_iters", std::to_string(c.outer_max_iters));
}

template <RiemannianManifold M>
void report_run(Report& r, const RestorationResult<M>& res, const Options& o) {
  r.kv("outer_iters", std::to_string(res.outer_iters));
  r.kv("termination", std::string(to_string(res.termination)));
  r.kv("descent_chain", res.descent_chain_holds() ? "ok" : "violated");
  r.kv("energy_monotone", res.energy_monotone() ? "ok" : "violated");
  double wmin = std::numeric_limits<double>::infinity();
  double wmax = 0.0;
  int fallbacks = 0;
  for (const auto& it : res.iterations) {
    wmin = std::min(wmin, it.weight_min);
    wmax = std::max(wmax, it.weight_max);
    fallbacks += it.newton_fallbacks;
  }
  r.kv("weight_range", num(wmin) + " " + num(wmax));
  r.kv("newton_fallbacks", std::to_string(fallbacks));
  r.line("energy_trace");
  for (const auto& [k, j] : res.energy_trace) r.line("  " + std::to_string(k) + " " + num(j));
  if (o.timing) r.kv("wall_time", res.wall_time);
}

template <RiemannianManifold M>
void report_errors(Report& r, const ManifoldImage<M>& u, const ManifoldImage<M>& ref, const Mask& mask) {
  r.kv("err", err_metric(u, ref));
  if (!mask.all()) r.kv("err_lost", err_on_lost(u, ref, mask));
  if constexpr (std::is_same_v<M, Euclidean>) {
    if (u.manifold().size() == 3) r.kv("psnr", psnr(u, ref));
  }
}

// ---------------------------------------------------------------------------
// Commands.

template <RiemannianManifold M>
const ManifoldImage<M>& same_kind(const AnyImage& img, const std::string& what) {
  if (const auto* p = std::get_if<ManifoldImage<M>>(&img)) return *p;
  throw ValidationError(what + " is on a different manifold than the input");
}

inline void check_manifold_flag(const Options& o, const AnyImage& img) {
  if (o.manifold.empty()) return;
  const std::string want = std::visit([](const auto& m) { return m.name(); }, parse_manifold(o.manifold));
  const std::string got = std::visit([](const auto& x) { return x.manifold().name(); }, img);
  if (want != got) throw ValidationError("--manifold " + o.manifold + " does not match the input (" + got + ")");
}

template <RiemannianManifold M>
void write_outputs(const ManifoldImage<M>& u, const Options& o) {
  if (!o.out.empty()) save_mvi(u, o.out);
  if (!o.view.empty()) export_view(u, o.view);
}

inline void emit(const Report& r, const Options& o, std::ostream& out) {
  if (o.report.empty()) {
    out << r.str();
    return;
  }
  std::ofstream f(o.report, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + o.report + "' for writing");
  f << r.str();
}

inline Scenario load_scenario(const Options& o) {
  if (!o.preset.empty()) return find_preset(o.preset).make(o.seed);
  Scenario s{load_mvi(o.in), std::nullopt};
  if (!o.ref.empty()) s.reference = load_mvi(o.ref);
  return s;
}

inline int restore(const Options& o, std::ostream& out) {
  if (o.preset.empty() == o.in.empty()) throw ValidationError(o.command + " needs exactly one of --in or --preset");
  if (!o.preset.empty() && !o.ref.empty()) throw ValidationError("--ref cannot be combined with --preset");
  const double lambda = o.lambda;
  const SolverConfig cfg = make_config(o, lambda);
  const Scenario sc = load_scenario(o);
  check_manifold_flag(o, sc.input);

  Report r;
  r.line("mhq report");
  r.kv("command", o.command);
  r.kv("preset", o.preset.empty() ? "none" : o.preset);
  r.kv("seed", std::to_string(o.seed));

  return std::visit(
      [&]<class M>(const ManifoldImage<M>& f) -> int {
        if (o.command == "inpaint" && f.mask().all()) throw ValidationError("inpaint: the input mask has no unknown pixels");
        r.kv("manifold", f.manifold().name());
        r.kv("shape", f.shape().describe());
        r.kv("known", std::to_string(f.mask().known_count()) + "/" + std::to_string(f.size()));
        const ManifoldImage<M>* ref = sc.reference ? &same_kind<M>(*sc.reference, "--ref") : nullptr;
        if (ref && !(ref->shape() == f.shape())) throw ValidationError("--ref has a different shape than the input");

        if constexpr (std::is_same_v<M, Euclidean>) {
          if (o.cb) {
            if (f.manifold().size() != 3) throw ValidationError("--cb needs a euclidean(3) RGB image");
            if (!(o.lambda_b > 0.0)) throw ValidationError("--cb needs --lambda-b > 0");
            const SolverConfig cfg_b = make_config(o, o.lambda_b);
            const CbImage parts = cb_decompose(f);
            r.kv("pipeline", "chromaticity-brightness");
            r.line("channel chromaticity");
            echo_config(r, cfg);
            const auto rc = run(parts.chromaticity, cfg);
            report_run(r, rc, o);
            r.line("channel brightness");
            echo_config(r, cfg_b);
            const auto rb = run(parts.brightness, cfg_b);
            report_run(r, rb, o);
            const auto u = cb_recompose({rc.restored, rb.restored, parts.zero_pixels});
            if (ref) report_errors(r, u, *ref, f.mask());
            write_outputs(u, o);
            emit(r, o, out);
            return kOk;
          }
        }
        if (o.cb) throw ValidationError("--cb needs a euclidean(3) RGB image");
        echo_config(r, cfg);
        const auto res = run(f, cfg);
        report_run(r, res, o);
        if (ref) report_errors(r, res.restored, *ref, f.mask());
        write_outputs(res.restored, o);
        emit(r, o, out);
        return kOk;
      },
      sc.input);
}

inline int synth(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ValidationError("synth needs --out");
  Scenario sc{ManifoldImage<Circle>::constant(Circle{}, GridShape(1, 1), 0.0), std::nullopt};
  if (!o.preset.empty()) {
    if (!o.manifold.empty() || o.rows || o.cols) throw ValidationError("--preset cannot be combined with --manifold or a size");
    sc = find_preset(o.preset).make(o.seed);
  } else {
    if (o.manifold.empty() || !o.rows || !o.cols) throw ValidationError("synth needs --preset, or --manifold with --rows and --cols");
    Rng rng(o.seed);
    const GridShape s(o.rows, o.cols);
    sc.input = std::visit([&](const auto& m) -> AnyImage { return random_smooth_image(m, s, rng, 0.5); },
                          parse_manifold(o.manifold));
  }
  std::visit([&](const auto& img) { save_mvi(img, o.out); }, sc.input);
  if (!o.view.empty()) std::visit([&](const auto& img) { export_view(img, o.view); }, sc.input);
  if (!o.ref.empty()) {
    if (!sc.reference) throw ValidationError("--ref: this synth target has no reference image");
    std::visit([&](const auto& img) { save_mvi(img, o.ref); }, *sc.reference);
  }
  Report r;
  r.line("mhq synth");
  r.kv("preset", o.preset.empty() ? "none" : o.preset);
  r.kv("seed", std::to_string(o.seed));
  std::visit(
      [&](const auto& img) {
        r.kv("manifold", img.manifold().name());
        r.kv("shape", img.shape().describe());
        r.kv("known", std::to_string(img.mask().known_count()) + "/" + std::to_string(img.size()));
      },
      sc.input);
  emit(r, o, out);
  return kOk;
}

inline int eval(const Options& o, std::ostream& out) {
  if (o.in.empty() || o.ref.empty()) throw ValidationError("eval needs --in and --ref");
  const AnyImage u = load_mvi(o.in);
  const AnyImage ref = load_mvi(o.ref);
  check_manifold_flag(o, u);
  Report r;
  r.line("mhq eval");
  std::visit(
      [&]<class M>(const ManifoldImage<M>& a) {
        const auto& b = same_kind<M>(ref, "--ref");
        r.kv("manifold", a.manifold().name());
        r.kv("shape", a.shape().describe());
        report_errors(r, a, b, b.mask());
      },
      u);
  emit(r, o, out);
  return kOk;
}

inline int selfcheck(const Options& o, std::ostream& out) {
  Report r;
  r.line("mhq selfcheck");
  bool ok = true;
  for (const auto& c : run_selfcheck()) {
    ok = ok && c.passed;
    r.line(std::string(c.passed ? "PASS " : "FAIL ") + c.name + " worst " + num(c.value) + " tol " + num(c.tolerance));
  }
  r.kv("result", ok ? "ok" : "failed");
  emit(r, o, out);
  return ok ? kOk : kSolver;
}

// ---------------------------------------------------------------------------

inline void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--manifold", o.manifold, "euclidean[:n] | circle | sphere2 | so3q | spd[:r]");
  sub->add_option("--penalty", o.penalty, "phi1 | phi2 | phi3");
  sub->add_option("--eps", o.eps, "penalty parameter");
  sub->add_option("--lambda", o.lambda, "regularization weight");
  sub->add_option("--lambda-b", o.lambda_b, "brightness regularization weight (with --cb)");
  sub->add_option("--mode", o.mode, "aniso | iso");
  sub->add_option("--inner", o.inner, "gd | newton");
  sub->add_option("--inner-steps", o.inner_steps, "inner iterations per outer step");
  sub->add_option("--tol", o.tol, "stop when no pixel moves further than this");
  sub->add_option("--max-iters", o.max_iters, "outer iteration limit");
  sub->add_option("--seed", o.seed, "seed for synthetic data");
  sub->add_option("--in", o.in, "input MVI file");
  sub->add_option("--out", o.out, "output MVI file");
  sub->add_option("--ref", o.ref, "reference MVI file");
  sub->add_option("--preset", o.preset, "signal-s1 | disc-s1 | field-s2 | spd-jump | spd-inpaint | grainlike-so3 | cb-color");
  sub->add_option("--view", o.view, "PPM preview of the output");
  sub->add_option("--report", o.report, "write the report here instead of stdout");
  sub->add_option("--rows", o.rows, "synth: rows of a random image");
  sub->add_option("--cols", o.cols, "synth: columns of a random image");
  sub->add_flag("--cb", o.cb, "restore RGB via chromaticity and brightness");
  sub->add_flag("--timing", o.timing, "include wall time in the report");
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Half-quadratic restoration of manifold-valued images"};
  app.require_subcommand(1);
  Options o;
  std::vector<CLI::App*> subs;
  for (const char* name : {"denoise", "inpaint", "synth", "eval", "selfcheck"}) {
    auto* sub = app.add_subcommand(name);
    add_common(sub, o);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }
  for (auto* sub : subs) {
    if (!sub->parsed()) continue;
    o.command = sub->get_name();
    for (const auto* opt : sub->get_options()) {
      if (opt->count() > 0) o.given.push_back(opt->get_name());
    }
  }
  try {
    if (!o.preset.empty() && o.command != "synth") {
      const Preset& p = find_preset(o.preset);
      if (p.command != o.command) throw ValidationError("preset " + p.name + " is run with '" + p.command + "'");
      apply_preset(o, p);
    }
    if (o.command == "denoise" || o.command == "inpaint") return restore(o, out);
    if (o.command == "synth") return synth(o, out);
    if (o.command == "eval") return eval(o, out);
    return selfcheck(o, out);
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const CutLocusError& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolver;
  }
}

}  // namespace mhq::cli
