#include "eulerstab/io.hpp"
#include "eulerstab/linear_stability.hpp"
#include "eulerstab/verification.hpp"
#include "eulerstab/zeitlin.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace {

using namespace eulerstab;
using nlohmann::json;

enum Exit { kOk = 0, kInvalid = 2, kNumerical = 3, kVerification = 4 };

struct RunConfig {
  int p1 = 1;
  int p2 = 0;
  double kappa = 1.0;
  double gamma = 1.0;
  std::string window = "-50,50";
  int N = 8;
  double dt = 1e-2;
  double t_end = 50.0;
  double delta = 1e-3;
  std::uint64_t seed = 12345;
  int snapshot_every = 100;
  int grid_resolution = 0;
  std::string grid_out;
  std::string out;
  std::string format = "json";
  double tol = 1e-6;
  std::string suite = "all";
};

Window parse_window(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--window expects m,n");
  std::size_t used_m = 0, used_n = 0;
  Window w;
  try {
    w.m = std::stoi(text.substr(0, comma), &used_m);
    w.n = std::stoi(text.substr(comma + 1), &used_n);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("--window expects two integers m,n");
  }
  if (used_m != comma || used_n != text.size() - comma - 1) {
    throw std::invalid_argument("--window expects two integers m,n");
  }
  if (w.m >= w.n) throw std::invalid_argument("--window requires m < n");
  return w;
}

DomainSpec domain(const RunConfig& c) { return DomainSpec(c.kappa, ModeIndex(c.p1, c.p2), c.gamma); }

/// Writes to --out when given, stdout otherwise.
template <typename Fn>
void emit(const RunConfig& c, Fn&& write) {
  if (c.out.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(c.out);
  if (!os) throw std::invalid_argument("cannot open output file " + c.out);
  write(os);
  if (!os) throw std::runtime_error("failed writing " + c.out);
}

void emit_json(const RunConfig& c, const json& doc) {
  emit(c, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

int cmd_classify(const RunConfig& c) {
  const DomainSpec spec = domain(c);
  const SpectrumReport report = classify_equilibrium(spec, parse_window(c.window), c.tol);
  if (c.format == "csv") {
    emit(c, [&](std::ostream& os) { write_spectrum_csv(os, report); });
  } else {
    emit_json(c, classify_json(spec, report));
  }
  std::cerr << "verdict: " << to_string(report.verdict) << '\n';
  return kOk;
}

int cmd_spectrum(const RunConfig& c) {
  const DomainSpec spec = domain(c);
  const SpectrumReport report = classify_equilibrium(spec, parse_window(c.window), c.tol);
  if (c.format == "csv") {
    emit(c, [&](std::ostream& os) { write_spectrum_csv(os, report); });
  } else {
    emit_json(c, spectrum_json(spec, report));
  }
  std::cerr << "non-imaginary locations: " << report.counts.distinct_locations << '\n';
  return kOk;
}

int cmd_lattice(const RunConfig& c) {
  if (c.format != "json") throw std::invalid_argument("lattice supports --format json only");
  emit_json(c, lattice_json(domain(c)));
  return kOk;
}

int cmd_simulate(const RunConfig& c) {
  if (c.format != "json") throw std::invalid_argument("simulate supports --format json only");
  if (!(c.dt > 0.0) || !(c.t_end > 0.0)) throw std::invalid_argument("--dt and --t-end must be positive");
  if (c.snapshot_every < 1) throw std::invalid_argument("--snapshot-every must be at least 1");
  if (c.grid_resolution < 0) throw std::invalid_argument("--grid-resolution must be nonnegative");
  if (c.grid_resolution > 0 && c.grid_out.empty()) throw std::invalid_argument("--grid-resolution needs --grid-out");

  const DomainSpec spec = domain(c);
  const TruncationSpec trunc(c.N, c.kappa);
  if (!trunc.contains(spec.p())) throw std::invalid_argument("p lies outside the truncation");
  if (spec.p().y() == 0 && wrapped_casimir_stability_probe(spec, trunc)) {
    std::cerr << "warning: gcd(2N+1, p1) = 1 and kappa >= |p1|; the truncated Casimirs pin the (a, 0) "
                 "modes, so the truncated run may be more stable than the continuum flow\n";
  }

  const TruncatedState initial = perturbed_equilibrium(spec, trunc, c.delta, c.seed);
  SimulationOptions opts;
  opts.snapshot_every = c.snapshot_every;
  opts.reference = perturbed_equilibrium(spec, trunc, 0.0, c.seed);
  const SimulationResult sim = simulate(initial, c.t_end, c.dt, trunc, opts);

  const double e0 = sim.perturbation_norm.empty() ? 0.0 : sim.perturbation_norm.front();
  std::optional<double> rate;
  if (e0 > 0.0) rate = fit_growth_rate(sim.log.time, sim.perturbation_norm, 20.0 * e0, 1e-2 * std::abs(c.gamma));
  const std::optional<double> predicted = dominant_real_part(spec, c.N, c.tol);

  json snapshots = json::array();
  for (const TruncatedState& s : sim.snapshots) snapshots.push_back(state_json(s));
  double max_norm = 0.0;
  for (double v : sim.perturbation_norm) max_norm = std::max(max_norm, v);

  json doc = {
      {"schema_version", kSchemaVersion},
      {"command", "simulate"},
      {"domain", domain_json(spec)},
      {"truncation", {{"N", c.N}, {"epsilon", trunc.epsilon()}}},
      {"dt", c.dt},
      {"t_end", c.t_end},
      {"delta", c.delta},
      {"seed", c.seed},
      {"snapshots", std::move(snapshots)},
      {"conservation", conservation_json(sim.log)},
      {"perturbation_norm", sim.perturbation_norm},
      {"initial_perturbation_norm", e0},
      {"max_perturbation_norm", max_norm},
      {"growth_rate", nullptr},
      {"linear_prediction", nullptr},
  };
  if (rate) doc["growth_rate"] = *rate;
  if (predicted) doc["linear_prediction"] = *predicted;
  emit_json(c, doc);

  if (c.grid_resolution > 0) {
    std::ofstream gs(c.grid_out);
    if (!gs) throw std::invalid_argument("cannot open grid file " + c.grid_out);
    for (const TruncatedState& s : sim.snapshots) {
      write_grid(gs, vorticity_grid(s, trunc, c.grid_resolution), c.kappa, s.time);
    }
  }
  std::cerr << "growth rate: " << (rate ? format_double(*rate) : std::string("n/a"))
            << ", linear prediction: " << (predicted ? format_double(*predicted) : std::string("n/a")) << '\n';
  return kOk;
}

int cmd_verify(const RunConfig& c) {
  const std::vector<SuiteResult> results = run_verification(c.suite, static_cast<unsigned>(c.seed));
  bool ok = true;
  for (const SuiteResult& r : results) {
    const char* status = r.passed ? "PASS" : (r.fatal ? "FAIL" : "REPORT");
    std::cout << status << ' ' << r.name << ": " << r.detail << '\n';
    if (r.fatal && !r.passed) ok = false;
  }
  return ok ? kOk : kVerification;
}

void add_domain_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--p1", c.p1, "First component of the equilibrium mode p")->capture_default_str();
  sub->add_option("--p2", c.p2, "Second component of p")->capture_default_str();
  sub->add_option("--kappa", c.kappa, "Torus aspect parameter (> 0)")->capture_default_str();
  sub->add_option("--gamma", c.gamma, "Equilibrium amplitude")->capture_default_str();
  sub->add_option("--out", c.out, "Output path (stdout when omitted)");
  sub->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig c;
  CLI::App app{"Linear and nonlinear stability of shear equilibria of 2D Euler flow on a rectangular torus"};
  app.require_subcommand(1);

  auto* classify = app.add_subcommand("classify", "Stability verdict with candidate classes and diagnostics");
  auto* spectrum = app.add_subcommand("spectrum", "Truncated spectra of every candidate class");
  auto* lattice = app.add_subcommand("lattice", "Lattice points inside the unstable ellipse");
  auto* simulate_cmd = app.add_subcommand("simulate", "Nonlinear run of the sine-bracket truncation");
  auto* verify = app.add_subcommand("verify", "Self-verification suites");

  for (auto* sub : {classify, spectrum, lattice, simulate_cmd}) add_domain_flags(sub, c);
  for (auto* sub : {classify, spectrum, simulate_cmd}) {
    sub->add_option("--tol", c.tol, "Relative threshold for non-imaginary eigenvalues")->capture_default_str();
  }
  for (auto* sub : {classify, spectrum}) {
    sub->add_option("--window", c.window, "Truncation window m,n (use --window=-100,100)")->capture_default_str();
  }
  simulate_cmd->add_option("--N", c.N, "Mode cutoff; the lattice is {-N..N}^2")->capture_default_str();
  simulate_cmd->add_option("--dt", c.dt, "Time step")->capture_default_str();
  simulate_cmd->add_option("--t-end", c.t_end, "Duration of the run")->capture_default_str();
  simulate_cmd->add_option("--delta", c.delta, "Perturbation amplitude bound")->capture_default_str();
  simulate_cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  simulate_cmd->add_option("--snapshot-every", c.snapshot_every, "Keep every n-th state")->capture_default_str();
  simulate_cmd->add_option("--grid-resolution", c.grid_resolution, "Grid size for vorticity snapshots (0 = none)")
      ->capture_default_str();
  simulate_cmd->add_option("--grid-out", c.grid_out, "Path for grid snapshots");

  std::string suites = "all";
  for (const std::string& s : verification_suites()) suites += ", " + s;
  verify->add_option("--suite", c.suite, "One of: " + suites)->capture_default_str();
  verify->add_option("--seed", c.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*classify) return cmd_classify(c);
    if (*spectrum) return cmd_spectrum(c);
    if (*lattice) return cmd_lattice(c);
    if (*simulate_cmd) return cmd_simulate(c);
    if (*verify) return cmd_verify(c);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kInvalid;
}
