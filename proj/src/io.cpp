#include "eulerstab/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace eulerstab {

namespace {

using nlohmann::json;

double finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::domain_error(std::string("non-finite value in ") + what);
  return v;
}

json mode_json(const ModeIndex& k) { return json::array({k.x(), k.y()}); }

ModeIndex mode_from_json(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

SpectrumFileRecord to_record(const ClassSpectrum& cs) {
  return {cs.cls.a, cs.cls.alpha, cs.essential, cs.eigenvalues};
}

json to_json(const SpectrumFileRecord& record) {
  json eig = json::array();
  for (const auto& z : record.eigenvalues) {
    eig.push_back(json::array({finite(z.real(), "eigenvalue"), finite(z.imag(), "eigenvalue")}));
  }
  return {
      {"a", mode_json(record.a)},
      {"alpha", finite(record.alpha, "alpha")},
      {"essential_interval", json::array({finite(record.essential.lower, "essential interval"),
                                          finite(record.essential.upper, "essential interval")})},
      {"eigenvalues", std::move(eig)},
  };
}

SpectrumFileRecord spectrum_record_from_json(const json& j) {
  SpectrumFileRecord r;
  r.a = mode_from_json(j.at("a"));
  r.alpha = j.at("alpha").get<double>();
  r.essential = {j.at("essential_interval").at(0).get<double>(), j.at("essential_interval").at(1).get<double>()};
  for (const auto& z : j.at("eigenvalues")) {
    r.eigenvalues.emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
  }
  return r;
}

json domain_json(const DomainSpec& spec) {
  return {{"p", mode_json(spec.p())}, {"kappa", spec.kappa()}, {"gamma", spec.gamma()}};
}

json classify_json(const DomainSpec& spec, const SpectrumReport& report) {
  json classes = json::array();
  for (const ClassSpectrum& cs : report.classes) {
    json c = {{"a", mode_json(cs.cls.a)},
              {"alpha", cs.cls.alpha},
              {"interior_points", cs.interior_points},
              {"non_imaginary", cs.non_imaginary},
              {"max_real_part", finite(cs.max_real_part, "max real part")},
              {"lambda_star", nullptr}};
    if (cs.lambda_star) c["lambda_star"] = finite(*cs.lambda_star, "lambda_star");
    classes.push_back(std::move(c));
  }
  const QuadraticFormDiagnosis diag = energy_casimir_diagnosis(spec);
  json witnesses = json::array();
  for (const ModeIndex& k : diag.witnesses) witnesses.push_back(mode_json(k));

  json out = {
      {"schema_version", kSchemaVersion},
      {"command", "classify"},
      {"domain", domain_json(spec)},
      {"window", json::array({report.window.m, report.window.n})},
      {"verdict", to_string(report.verdict)},
      {"witness", nullptr},
      {"max_real_part", finite(report.max_real_part, "max real part")},
      {"nu", report.counts.nu},
      {"nu_with_origin", report.counts.nu_with_origin},
      {"candidate_classes", std::move(classes)},
      {"instability_bound", {{"holds", instability_bound_check(spec)},
                             {"p_norm", std::sqrt(spec.p_norm_sq())},
                             {"threshold", instability_bound_threshold(spec.kappa())}}},
      {"energy_casimir", {{"definite", diag.definite}, {"witnesses", std::move(witnesses)}}},
  };
  if (report.witness) out["witness"] = mode_json(*report.witness);
  return out;
}

json spectrum_json(const DomainSpec& spec, const SpectrumReport& report) {
  json records = json::array();
  for (const ClassSpectrum& cs : report.classes) records.push_back(to_json(to_record(cs)));
  return {
      {"schema_version", kSchemaVersion},
      {"command", "spectrum"},
      {"domain", domain_json(spec)},
      {"window", json::array({report.window.m, report.window.n})},
      {"verdict", to_string(report.verdict)},
      {"classes", std::move(records)},
      {"summary", {{"nu", report.counts.nu},
                   {"nu_with_origin", report.counts.nu_with_origin},
                   {"non_imaginary", report.counts.non_imaginary},
                   {"distinct_locations", report.counts.distinct_locations},
                   {"cluster_sizes", report.counts.cluster_sizes}}},
  };
}

std::vector<SpectrumFileRecord> spectrum_records_from_json(const json& doc) {
  if (doc.at("schema_version").get<int>() != kSchemaVersion) {
    throw std::runtime_error("unsupported spectrum schema version");
  }
  std::vector<SpectrumFileRecord> out;
  for (const auto& c : doc.at("classes")) out.push_back(spectrum_record_from_json(c));
  return out;
}

void write_spectrum_csv(std::ostream& os, const SpectrumReport& report) {
  os << "a1,a2,alpha,re,im\n";
  for (const ClassSpectrum& cs : report.classes) {
    for (const auto& z : cs.eigenvalues) {
      os << cs.cls.a.x() << ',' << cs.cls.a.y() << ',' << format_double(finite(cs.cls.alpha, "alpha")) << ','
         << format_double(finite(z.real(), "eigenvalue")) << ',' << format_double(finite(z.imag(), "eigenvalue"))
         << '\n';
    }
  }
}

json lattice_json(const DomainSpec& spec) {
  json points = json::array();
  const std::vector<ModeIndex> pts = lattice_points_in_ellipse(spec);
  for (const ModeIndex& k : pts) points.push_back(mode_json(k));
  json classes = json::array();
  for (const ClassSystem& c : enumerate_unstable_candidate_classes(spec)) classes.push_back(mode_json(c.a));
  return {
      {"schema_version", kSchemaVersion},
      {"command", "lattice"},
      {"domain", domain_json(spec)},
      {"nu", static_cast<int>(pts.size())},
      {"nu_with_origin", static_cast<int>(pts.size()) + 1},
      {"interior_points", std::move(points)},
      {"candidate_classes", std::move(classes)},
  };
}

json state_json(const TruncatedState& state) {
  json modes = json::array();
  const int N = state.N();
  for (int k1 = -N; k1 <= N; ++k1) {
    for (int k2 = -N; k2 <= N; ++k2) {
      const auto w = state(ModeIndex(k1, k2));
      if (w == std::complex<double>(0.0)) continue;
      modes.push_back(json::array({k1, k2, finite(w.real(), "state"), finite(w.imag(), "state")}));
    }
  }
  return {{"time", state.time}, {"N", N}, {"modes", std::move(modes)}};
}

TruncatedState state_from_json(const json& j, const TruncationSpec& trunc) {
  if (j.at("N").get<int>() != trunc.N()) throw std::runtime_error("state N does not match truncation");
  TruncatedState s(trunc);
  s.time = j.at("time").get<double>();
  for (const auto& row : j.at("modes")) {
    const ModeIndex k(row.at(0).get<int>(), row.at(1).get<int>());
    if (!trunc.contains(k)) throw std::runtime_error("state mode outside truncation");
    s(k) = {row.at(2).get<double>(), row.at(3).get<double>()};
  }
  return s;
}

json conservation_json(const ConservationLog& log) {
  json casimir_rows = json::array();
  for (Eigen::Index r = 0; r < log.casimirs.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < log.casimirs.cols(); ++c) row.push_back(finite(log.casimirs(r, c), "Casimir"));
    casimir_rows.push_back(std::move(row));
  }
  const Eigen::VectorXd drift = log.max_casimir_drift();
  json drift_json = json::object();
  for (Eigen::Index n = 0; n < drift.size(); ++n) drift_json["C" + std::to_string(n + 2)] = drift(n);
  return {
      {"max_order", log.max_order},
      {"time", log.time},
      {"hamiltonian", log.hamiltonian},
      {"hamiltonian_drift", log.hamiltonian_drift()},
      {"casimirs", std::move(casimir_rows)},
      {"max_hamiltonian_drift", log.max_hamiltonian_drift()},
      {"max_casimir_drift", std::move(drift_json)},
  };
}

void write_grid(std::ostream& os, const Eigen::MatrixXd& grid, double kappa, double time) {
  os << grid.rows() << ' ' << format_double(kappa) << ' ' << format_double(time) << '\n';
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(grid(i, j));
    }
    os << '\n';
  }
}

}  // namespace eulerstab
