#pragma once

#include "eulerstab/linear_stability.hpp"
#include "eulerstab/zeitlin.hpp"

#include <json.hpp>

#include <iosfwd>
#include <vector>

namespace eulerstab {

inline constexpr int kSchemaVersion = 1;

/// One class of a spectrum file.
struct SpectrumFileRecord {
  ModeIndex a = ModeIndex::Zero();
  double alpha = 0.0;
  ImaginaryInterval essential;
  Eigenvalues eigenvalues;
};

SpectrumFileRecord to_record(const ClassSpectrum& cs);

/// Throws std::domain_error on NaN or infinite values.
nlohmann::json to_json(const SpectrumFileRecord& record);
SpectrumFileRecord spectrum_record_from_json(const nlohmann::json& j);

nlohmann::json domain_json(const DomainSpec& spec);

/// Verdict, lattice counts, candidate classes with lambda_star, the analytic
/// instability bound and the energy-Casimir diagnosis.
nlohmann::json classify_json(const DomainSpec& spec, const SpectrumReport& report);

/// Per-class eigenvalues plus summary counts.
nlohmann::json spectrum_json(const DomainSpec& spec, const SpectrumReport& report);
std::vector<SpectrumFileRecord> spectrum_records_from_json(const nlohmann::json& doc);

/// Flat CSV: a1,a2,alpha,re,im with one row per eigenvalue.
void write_spectrum_csv(std::ostream& os, const SpectrumReport& report);

nlohmann::json lattice_json(const DomainSpec& spec);

/// Nonzero modes as [k1, k2, re, im] rows.
nlohmann::json state_json(const TruncatedState& state);
TruncatedState state_from_json(const nlohmann::json& j, const TruncationSpec& trunc);

nlohmann::json conservation_json(const ConservationLog& log);

/// Text matrix: header line "resolution kappa time", then one row per x1 sample.
void write_grid(std::ostream& os, const Eigen::MatrixXd& grid, double kappa, double time);

/// Full-precision rendering used for every number written to text output.
std::string format_double(double v);

}  // namespace eulerstab
