#pragma once

#include "phasedrift/coefficients.hpp"
#include "phasedrift/config.hpp"
#include "phasedrift/convergence.hpp"
#include "phasedrift/delta_dynamics.hpp"
#include "phasedrift/limit_dynamics.hpp"
#include "phasedrift/stats.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace phasedrift {

using Json = nlohmann::ordered_json;

// Pretty JSON with every float printed as %.17g; non-finite values become null.
std::string dump_json(const Json& j);

Json to_json(const EnsembleStats& s);
Json to_json(const TransportCoefficients& c);
Json to_json(const IdentityReport& r);
Json to_json(const ConvergenceReport& r);
Json to_json(const SphereSolution& s);

// One row per checkpoint.
std::string ensemble_csv(const EnsembleStats& s);
// One row per momentum.
std::string coefficients_csv(const std::vector<TransportCoefficients>& cs,
                             const std::vector<IdentityReport>& reports);
// theta, q_re, q_im
std::string sphere_csv(const SphereSolution& s);
// observable, delta, distance, se
std::string trend_csv(const ConvergenceReport& r);
// t, X1..X3, K1..K3, Z
std::string path_csv(const PhasePath& p);

// Manifest for a run: command, canonical config text and hash, seed,
// library versions and a UTC timestamp.
Json make_manifest(const std::string& command, const RunConfig& cfg);

// Creates parent directories; throws ConfigError if the file cannot be written.
void write_file(const std::string& path, const std::string& content);

std::string library_version();

}  // namespace phasedrift
