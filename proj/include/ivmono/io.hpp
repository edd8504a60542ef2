#pragma once

#include "ivmono/cells.hpp"
#include "ivmono/dgp.hpp"
#include "ivmono/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace ivmono::io {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;
inline constexpr const char* tool_version = "0.1.0";

//! Reads a `y,t,z` CSV. z may be integers or labels; given labels fix the
//! order, otherwise integer-valued labels sort numerically and the rest
//! lexicographically. k defaults to the largest observed treatment.
Dataset
read_dataset(const std::filesystem::path& path,
             const std::vector<std::string>& labels = {},
             std::size_t k = 0);

void
write_dataset(const std::filesystem::path& path, const Dataset& data);

//! Columns u_0..u_k, y_0..y_k, t_at_z0..t_at_zm, z.
void
write_latent(const std::filesystem::path& path, const Dataset& data);

//! DGP config from JSON. A "preset" key (with optional "k") seeds every
//! field; other keys override.
DgpConfig
config_from_json(const json& j);

json
config_to_json(const DgpConfig& config);

json
read_json(const std::filesystem::path& path);

void
write_json(const std::filesystem::path& path, const json& j);

void
write_text(const std::filesystem::path& path, const std::string& text);

//! 64-bit FNV-1a.
std::uint64_t
fnv1a(std::string_view bytes);

std::string
hash_hex(const json& j);

//! "c:a,b:c" -> pairs of instrument indices.
std::vector<InstrumentPair>
parse_pairs(const std::string& text, const std::vector<std::string>& labels);

//! "0.1,0.5,0.9" or "0.05:0.95:0.05".
std::vector<double>
parse_tau_grid(const std::string& text);

json
options_to_json(const EstimateOptions& options, const std::vector<std::string>& labels);

json
detections_to_json(const std::vector<SignDetection>& detections, const std::vector<std::string>& labels);

json
propensity_to_json(const PropensityMatrix& p);

//! Report body for an identification run (analytic or estimated).
json
identification_to_json(const Identification& id, const CellTables& tables);

json
estimate_to_json(const Estimate& est, const EstimateOptions& options);

//! Long-format s,t,y,phi table of every map.
std::string
maps_csv(const MapFamily& maps);

//! s,t,tau,qte rows.
std::string
qte_csv(const std::vector<QteCurve>& curves);

//! Doubles as JSON; non-finite values become null.
json
number(double v);

} // namespace ivmono::io
