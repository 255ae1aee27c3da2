#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "saddlelab/analysis.hpp"
#include "saddlelab/experiments.hpp"

namespace saddlelab {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Config parsing. Every function throws ConfigError with a path-qualified
// message on missing fields, wrong types, unknown keys or invalid values.

ManifoldSpec parse_manifold(const Json& j);
CostSpec parse_cost(const Json& j, const ManifoldSpec& m);
AlgorithmSpec parse_algorithm(const Json& j);
SamplerSpec parse_sampler(const Json& j, const ManifoldSpec& m);
StopRule parse_stop(const Json& j);
ExperimentTolerances parse_tolerances(const Json& j);
MapKind parse_map_kind(const Json& j);

/// {"schema": 1, "experiment": {...}}; the plan is validated before return.
/// An optional "x0" inside the experiment is returned separately (used by
/// the single-trajectory command).
struct ExperimentConfig {
  ExperimentPlan plan;
  std::optional<Point> x0;
};
ExperimentConfig parse_experiment_config(const Json& root);

/// {"schema": 1, "scan": {manifold, cost, map, point, alpha_max, grid_size}}
struct ScanConfig {
  ManifoldSpec manifold = ManifoldSpec::euclidean(1);
  CostSpec cost;
  MapKind map;
  Point point;
  double alpha_max = 1.0;
  int grid_size = 2048;
};
ScanConfig parse_scan_config(const Json& root);

/// Reads and parses a JSON file; ConfigError when missing or malformed.
Json read_json_file(const std::filesystem::path& path);

// Serialization. Infinite values are written as null.

Json to_json(const AvoidanceReport& report);
Json to_json(const SingularSet& set);
Json to_json(const StepSizeBound& bound);

/// Canonical text form: two-space indent, sorted keys, trailing newline.
std::string dump_json(const Json& j);

/// Columns iter, x0..x{n-1}, step, grad_norm, shrinks; the final row leaves
/// step and shrinks empty.
std::string trajectory_csv(const Trajectory& traj);

/// Writes via a temporary sibling and rename. Throws Error on failure.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace saddlelab
