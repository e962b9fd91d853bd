#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace spinmotion::montecarlo {

// One swept parameter: a name and the grid of values it takes.
struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

// A full sweep: the cartesian product of the axes, trials_per_point
// repetitions at every grid point. Trial (point_index, trial_index) is
// seeded base_seed + (point_index << 32) + trial_index (wrapping), so seeds
// never depend on the trial count or the schedule: refining a sweep with
// more trials reuses the old trials' samples unchanged, and results are
// bit-identical for any worker count.
struct SweepSpec {
  std::vector<SweepAxis> axes;
  int trials_per_point = 200;
  uint64_t base_seed = 0;
  std::string simulator_id;
  int workers = 0;  // 0 = resolve_workers default
};

// Aggregate statistics of one sample set.
struct SampleStats {
  double mean = 0.0;
  double std = 0.0;  // unbiased (n - 1); 0 for a single sample
  double p50 = 0.0;  // nearest-rank percentiles
  double p95 = 0.0;
};

// Unbiased mean/std and nearest-rank percentiles (the p-th percentile is
// the ceil(p/100 * n)-th smallest sample). Throws std::invalid_argument on
// an empty input. Input order never matters.
SampleStats summarize(std::vector<double> samples);

// One grid point's aggregated outcome. params aligns with
// SweepResult::axis_names. Failed trials (simulator threw, or returned a
// non-finite value) are excluded from the statistics and counted; a point
// where every trial failed is flagged and carries NaN statistics.
struct PointResult {
  std::vector<double> params;
  int n = 0;  // successful trials
  SampleStats stats;
  int failures = 0;
  bool all_failed = false;
};

// Full sweep outcome plus provenance. Points are in row-major grid order
// (last axis fastest).
struct SweepResult {
  std::vector<std::string> axis_names;
  std::vector<PointResult> points;
  int trials_per_point = 0;
  uint64_t base_seed = 0;
  std::string simulator_id;
  std::string generator_id;  // PRNG identity (kGeneratorId)
  std::string tool_version;
  uint64_t spec_hash = 0;  // hash of the spec that produced this result
};

// A simulator maps (named parameter values, seed) to one infidelity sample.
// Simulators must be pure: same arguments, same result, no shared state.
using Simulator =
    std::function<double(const std::map<std::string, double>&, uint64_t)>;

// Worker-count resolution: requested > 0 wins; else the SPINMOTION_WORKERS
// environment variable (positive integer); else hardware concurrency;
// else 1.
int resolve_workers(int requested);

// FNV-1a 64-bit hash of the spec's canonical serialisation (axes, trials,
// seed, simulator id). Changes iff the sweep definition changes.
uint64_t spec_hash(const SweepSpec& spec);

// Evaluate every grid point. Trials are distributed over
// resolve_workers(spec.workers) threads through a shared task counter;
// each trial writes only its own slot and aggregation is a single serial
// pass, so the result is identical for any worker count. A trial that
// throws or returns a non-finite value is recorded as a failure and the
// sweep continues. Throws std::invalid_argument on an empty axis, a
// duplicate axis name, trials_per_point < 1, a grid of 2^32 points or
// more, or a null simulator.
SweepResult run_sweep(const SweepSpec& spec, const Simulator& simulator);

// CSV persistence: a "# spinmotion-sweep-csv v1" schema line, one "# key=value ..."
// provenance line, a header row, then one row per grid point
// (axes..., n, mean, std, p50, p95, failures). Floats are printed with
// %.17g so echoed parameters round-trip exactly.
void write_csv(const SweepResult& r, std::ostream& os);
void write_csv(const SweepResult& r, const std::string& path);

// JSON persistence (schema "spinmotion-sweep-json v1"): full provenance,
// the axes, and every point record. NaN statistics of all-failed points
// serialise as null.
std::string result_to_json(const SweepResult& r);

}  // namespace spinmotion::montecarlo
