#include "spinmotion/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "spinmotion/constants.hpp"

namespace spinmotion::montecarlo {

namespace {

// %.17g: shortest text that still round-trips an IEEE double exactly.
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void fnv1a(uint64_t& h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

void fnv1a_str(uint64_t& h, const std::string& s) {
  fnv1a(h, s.data(), s.size());
  const char sep = '\x1f';
  fnv1a(h, &sep, 1);
}

void validate(const SweepSpec& spec, const Simulator& simulator) {
  if (!simulator) throw std::invalid_argument("run_sweep: null simulator");
  if (spec.trials_per_point < 1)
    throw std::invalid_argument("run_sweep: trials_per_point must be >= 1");
  std::set<std::string> names;
  uint64_t n_points = 1;
  for (const auto& axis : spec.axes) {
    if (axis.values.empty())
      throw std::invalid_argument("run_sweep: axis \"" + axis.name +
                                  "\" has no values");
    if (!names.insert(axis.name).second)
      throw std::invalid_argument("run_sweep: duplicate axis \"" + axis.name +
                                  "\"");
    if (axis.values.size() >= (1ULL << 32) ||
        (n_points *= axis.values.size()) >= (1ULL << 32))
      throw std::invalid_argument("run_sweep: grid of 2^32 points or more");
  }
}

}  // namespace

SampleStats summarize(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("summarize: empty input");
  const auto n = samples.size();
  SampleStats s;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
           static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(n - 1));
  }
  std::sort(samples.begin(), samples.end());
  const auto rank = [n](uint64_t pct) {  // ceil(pct/100 * n), 1-based
    const uint64_t k = (pct * static_cast<uint64_t>(n) + 99) / 100;
    return static_cast<std::size_t>(std::max<uint64_t>(k, 1) - 1);
  };
  s.p50 = samples[rank(50)];
  s.p95 = samples[rank(95)];
  return s;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPINMOTION_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

uint64_t spec_hash(const SweepSpec& spec) {
  uint64_t h = 14695981039346656037ULL;
  fnv1a_str(h, "spinmotion-sweep v1");
  fnv1a_str(h, spec.simulator_id);
  fnv1a(h, &spec.trials_per_point, sizeof(spec.trials_per_point));
  fnv1a(h, &spec.base_seed, sizeof(spec.base_seed));
  for (const auto& axis : spec.axes) {
    fnv1a_str(h, axis.name);
    for (double v : axis.values) fnv1a(h, &v, sizeof(v));
  }
  return h;
}

SweepResult run_sweep(const SweepSpec& spec, const Simulator& simulator) {
  validate(spec, simulator);

  SweepResult out;
  for (const auto& axis : spec.axes) out.axis_names.push_back(axis.name);
  out.trials_per_point = spec.trials_per_point;
  out.base_seed = spec.base_seed;
  out.simulator_id = spec.simulator_id;
  out.generator_id = kGeneratorId;
  out.tool_version = kToolVersion;
  out.spec_hash = spec_hash(spec);

  uint64_t n_points = 1;
  for (const auto& axis : spec.axes) n_points *= axis.values.size();

  // Row-major point coordinates, last axis fastest.
  std::vector<std::vector<double>> point_params(n_points);
  std::vector<std::map<std::string, double>> point_maps(n_points);
  for (uint64_t p = 0; p < n_points; ++p) {
    auto& params = point_params[p];
    params.resize(spec.axes.size());
    uint64_t rem = p;
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      const auto& values = spec.axes[a].values;
      params[a] = values[rem % values.size()];
      rem /= values.size();
    }
    for (std::size_t a = 0; a < spec.axes.size(); ++a)
      point_maps[p][spec.axes[a].name] = params[a];
  }

  // Every trial owns one slot; failures become NaN. Slots are disjoint, so
  // the only shared mutable state is the task counter.
  const auto trials = static_cast<uint64_t>(spec.trials_per_point);
  const uint64_t n_tasks = n_points * trials;
  std::vector<double> slots(n_tasks);
  std::atomic<uint64_t> next_task{0};
  const auto work = [&]() {
    for (;;) {
      const uint64_t task = next_task.fetch_add(1);
      if (task >= n_tasks) return;
      const uint64_t point = task / trials;
      const uint64_t trial = task % trials;
      const uint64_t seed = spec.base_seed + (point << 32) + trial;
      double value = std::numeric_limits<double>::quiet_NaN();
      try {
        value = simulator(point_maps[point], seed);
      } catch (const std::exception&) {
      }
      if (!std::isfinite(value))
        value = std::numeric_limits<double>::quiet_NaN();
      slots[task] = value;
    }
  };

  const int n_workers = std::max(
      1, std::min<int>(resolve_workers(spec.workers),
                       static_cast<int>(std::min<uint64_t>(n_tasks, 1024))));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Serial aggregation in grid order keeps the result schedule-independent.
  out.points.resize(n_points);
  for (uint64_t p = 0; p < n_points; ++p) {
    PointResult& rec = out.points[p];
    rec.params = std::move(point_params[p]);
    std::vector<double> ok;
    ok.reserve(trials);
    for (uint64_t k = 0; k < trials; ++k) {
      const double v = slots[p * trials + k];
      if (std::isfinite(v))
        ok.push_back(v);
      else
        ++rec.failures;
    }
    rec.n = static_cast<int>(ok.size());
    if (ok.empty()) {
      rec.all_failed = true;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      rec.stats = {nan, nan, nan, nan};
    } else {
      rec.stats = summarize(std::move(ok));
    }
  }
  return out;
}

void write_csv(const SweepResult& r, std::ostream& os) {
  os << "# spinmotion-sweep-csv v1\n";
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(r.spec_hash));
  os << "# simulator=" << r.simulator_id << " trials_per_point="
     << r.trials_per_point << " base_seed=" << r.base_seed
     << " generator=" << r.generator_id << " tool_version=" << r.tool_version
     << " spec_hash=" << hash << "\n";
  for (const auto& name : r.axis_names) os << name << ",";
  os << "n,mean,std,p50,p95,failures\n";
  for (const auto& pt : r.points) {
    for (double v : pt.params) os << fmt_double(v) << ",";
    os << pt.n << "," << fmt_double(pt.stats.mean) << ","
       << fmt_double(pt.stats.std) << "," << fmt_double(pt.stats.p50) << ","
       << fmt_double(pt.stats.p95) << "," << pt.failures << "\n";
  }
}

void write_csv(const SweepResult& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  write_csv(r, os);
  os.flush();
  if (!os) throw std::runtime_error("write_csv: write failed for " + path);
}

std::string result_to_json(const SweepResult& r) {
  nlohmann::json j;
  j["schema"] = "spinmotion-sweep-json v1";
  j["simulator_id"] = r.simulator_id;
  j["trials_per_point"] = r.trials_per_point;
  j["base_seed"] = r.base_seed;
  j["generator_id"] = r.generator_id;
  j["tool_version"] = r.tool_version;
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(r.spec_hash));
  j["spec_hash"] = hash;
  j["axis_names"] = r.axis_names;
  nlohmann::json points = nlohmann::json::array();
  for (const auto& pt : r.points) {
    nlohmann::json rec;
    rec["params"] = pt.params;
    rec["n"] = pt.n;
    rec["mean"] = pt.stats.mean;
    rec["std"] = pt.stats.std;
    rec["p50"] = pt.stats.p50;
    rec["p95"] = pt.stats.p95;
    rec["failures"] = pt.failures;
    rec["all_failed"] = pt.all_failed;
    points.push_back(std::move(rec));
  }
  j["points"] = std::move(points);
  return j.dump(2);
}

}  // namespace spinmotion::montecarlo
