#pragma once

// Key-value driven dataset generation and the solver benchmark sweep.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "conic_nmf/baselines.hpp"
#include "conic_nmf/cr1nmf.hpp"
#include "conic_nmf/io.hpp"
#include "conic_nmf/synth.hpp"

namespace conic_nmf::experiment {

using io::KeyValues;

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto t = io::detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

inline const std::string* find(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  return it == kv.end() ? nullptr : &it->second;
}

inline double get_double(const KeyValues& kv, const std::string& key, std::optional<double> fallback = {}) {
  if (const auto* v = find(kv, key)) return io::detail::parse_double(*v, "config key '" + key + "'");
  if (fallback) return *fallback;
  throw Error(Errc::invalid_argument, "missing config key '" + key + "'");
}

inline long long get_int(const KeyValues& kv, const std::string& key, std::optional<long long> fallback = {}) {
  if (const auto* v = find(kv, key)) return io::detail::parse_int(*v, "config key '" + key + "'");
  if (fallback) return *fallback;
  throw Error(Errc::invalid_argument, "missing config key '" + key + "'");
}

inline bool get_bool(const KeyValues& kv, const std::string& key, bool fallback) {
  const auto* v = find(kv, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw Error(Errc::invalid_argument, "config key '" + key + "' must be true or false");
}

inline std::vector<double> get_doubles(const std::string& value, const std::string& key) {
  std::vector<double> out;
  for (const auto& t : split_list(value)) out.push_back(io::detail::parse_double(t, "config key '" + key + "'"));
  return out;
}

}  // namespace detail

/// A generator configuration plus the post-hoc noise level.
struct DatasetSpec {
  GeneratorConfig generator;
  double noise = 0.0;
};

/// Keys: F, N, K, alpha (scalar or per-cone list), beta (default 4 max(alpha)
/// + 0.01), bases (axis | positive), lambda (inv_index | scalar | list),
/// mixing (uniform | list), project, seed, noise.
inline DatasetSpec dataset_spec(const KeyValues& kv) {
  DatasetSpec spec;
  auto& g = spec.generator;
  const long long f = detail::get_int(kv, "F");
  const long long n = detail::get_int(kv, "N");
  const long long k = detail::get_int(kv, "K");
  if (f < 1 || n < 0 || k < 1) throw Error(Errc::invalid_argument, "need F >= 1, N >= 0, K >= 1");
  const std::size_t kk = static_cast<std::size_t>(k);

  std::vector<double> alphas = detail::get_doubles(detail::find(kv, "alpha") ? kv.at("alpha") : "0.2", "alpha");
  if (alphas.size() == 1) alphas.assign(kk, alphas.front());
  if (alphas.size() != kk) throw Error(Errc::invalid_argument, "alpha needs 1 or K values");
  const double max_alpha = *std::max_element(alphas.begin(), alphas.end());
  const double beta = detail::get_double(kv, "beta", 4.0 * max_alpha + 0.01);

  const std::string bases = detail::find(kv, "bases") ? kv.at("bases") : "axis";
  Matrix u;
  if (bases == "axis") u = equiangular_bases(f, k, beta);
  else if (bases == "positive") u = positive_equiangular_bases(f, k, beta);
  else throw Error(Errc::invalid_argument, "bases must be 'axis' or 'positive'");

  g.dim = f;
  g.samples = n;
  g.cones = make_cone_set(u, alphas);

  const std::string lambda = detail::find(kv, "lambda") ? kv.at("lambda") : "inv_index";
  if (lambda == "inv_index") {
    g.lambdas = inverse_index_rates(kk);
  } else {
    g.lambdas = detail::get_doubles(lambda, "lambda");
    if (g.lambdas.size() == 1) g.lambdas.assign(kk, g.lambdas.front());
  }
  const std::string mixing = detail::find(kv, "mixing") ? kv.at("mixing") : "uniform";
  if (mixing != "uniform") g.mixing = detail::get_doubles(mixing, "mixing");

  g.project = detail::get_bool(kv, "project", true);
  g.seed = static_cast<std::uint64_t>(detail::get_int(kv, "seed", 0));
  spec.noise = detail::get_double(kv, "noise", 0.0);
  if (!(spec.noise >= 0.0)) throw Error(Errc::invalid_argument, "noise must be >= 0");
  g.validate();
  return spec;
}

/// Noise draws use a stream disjoint from every column stream.
inline LabeledDataset make_dataset(const DatasetSpec& spec) {
  LabeledDataset d = generate(spec.generator);
  if (spec.noise > 0.0) {
    Rng rng = Rng::stream(spec.generator.seed, ~std::uint64_t{0});
    d.data = add_noise(d.data, spec.noise, rng);
  }
  return d;
}

/// Worker count: CONIC_NMF_THREADS when set and positive, otherwise the
/// hardware concurrency; never more than `tasks`.
inline unsigned worker_count(std::size_t tasks) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CONIC_NMF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, tasks)));
}

/// Runs fn(i) for i in [0, tasks) on a pool; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t tasks, Fn fn) {
  const unsigned workers = worker_count(tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto body = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = tasks;
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

struct BenchmarkSettings {
  DatasetSpec base;                 // N and seed are overridden per task
  std::vector<Index> sizes;         // N values
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> solvers;  // "cr1" plus registry solvers
  std::vector<std::string> inits;
  int iterations = 100;
  bool stop_at_cr1 = true;            // iterative runs stop on reaching the cr1 error
  std::optional<double> time_budget;  // seconds per iterative run
  std::optional<double> time_factor;  // budget as a multiple of the cr1 time
  InitializerSettings init_settings;
};

/// Keys: the dataset keys, plus solvers, inits (default rand), N (list),
/// seeds (list) or runs (count, seeds seed..seed+runs-1), iterations,
/// stop_at_cr1, time_budget, time_factor, eta, spkm_iterations.
inline BenchmarkSettings benchmark_settings(const KeyValues& kv) {
  BenchmarkSettings s;
  KeyValues single = kv;
  const auto sizes = detail::split_list(detail::find(kv, "N") ? kv.at("N") : "");
  if (sizes.empty()) throw Error(Errc::invalid_argument, "benchmark needs at least one N");
  single["N"] = sizes.front();
  s.base = dataset_spec(single);
  for (const auto& t : sizes) {
    const long long n = io::detail::parse_int(t, "config key 'N'");
    if (n < 1) throw Error(Errc::invalid_argument, "benchmark sizes must be >= 1");
    s.sizes.push_back(n);
  }
  if (const auto* v = detail::find(kv, "seeds")) {
    for (const auto& t : detail::split_list(*v)) {
      s.seeds.push_back(static_cast<std::uint64_t>(io::detail::parse_int(t, "config key 'seeds'")));
    }
  } else {
    const long long runs = detail::get_int(kv, "runs", 1);
    if (runs < 1) throw Error(Errc::invalid_argument, "runs must be >= 1");
    for (long long r = 0; r < runs; ++r) s.seeds.push_back(s.base.generator.seed + static_cast<std::uint64_t>(r));
  }
  if (s.seeds.empty()) throw Error(Errc::invalid_argument, "benchmark needs at least one seed");
  s.solvers = detail::split_list(detail::find(kv, "solvers") ? kv.at("solvers") : "");
  if (s.solvers.empty()) throw Error(Errc::invalid_argument, "benchmark needs at least one solver");
  s.inits = detail::split_list(detail::find(kv, "inits") ? kv.at("inits") : "rand");
  if (s.inits.empty()) throw Error(Errc::invalid_argument, "benchmark needs at least one initializer");
  s.iterations = static_cast<int>(detail::get_int(kv, "iterations", 100));
  if (s.iterations < 0) throw Error(Errc::invalid_argument, "iterations must be >= 0");
  s.stop_at_cr1 = detail::get_bool(kv, "stop_at_cr1", true);
  if (detail::find(kv, "time_budget")) s.time_budget = detail::get_double(kv, "time_budget");
  if (detail::find(kv, "time_factor")) s.time_factor = detail::get_double(kv, "time_factor");
  s.init_settings.cr1_eta = detail::get_double(kv, "eta", 0.01);
  s.init_settings.spkm_iterations = static_cast<int>(detail::get_int(kv, "spkm_iterations", 10));

  const AlgorithmRegistry reg(s.init_settings);
  for (const auto& name : s.solvers) {
    if (name != "cr1" && !reg.has_solver(name)) throw Error(Errc::invalid_argument, "unknown solver '" + name + "'");
  }
  for (const auto& name : s.inits) {
    if (!reg.has_initializer(name)) throw Error(Errc::invalid_argument, "unknown initializer '" + name + "'");
  }
  return s;
}

struct BenchmarkRow {
  Index n = 0;
  std::uint64_t seed = 0;
  std::string solver;
  std::string init;  // empty for cr1
  double relative_error = 0.0;
  int iterations = 0;
  double init_seconds = 0.0;
  double wall_clock = 0.0;  // init + solver
  double cr1_error = 0.0;
  double cr1_seconds = 0.0;
  std::optional<double> time_to_cr1_error;  // including initialization
  std::optional<int> iterations_to_cr1_error;
  std::vector<double> trace;

  auto key() const { return std::tie(n, seed, solver, init); }
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;  // sorted by (N, seed, solver, init)
};

inline BenchmarkReport run_benchmark(const BenchmarkSettings& s) {
  using clock = std::chrono::steady_clock;
  struct Task {
    Index n;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (Index n : s.sizes)
    for (std::uint64_t seed : s.seeds) tasks.push_back({n, seed});

  const Index k = static_cast<Index>(s.base.generator.cones.size());
  std::vector<std::vector<BenchmarkRow>> per_task(tasks.size());
  const AlgorithmRegistry reg(s.init_settings);

  parallel_for(tasks.size(), [&](std::size_t ti) {
    const Task t = tasks[ti];
    DatasetSpec spec = s.base;
    spec.generator.samples = t.n;
    spec.generator.seed = t.seed;
    const LabeledDataset data = make_dataset(spec);
    const Matrix& v = data.data;

    const auto c0 = clock::now();
    const Cr1Result cr1 = factorize(v, k);
    const double cr1_seconds = std::chrono::duration<double>(clock::now() - c0).count();
    const double target = cr1.factors.relative_error;

    auto& rows = per_task[ti];
    for (const auto& solver : s.solvers) {
      if (solver == "cr1") {
        BenchmarkRow r;
        r.n = t.n;
        r.seed = t.seed;
        r.solver = "cr1";
        r.relative_error = target;
        r.wall_clock = cr1_seconds;
        r.cr1_error = target;
        r.cr1_seconds = cr1_seconds;
        r.time_to_cr1_error = cr1_seconds;
        r.iterations_to_cr1_error = 0;
        rows.push_back(std::move(r));
        continue;
      }
      for (const auto& init : s.inits) {
        Rng rng = Rng::stream(t.seed ^ 0x9e3779b97f4a7c15ULL, std::hash<std::string>{}(solver + "/" + init));
        const auto i0 = clock::now();
        InitPair start = reg.initializer(init)(v, k, rng);
        const double init_seconds = std::chrono::duration<double>(clock::now() - i0).count();
        SolverOptions o;
        o.iterations = s.iterations;
        if (s.stop_at_cr1) o.target_error = target;
        std::optional<double> budget = s.time_budget;
        if (s.time_factor) {
          const double b = *s.time_factor * cr1_seconds;
          budget = budget ? std::min(*budget, b) : b;
        }
        if (budget) o.time_budget = std::max(0.0, *budget - init_seconds);
        const SolverRun run = reg.solver(solver)(v, std::move(start.w), std::move(start.h), o);

        BenchmarkRow r;
        r.n = t.n;
        r.seed = t.seed;
        r.solver = solver;
        r.init = init;
        r.relative_error = run.factors.relative_error;
        r.iterations = run.trace.iterations;
        r.init_seconds = init_seconds;
        r.wall_clock = init_seconds + run.trace.elapsed.back();
        r.cr1_error = target;
        r.cr1_seconds = cr1_seconds;
        if (auto tt = run.trace.time_to_reach(target)) r.time_to_cr1_error = init_seconds + *tt;
        r.iterations_to_cr1_error = run.trace.iterations_to_reach(target);
        r.trace = run.trace.errors;
        rows.push_back(std::move(r));
      }
    }
  });

  BenchmarkReport report;
  for (auto& rows : per_task)
    for (auto& r : rows) report.rows.push_back(std::move(r));
  std::sort(report.rows.begin(), report.rows.end(),
            [](const BenchmarkRow& a, const BenchmarkRow& b) { return a.key() < b.key(); });
  return report;
}

inline io::Json to_json(const BenchmarkRow& r) {
  io::Json j = {{"N", r.n},
                {"seed", r.seed},
                {"solver", r.solver},
                {"init", r.init},
                {"relative_error", r.relative_error},
                {"iterations", r.iterations},
                {"init_seconds", r.init_seconds},
                {"wall_clock", r.wall_clock},
                {"cr1_error", r.cr1_error},
                {"cr1_seconds", r.cr1_seconds},
                {"reached_cr1_error", r.time_to_cr1_error.has_value()},
                {"time_to_cr1_error", nullptr},
                {"iterations_to_cr1_error", nullptr}};
  if (r.time_to_cr1_error) j["time_to_cr1_error"] = *r.time_to_cr1_error;
  if (r.iterations_to_cr1_error) j["iterations_to_cr1_error"] = *r.iterations_to_cr1_error;
  return j;
}

/// Mean and standard deviation per (solver, init, N).
inline io::Json summarize(const BenchmarkReport& report) {
  struct Acc {
    std::vector<double> err, wall, ttr;
    std::size_t runs = 0;
  };
  std::map<std::tuple<std::string, std::string, Index>, Acc> groups;
  for (const auto& r : report.rows) {
    auto& a = groups[{r.solver, r.init, r.n}];
    a.runs++;
    a.err.push_back(r.relative_error);
    a.wall.push_back(r.wall_clock);
    if (r.time_to_cr1_error) a.ttr.push_back(*r.time_to_cr1_error);
  }
  auto stats = [](const std::vector<double>& x) -> io::Json {
    if (x.empty()) return nullptr;
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    const double sd = x.size() > 1 ? std::sqrt(var / static_cast<double>(x.size() - 1)) : 0.0;
    return {{"mean", m}, {"std", sd}};
  };
  io::Json out = io::Json::array();
  for (const auto& [key, a] : groups) {
    out.push_back({{"solver", std::get<0>(key)},
                   {"init", std::get<1>(key)},
                   {"N", std::get<2>(key)},
                   {"runs", a.runs},
                   {"relative_error", stats(a.err)},
                   {"wall_clock", stats(a.wall)},
                   {"reached_cr1_error", a.ttr.size()},
                   {"time_to_cr1_error", stats(a.ttr)}});
  }
  return out;
}

inline void write_benchmark_csv(const std::string& path, const BenchmarkReport& report) {
  auto out = io::detail::open_out(path);
  out << "N,seed,solver,init,relative_error,iterations,init_seconds,wall_clock,cr1_error,cr1_seconds,"
         "time_to_cr1_error,iterations_to_cr1_error\n";
  for (const auto& r : report.rows) {
    out << r.n << ',' << r.seed << ',' << r.solver << ',' << r.init << ','
        << io::detail::format_double(r.relative_error) << ',' << r.iterations << ','
        << io::detail::format_double(r.init_seconds) << ',' << io::detail::format_double(r.wall_clock) << ','
        << io::detail::format_double(r.cr1_error) << ',' << io::detail::format_double(r.cr1_seconds) << ','
        << (r.time_to_cr1_error ? io::detail::format_double(*r.time_to_cr1_error) : "") << ','
        << (r.iterations_to_cr1_error ? std::to_string(*r.iterations_to_cr1_error) : "") << '\n';
  }
}

/// Long-format error curves: one line per (run, iteration).
inline void write_curves_csv(const std::string& path, const BenchmarkReport& report) {
  auto out = io::detail::open_out(path);
  out << "N,seed,solver,init,iteration,relative_error\n";
  for (const auto& r : report.rows) {
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      out << r.n << ',' << r.seed << ',' << r.solver << ',' << r.init << ',' << i << ','
          << io::detail::format_double(r.trace[i]) << '\n';
    }
  }
}

}  // namespace conic_nmf::experiment
