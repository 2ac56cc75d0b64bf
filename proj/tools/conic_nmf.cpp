// conic_nmf: generate cone datasets, factorize, estimate K, run benchmarks.
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "conic_nmf/baselines.hpp"
#include "conic_nmf/cr1nmf.hpp"
#include "conic_nmf/experiment.hpp"
#include "conic_nmf/io.hpp"
#include "conic_nmf/metrics.hpp"
#include "conic_nmf/rank_select.hpp"

namespace fs = std::filesystem;
using namespace conic_nmf;
using io::Json;
using io::KeyValues;

namespace {

constexpr int kUsage = 2;
constexpr int kNumerical = 3;

const std::set<std::string> kDatasetKeys = {"F",      "N",      "K",       "alpha", "beta", "bases",
                                            "lambda", "mixing", "project", "seed",  "noise"};
const std::set<std::string> kBenchmarkKeys = {"solvers",     "inits",       "seeds", "runs",
                                              "iterations",  "stop_at_cr1", "time_budget",
                                              "time_factor", "eta",         "spkm_iterations"};

/// Folds trailing `--key value` / `--key=value` pairs into kv; flags win.
void apply_overrides(const std::vector<std::string>& extras, const std::set<std::string>& allowed,
                     KeyValues& kv) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) throw CLI::ExtrasError({a});
    std::string key = a.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw CLI::ArgumentMismatch("--" + key + " needs a value");
      value = extras[++i];
    }
    if (!allowed.count(key)) throw CLI::ExtrasError({a});
    kv[key] = value;
  }
}

KeyValues load_config(const std::string& path) {
  return path.empty() ? KeyValues{} : io::read_key_values(path);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void write_trace_csv(const std::string& path, const std::vector<double>& errors) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  out << "iteration,relative_error\n";
  for (std::size_t i = 0; i < errors.size(); ++i) out << i << ',' << io::detail::format_double(errors[i]) << '\n';
}

std::vector<int> argmax_labels(const Matrix& h) {
  std::vector<int> out(static_cast<std::size_t>(h.cols()));
  for (Index n = 0; n < h.cols(); ++n) {
    Index best = 0;
    h.col(n).maxCoeff(&best);
    out[static_cast<std::size_t>(n)] = static_cast<int>(best);
  }
  return out;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string config;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& extras) {
  KeyValues kv = load_config(a.config);
  apply_overrides(extras, kDatasetKeys, kv);
  for (const auto& [k, v] : kv) {
    if (!kDatasetKeys.count(k)) throw Error(Errc::invalid_argument, "unknown config key '" + k + "'");
  }
  const auto spec = experiment::dataset_spec(kv);
  const auto data = experiment::make_dataset(spec);
  io::write_csv(a.out + ".csv", data.data);
  io::write_labels(a.out + ".labels", data.labels);
  Json meta = io::dataset_meta(spec.generator, kv);
  meta["noise"] = spec.noise;
  if (spec.generator.cones.size() >= 2) {
    const auto check = check_geometric_assumption(spec.generator.cones);
    meta["geometric_assumption"] = {{"holds", check.holds}, {"margin", check.margin}};
  }
  io::write_json(a.out + ".meta.json", meta);
  io::write_key_values(a.out + ".config", kv);
  std::cout << "wrote " << a.out << ".{csv,labels,meta.json,config} (" << data.data.rows() << " x "
            << data.data.cols() << ")\n";
  return 0;
}

// --------------------------------------------------------------- factorize

struct FactorizeArgs {
  std::string input;
  long long k = 0;
  std::string solver = "cr1";
  std::string init = "rand";
  int iters = 100;
  std::uint64_t seed = 0;
  std::string report;
  std::string out_dir = ".";
  std::string labels;
  double eta = 0.01;
  double tol = 1e-10;
  int max_iter = 1000;
};

int cmd_factorize(const FactorizeArgs& a) {
  const Matrix v = io::read_data_matrix(a.input);
  if (v.size() == 0) throw Error(Errc::invalid_argument, a.input + ": empty matrix");
  if (a.k < 1) throw Error(Errc::invalid_argument, "K must be >= 1");
  const Index k = a.k;
  std::optional<std::vector<int>> truth;
  if (!a.labels.empty()) {
    truth = io::read_labels(a.labels);
    if (static_cast<Index>(truth->size()) != v.cols()) {
      throw Error(Errc::invalid_argument, "label count does not match the number of columns");
    }
  }
  fs::create_directories(a.out_dir);
  const std::string report = a.report.empty() ? (fs::path(a.out_dir) / "report.json").string() : a.report;

  using clock = std::chrono::steady_clock;
  Json j = {{"input", a.input}, {"F", v.rows()}, {"N", v.cols()}, {"K", k},
            {"solver", a.solver}, {"seed", a.seed}};
  Matrix w, h;
  std::vector<double> trace;
  std::vector<int> predicted;
  const auto t0 = clock::now();
  if (a.solver == "cr1") {
    Cr1Options o;
    o.power = PowerOptions{a.tol, a.max_iter};
    const auto r = factorize(v, k, o);
    w = r.factors.w;
    h = r.factors.h;
    trace = {r.factors.relative_error};
    predicted = r.partition.labels;
    j["sigmas"] = r.sigmas;
    j["cluster_sizes"] = r.sizes;
    j["empty_clusters"] = r.partition.empty_clusters();
    j["iterations"] = 0;
  } else {
    InitializerSettings settings;
    settings.cr1_eta = a.eta;
    const AlgorithmRegistry reg(settings);
    const auto& solver = reg.solver(a.solver);
    const auto& init = reg.initializer(a.init);
    Rng rng(a.seed);
    InitPair start = init(v, k, rng);
    SolverOptions o;
    o.iterations = a.iters;
    const auto run = solver(v, std::move(start.w), std::move(start.h), o);
    w = run.factors.w;
    h = run.factors.h;
    trace = run.trace.errors;
    predicted = argmax_labels(h);
    j["init"] = a.init;
    j["iterations"] = run.trace.iterations;
  }
  const double wall = std::chrono::duration<double>(clock::now() - t0).count();
  j["relative_error"] = trace.back();
  j["trace"] = trace;
  j["wall_clock"] = wall;
  if (truth) {
    j["clustering"] = {{"nmi", nmi(predicted, *truth)},
                       {"dice", dice(predicted, *truth)},
                       {"purity", purity(predicted, *truth)},
                       {"exact", partition_match(predicted, *truth)}};
  }
  io::write_csv((fs::path(a.out_dir) / "W.csv").string(), w);
  io::write_csv((fs::path(a.out_dir) / "H.csv").string(), h);
  write_trace_csv((fs::path(a.out_dir) / "trace.csv").string(), trace);
  io::write_json(report, j);
  std::cout << "relative_error " << io::detail::format_double(trace.back()) << "\n";
  return 0;
}

// -------------------------------------------------------------- estimate-k

struct EstimateArgs {
  std::string input;
  long long k_min = 0;
  long long k_max = 0;
  bool normalize = false;
  std::string output;
};

int cmd_estimate_k(const EstimateArgs& a) {
  const Matrix v = io::read_data_matrix(a.input);
  auto [lo, hi] = default_k_range(v.rows(), v.cols());
  if (a.k_min > 0) lo = a.k_min;
  if (a.k_max > 0) hi = a.k_max;
  RankOptions o;
  o.normalize_columns = a.normalize;
  const auto r = estimate_k(v, lo, hi, o);
  Json ratios = Json::array();
  for (double x : r.ratios) ratios.push_back(std::isinf(x) ? Json("inf") : Json(x));
  const Json j = {{"k_hat", r.k_hat},
                  {"k_min", r.k_min},
                  {"k_max", r.k_max},
                  {"ratios", ratios},
                  {"singular_values", to_std(r.singular_values)}};
  if (!a.output.empty()) io::write_json(a.output, j);
  std::cout << j.dump() << "\n";
  return 0;
}

// --------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  std::string config;
  std::string report = "benchmark.json";
  std::string csv;
};

int cmd_benchmark(const BenchmarkArgs& a, const std::vector<std::string>& extras) {
  KeyValues kv = load_config(a.config);
  std::set<std::string> allowed = kDatasetKeys;
  allowed.insert(kBenchmarkKeys.begin(), kBenchmarkKeys.end());
  apply_overrides(extras, allowed, kv);
  for (const auto& [k, v] : kv) {
    if (!allowed.count(k)) throw Error(Errc::invalid_argument, "unknown config key '" + k + "'");
  }
  const auto settings = experiment::benchmark_settings(kv);
  const auto report = experiment::run_benchmark(settings);
  Json rows = Json::array();
  for (const auto& r : report.rows) rows.push_back(experiment::to_json(r));
  const Json j = {{"config", kv}, {"rows", rows}, {"summary", experiment::summarize(report)}};
  io::write_json(a.report, j);
  const std::string csv = a.csv.empty() ? fs::path(a.report).replace_extension(".csv").string() : a.csv;
  experiment::write_benchmark_csv(csv, report);
  const std::string curves = fs::path(csv).replace_extension(".curves.csv").string();
  experiment::write_curves_csv(curves, report);
  std::cout << "wrote " << a.report << ", " << csv << " and " << curves << " (" << report.rows.size()
            << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cone-structured nonnegative matrix factorization"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "sample a labeled dataset from circular cones");
  g->add_option("--config,-c", gen.config, "key-value config file");
  g->add_option("--out,-o", gen.out, "output prefix")->required();
  g->allow_extras();
  g->footer("Any config key (F, N, K, alpha, beta, bases, lambda, mixing, project, seed, noise)\n"
            "may also be given as --key value; flags override the file.");

  FactorizeArgs fac;
  auto* f = app.add_subcommand("factorize", "factorize a nonnegative matrix");
  f->add_option("--input,-i", fac.input, "CSV or MatrixMarket file")->required();
  f->add_option("--k,-k", fac.k, "number of components")->required();
  f->add_option("--solver", fac.solver, "cr1 | mult | hals")->capture_default_str();
  f->add_option("--init", fac.init, "rand | spkm | nndsvd | cr1 (iterative solvers)")->capture_default_str();
  f->add_option("--iters", fac.iters, "iterations (ignored by cr1)")->capture_default_str();
  f->add_option("--seed", fac.seed, "seed for randomized initializers")->capture_default_str();
  f->add_option("--report", fac.report, "report JSON (default <out>/report.json)");
  f->add_option("--out", fac.out_dir, "directory for W.csv, H.csv, trace.csv")->capture_default_str();
  f->add_option("--labels", fac.labels, "ground-truth labels for clustering scores");
  f->add_option("--eta", fac.eta, "perturbation size of the cr1 initializer")->capture_default_str();
  f->add_option("--tol", fac.tol, "power iteration tolerance")->capture_default_str();
  f->add_option("--max-iter", fac.max_iter, "power iteration budget")->capture_default_str();

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate-k", "estimate the number of cones");
  e->add_option("--input,-i", est.input, "CSV or MatrixMarket file")->required();
  e->add_option("--k-min", est.k_min, "smallest candidate (default 2)");
  e->add_option("--k-max", est.k_max, "largest candidate (default min(F, N)/2, at most 100)");
  e->add_flag("--normalize", est.normalize, "scale columns to unit norm first");
  e->add_option("--output,-o", est.output, "also write the JSON here");

  BenchmarkArgs bench;
  auto* b = app.add_subcommand("benchmark", "time solvers against cr1-nmf on generated data");
  b->add_option("--config,-c", bench.config, "key-value config file");
  b->add_option("--report,-r", bench.report, "report JSON")->capture_default_str();
  b->add_option("--csv", bench.csv, "row CSV (default: report path with .csv)");
  b->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*g) return cmd_generate(gen, g->remaining());
    if (*f) return cmd_factorize(fac);
    if (*e) return cmd_estimate_k(est);
    if (*b) return cmd_benchmark(bench, b->remaining());
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.is_numerical() ? kNumerical : kUsage;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
