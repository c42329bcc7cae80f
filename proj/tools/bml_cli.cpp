// bml: command-line front end for pairwise likelihood estimation on coded
// neighbor pairs.
//
// Exit codes: 0 success, 1 usage or input error, 2 estimate did not
// converge, 3 estimator and oracle disagree (verify).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bml/bml.hpp"
#include "bml/io.hpp"
#include "bml/oracle.hpp"

namespace {

using bml::io::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitDisagree = 3;

struct RunConfig {
  std::string input;
  std::string graph;
  std::string coding;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string scheme = "rook";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> pairs;
  std::size_t reps = 1000;
  std::size_t codings = 200;
  std::size_t threads = 0;
  double level = 0.95;
  bool fix_psi_zero = false;
  bool no_center = false;
  double tol = 1e-10;
  std::size_t max_iter = 200;
  std::string se_method = "expected";
  std::string output;
  std::string csv;

  // simulation
  std::size_t q = 100;
  std::vector<double> beta{1.0};
  double sigma2 = 1.0;
  double psi = 0.012;
  double lambda = 0.5;
};

[[noreturn]] void usage_fail(const std::string& what) { throw bml::Error(bml::ErrorCode::usage_error, what); }

std::uint64_t require_seed(const RunConfig& cfg, const std::string& why) {
  if (!cfg.seed) usage_fail("--seed is required " + why);
  return *cfg.seed;
}

bml::SolverOptions solver_options(const RunConfig& cfg) {
  bml::SolverOptions opt;
  opt.tol = cfg.tol;
  opt.max_iter = cfg.max_iter;
  opt.fix_psi_zero = cfg.fix_psi_zero;
  return opt;
}

bml::Theta truth_from(const RunConfig& cfg) {
  bml::Theta t{Eigen::Map<const bml::Vector>(cfg.beta.data(), static_cast<Eigen::Index>(cfg.beta.size())),
               cfg.sigma2, cfg.psi};
  t.validate();
  return t;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bml::Error(bml::ErrorCode::parse_error, "cannot open " + path);
  return in;
}

void emit_text(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output);
  if (!out) throw bml::Error(bml::ErrorCode::usage_error, "cannot write " + cfg.output);
  out << text;
}

void emit(const RunConfig& cfg, const json& report) { emit_text(cfg, report.dump(2) + "\n"); }

template <typename Writer>
void emit_csv(const std::string& path, Writer&& write) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw bml::Error(bml::ErrorCode::usage_error, "cannot write " + path);
  write(out);
}

bml::Contiguity parse_scheme(const std::string& s) {
  if (s == "rook") return bml::Contiguity::rook;
  if (s == "queen") return bml::Contiguity::queen;
  usage_fail("--scheme must be rook or queen");
}

/// Exactly one of --graph or --rows/--cols.
bml::NeighborGraph load_graph(const RunConfig& cfg, std::optional<std::size_t> units) {
  const bool lattice = cfg.rows > 0 || cfg.cols > 0;
  if (lattice == !cfg.graph.empty()) usage_fail("give exactly one graph source: --graph or --rows/--cols");
  if (lattice) return bml::build_lattice_graph(cfg.rows, cfg.cols, parse_scheme(cfg.scheme));
  auto in = open_input(cfg.graph);
  return bml::io::read_edge_list(in, units);
}

bml::SpatialDataset load_dataset(const RunConfig& cfg) {
  if (cfg.input.empty()) usage_fail("--input is required");
  auto in = open_input(cfg.input);
  const bml::io::DataTable table = bml::io::read_table_csv(in);
  bml::SpatialDataset data = bml::io::make_dataset(table, load_graph(cfg, table.ids.size()));
  if (!cfg.no_center) data.center();
  return data;
}

bml::CodingMode coding_mode(const RunConfig& cfg) {
  return cfg.pairs ? bml::CodingMode::subsample(*cfg.pairs) : bml::CodingMode::exhaustive();
}

/// Coding from --coding, or a random one drawn from --seed.
bml::PairCoding load_coding(const RunConfig& cfg, const bml::NeighborGraph& graph) {
  if (!cfg.coding.empty()) {
    auto in = open_input(cfg.coding);
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw bml::Error(bml::ErrorCode::parse_error, cfg.coding + ": " + e.what());
    }
    bml::PairCoding coding = bml::io::coding_from_json(j);
    if (auto bad = bml::find_coding_violation(graph, coding)) throw bml::Error(bml::ErrorCode::invalid_coding, *bad);
    return coding;
  }
  return bml::code_pairs(graph, require_seed(cfg, "to draw a random coding (or pass --coding)"), coding_mode(cfg));
}

json dataset_header(const RunConfig& cfg, const bml::SpatialDataset& data) {
  return {{"n", data.size()},
          {"k", data.predictors()},
          {"centered", data.centered},
          {"means",
           {{"y", data.y_mean},
            {"x", std::vector<double>(data.x_means.data(), data.x_means.data() + data.x_means.size())}}},
          {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)}};
}

int cmd_code(const RunConfig& cfg) {
  std::optional<std::size_t> units;
  if (!cfg.input.empty()) {
    auto in = open_input(cfg.input);
    units = bml::io::read_table_csv(in).ids.size();
  }
  const bml::NeighborGraph graph = load_graph(cfg, units);
  const bml::PairCoding coding = bml::code_pairs(graph, require_seed(cfg, "for coding"), coding_mode(cfg));
  emit_text(cfg, bml::io::coding_to_json(coding).dump() + "\n");
  return kExitOk;
}

int cmd_estimate(const RunConfig& cfg) {
  const bml::SpatialDataset data = load_dataset(cfg);
  const bml::PairCoding coding = load_coding(cfg, data.graph);
  const bml::SufficientStats stats = bml::compute_stats(bml::extract_pair_sample(data, coding));
  bml::EstimateReport fit = bml::estimate(stats, solver_options(cfg));
  fit.coding_rate = coding.coding_rate(data.size());

  json report = dataset_header(cfg, data);
  report["command"] = "estimate";
  report["q"] = coding.size();
  report["coding_source"] = cfg.coding.empty() ? "random" : "file";
  report["estimate"] = bml::io::estimate_to_json(fit);
  const auto method =
      cfg.se_method == "observed" ? bml::StandardErrorMethod::observed : bml::StandardErrorMethod::expected;
  report["inference"] = bml::io::inference_to_json(bml::confidence_intervals(fit, stats, cfg.level, method));
  emit(cfg, report);
  return fit.converged ? kExitOk : kExitNotConverged;
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.rows == 0 || cfg.cols == 0) usage_fail("simulate needs --rows and --cols");
  const bml::Vector beta = Eigen::Map<const bml::Vector>(cfg.beta.data(), static_cast<Eigen::Index>(cfg.beta.size()));
  const bml::SpatialDataset data = bml::generate_lattice_sem(cfg.rows, cfg.cols, beta, cfg.sigma2, cfg.lambda,
                                                             require_seed(cfg, "for simulation"));
  std::ostringstream out;
  bml::io::write_dataset_csv(out, data);
  emit_text(cfg, out.str());
  return kExitOk;
}

int cmd_montecarlo(const RunConfig& cfg) {
  bml::DgpConfig dgp;
  dgp.q = cfg.q;
  dgp.truth = truth_from(cfg);
  dgp.seed = require_seed(cfg, "for Monte Carlo runs");
  const bml::MonteCarloReport mc =
      bml::run_monte_carlo(dgp, cfg.reps, dgp.seed, solver_options(cfg), cfg.threads);
  json report = bml::io::monte_carlo_to_json(mc);
  report["command"] = "montecarlo";
  report["seed"] = dgp.seed;
  emit(cfg, report);
  emit_csv(cfg.csv, [&](std::ostream& out) { bml::io::write_replications_csv(out, mc); });
  return kExitOk;
}

int cmd_bootstrap(const RunConfig& cfg) {
  const bml::SpatialDataset data = load_dataset(cfg);
  const std::uint64_t seed = require_seed(cfg, "for coding bootstrap");
  const bml::CodingMode mode =
      cfg.pairs ? bml::CodingMode::subsample(*cfg.pairs) : bml::default_resample_mode(data.size());
  const bml::BootstrapReport boot =
      bml::coding_bootstrap(data, cfg.codings, mode, seed, solver_options(cfg), cfg.level, cfg.threads);
  json report = dataset_header(cfg, data);
  report["command"] = "bootstrap";
  report["pairs_per_coding"] = *mode.max_pairs;
  report["bootstrap"] = bml::io::bootstrap_to_json(boot);
  emit(cfg, report);
  emit_csv(cfg.csv, [&](std::ostream& out) { bml::io::write_codings_csv(out, boot, data.predictors()); });
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
  constexpr double agreement_tol = 1e-4;
  bml::PairSample sample;
  json report;
  if (!cfg.input.empty()) {
    const bml::SpatialDataset data = load_dataset(cfg);
    const bml::PairCoding coding = load_coding(cfg, data.graph);
    sample = bml::extract_pair_sample(data, coding);
    report = dataset_header(cfg, data);
  } else {
    bml::DgpConfig dgp;
    dgp.q = cfg.q;
    dgp.truth = truth_from(cfg);
    dgp.seed = require_seed(cfg, "to simulate a verification sample (or pass --input)");
    sample = bml::generate_pair_sample(dgp);
    report["seed"] = dgp.seed;
  }
  const bml::EstimateReport fit = bml::estimate(sample, solver_options(cfg));
  const bml::oracle::OracleResult ref = bml::oracle::brute_force_maximize(sample);

  double diff = std::abs(fit.theta.sigma2 - ref.theta.sigma2);
  diff = std::max(diff, std::abs(fit.theta.psi - ref.theta.psi));
  diff = std::max(diff, (fit.theta.beta - ref.theta.beta).cwiseAbs().maxCoeff());
  const bool agree = diff <= agreement_tol && fit.converged && !ref.on_boundary;

  report["command"] = "verify";
  report["q"] = sample.pairs();
  report["estimate"] = bml::io::estimate_to_json(fit);
  report["oracle"] = bml::io::theta_to_json(ref.theta);
  report["oracle"]["loglik"] = ref.loglik;
  report["oracle"]["refinement_sweeps"] = ref.refinement_sweeps;
  report["oracle"]["on_boundary"] = ref.on_boundary;
  report["max_abs_difference"] = diff;
  report["tolerance"] = agreement_tol;
  report["agree"] = agree;
  emit(cfg, report);
  return agree ? kExitOk : kExitDisagree;
}

void add_data_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--input", cfg.input, "Dataset CSV: id, response, predictors");
  cmd->add_option("--graph", cfg.graph, "Edge-list file, one 'i l' pair per line");
  cmd->add_option("--rows", cfg.rows, "Lattice rows");
  cmd->add_option("--cols", cfg.cols, "Lattice columns");
  cmd->add_option("--scheme", cfg.scheme, "Lattice contiguity: rook or queen")->check(CLI::IsMember({"rook", "queen"}));
  cmd->add_flag("--no-center", cfg.no_center, "Do not center y and X");
}

void add_solver_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--tol", cfg.tol, "Fixed-point tolerance");
  cmd->add_option("--max-iter", cfg.max_iter, "Fixed-point iteration cap");
  cmd->add_flag("--fix-psi-zero", cfg.fix_psi_zero, "Constrain psi to 0");
}

void add_dgp_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--q", cfg.q, "Pairs per sample");
  cmd->add_option("--beta", cfg.beta, "True slopes")->delimiter(',');
  cmd->add_option("--sigma2", cfg.sigma2, "True error variance");
  cmd->add_option("--psi", cfg.psi, "True pair error correlation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise likelihood estimation for spatial error regression"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto seed_opt = [&](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { cfg.seed = s; }, "RNG seed");
  };
  auto output_opt = [&](CLI::App* cmd) { cmd->add_option("--output", cfg.output, "Output path (default stdout)"); };
  auto pairs_opt = [&](CLI::App* cmd, const std::string& fallback) {
    cmd->add_option_function<std::size_t>("--pairs", [&](const std::size_t& q) { cfg.pairs = q; },
                                          "Pairs per coding (default: " + fallback + ")");
  };

  auto* code = app.add_subcommand("code", "Draw a bivariate coding and print it as JSON");
  add_data_options(code, cfg);
  seed_opt(code);
  pairs_opt(code, "exhaustive");
  output_opt(code);

  auto* est = app.add_subcommand("estimate", "Estimate beta, sigma2 and psi on a coded dataset");
  add_data_options(est, cfg);
  add_solver_options(est, cfg);
  seed_opt(est);
  pairs_opt(est, "exhaustive");
  output_opt(est);
  est->add_option("--coding", cfg.coding, "Coding JSON (array of [i, l] pairs) instead of a random draw");
  est->add_option("--level", cfg.level, "Confidence level");
  est->add_option("--se", cfg.se_method, "Standard errors: expected or observed")
      ->check(CLI::IsMember({"expected", "observed"}));

  auto* sim = app.add_subcommand("simulate", "Write a lattice spatial-error-model dataset as CSV");
  sim->add_option("--rows", cfg.rows, "Lattice rows")->required();
  sim->add_option("--cols", cfg.cols, "Lattice columns")->required();
  sim->add_option("--beta", cfg.beta, "True slopes")->delimiter(',');
  sim->add_option("--sigma2", cfg.sigma2, "Innovation variance");
  sim->add_option("--lambda", cfg.lambda, "Spatial error autoregression");
  seed_opt(sim);
  output_opt(sim);

  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo study of the estimator on the pair-level model");
  add_dgp_options(mc, cfg);
  add_solver_options(mc, cfg);
  seed_opt(mc);
  output_opt(mc);
  mc->add_option("--reps", cfg.reps, "Replications");
  mc->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
  mc->add_option("--csv", cfg.csv, "Per-replication estimates CSV");

  auto* boot = app.add_subcommand("bootstrap", "Resample over random codings of one dataset");
  add_data_options(boot, cfg);
  add_solver_options(boot, cfg);
  seed_opt(boot);
  pairs_opt(boot, "n / 4, or fewer if the graph runs out");
  output_opt(boot);
  boot->add_option("--codings", cfg.codings, "Number of codings B");
  boot->add_option("--level", cfg.level, "Percentile interval level");
  boot->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
  boot->add_option("--csv", cfg.csv, "Per-coding estimates CSV");

  auto* verify = app.add_subcommand("verify", "Cross-check the estimator against the brute-force maximizer");
  add_data_options(verify, cfg);
  add_solver_options(verify, cfg);
  add_dgp_options(verify, cfg);
  seed_opt(verify);
  pairs_opt(verify, "exhaustive");
  output_opt(verify);
  verify->add_option("--coding", cfg.coding, "Coding JSON instead of a random draw");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*code) return cmd_code(cfg);
    if (*est) return cmd_estimate(cfg);
    if (*sim) return cmd_simulate(cfg);
    if (*mc) return cmd_montecarlo(cfg);
    if (*boot) return cmd_bootstrap(cfg);
    if (*verify) return cmd_verify(cfg);
  } catch (const bml::Error& e) {
    std::cerr << "bml: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
