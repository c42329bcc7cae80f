// Acceptance suite. Prints one PASS/FAIL line per criterion. With an
// argument, runs only that criterion; the exit status is nonzero if any
// selected criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "bml/bml.hpp"
#include "bml/oracle.hpp"
#include "support.hpp"

using namespace bml;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Shared Monte Carlo runs, computed once per process.
const MonteCarloReport& mc_run(std::size_t q, double psi, std::uint64_t seed) {
  static std::map<std::tuple<std::size_t, double, std::uint64_t>, MonteCarloReport> cache;
  const auto key = std::make_tuple(q, psi, seed);
  auto it = cache.find(key);
  if (it == cache.end()) {
    DgpConfig cfg;
    cfg.q = q;
    cfg.truth = Theta::scalar(1.0, 1.0, psi);
    it = cache.emplace(key, run_monte_carlo(cfg, 2000, seed)).first;
  }
  return it->second;
}

const MonteCarloReport& main_run() { return mc_run(200, 0.3, 4004); }

Outcome psi_zero_reduction() {
  Rng rng(1001);
  SolverOptions opt;
  opt.fix_psi_zero = true;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t q = 5 + rng.index(200);
    const auto s = test::draw_sample(rng, q, Theta::scalar(rng.uniform(-3.0, 3.0), rng.uniform(0.1, 5.0),
                                                           rng.uniform(-0.8, 0.8)));
    const auto fit = estimate(s, opt);
    const auto n = test::naive_stats(s);
    const double beta = n.c(0) / n.A(0, 0);
    const auto m = test::naive_moments(s, Vector::Constant(1, beta));
    const double sigma2 = (m.first + m.second) / (2.0 * static_cast<double>(q));
    worst = std::max({worst, std::abs(fit.theta.beta(0) - beta), std::abs(fit.theta.sigma2 - sigma2),
                      std::abs(fit.theta.psi)});
  }
  return {worst <= 1e-10, fmt("max |diff| vs closed form = %.3g (tol 1e-10)", worst)};
}

Outcome oracle_equivalence() {
  const double psis[] = {-0.5, 0.012, 0.3, 0.6};
  double worst_diff = 0.0, worst_score = 0.0;
  int boundary = 0, unconverged = 0;
  for (int i = 0; i < 20; ++i) {
    Rng rng(1002, static_cast<std::uint64_t>(i));
    const std::size_t k = 1 + static_cast<std::size_t>((i / 4) % 2);
    Theta truth = k == 1 ? Theta::scalar(1.0, 1.0, psis[i % 4]) : Theta{Vector{{1.0, -0.5}}, 1.0, psis[i % 4]};
    const auto s = test::draw_sample(rng, 50, truth);
    const auto fit = estimate(s);
    const auto ref = oracle::brute_force_maximize(s);
    if (!fit.converged) ++unconverged;
    if (ref.on_boundary) ++boundary;
    const Vector diff = test::pack(fit.theta) - test::pack(ref.theta);
    worst_diff = std::max(worst_diff, max_abs(diff));
    worst_score = std::max(worst_score, max_abs(score(fit.theta, compute_stats(s))));
  }
  const bool pass = worst_diff <= 1e-5 && worst_score <= 1e-8 && unconverged == 0 && boundary == 0;
  return {pass, fmt("max |theta - oracle| = %.3g (tol 1e-5), max |score| = %.3g (tol 1e-8), "
                    "unconverged %d, oracle on boundary %d",
                    worst_diff, worst_score, unconverged, boundary)};
}

Outcome low_correlation_regime() {
  DgpConfig cfg;
  cfg.q = 100;
  cfg.truth = Theta::scalar(1.0, 1.0, 0.012);
  cfg.seed = 1003;
  const auto s = generate_pair_sample(cfg);
  const auto stats = compute_stats(s);
  const auto fit = estimate(stats);
  const Theta& t = fit.theta;
  auto at_psi = [&](double psi) { return Theta{t.beta, t.sigma2, psi}; };
  auto psi_score = [&](double psi) { return score(at_psi(psi), stats)(1 + 1); };
  auto loglik = [&](double psi) { return log_likelihood(at_psi(psi), stats); };
  bool crosses = true, concave = true;
  double worst_second = -1e300;
  for (double h : {1e-3, 1e-2, 5e-2}) {
    crosses = crosses && psi_score(t.psi - h) > 0.0 && psi_score(t.psi + h) < 0.0;
    const double second = (loglik(t.psi + h) - 2.0 * loglik(t.psi) + loglik(t.psi - h)) / (h * h);
    worst_second = std::max(worst_second, second);
    concave = concave && second < 0.0;
  }
  const bool pass = fit.converged && crosses && concave && std::abs(psi_score(t.psi)) <= 1e-8;
  return {pass, fmt("psi_hat = %.5f, score(psi_hat) = %.2g, sign change +/-h: %s, max second difference = %.4g",
                    t.psi, psi_score(t.psi), crosses ? "yes" : "no", worst_second)};
}

Outcome unbiasedness() {
  const auto& mc = main_run();
  std::ostringstream os;
  bool pass = true;
  const double root_r = std::sqrt(static_cast<double>(mc.replications - mc.failures));
  for (const auto& p : mc.parameters) {
    const double bound = 3.0 * p.sd / root_r;
    pass = pass && std::abs(p.bias) < bound;
    os << fmt("%s |bias| %.2e < %.2e; ", p.name.c_str(), std::abs(p.bias), bound);
  }
  os << fmt("failures %zu", mc.failures);
  return {pass, os.str()};
}

Outcome fisher_variance() {
  const auto& mc = main_run();
  const double rb = mc.parameter("beta1").variance_ratio;
  const double rp = mc.parameter("psi").variance_ratio;
  const bool pass = rb >= 0.85 && rb <= 1.15 && rp >= 0.80 && rp <= 1.20;
  return {pass, fmt("var/I^-1: beta %.3f in [0.85, 1.15], psi %.3f in [0.80, 1.20] (sigma2 %.3f, informational)", rb,
                    rp, mc.parameter("sigma2").variance_ratio)};
}

Outcome uncorrelatedness() {
  const auto& mc = main_run();
  const Matrix& r = mc.correlation;
  const double bs = r(0, 1), bp = r(0, 2), sp = r(1, 2);
  const bool pass = std::abs(bs) < 0.08 && std::abs(bp) < 0.08 && std::abs(sp) < 0.08;
  const auto& low = mc_run(200, 0.012, 4006);
  return {pass, fmt("psi=0.3: corr(beta,sigma2) %.3f, corr(beta,psi) %.3f, corr(sigma2,psi) %.3f "
                    "(large-q value psi/sqrt(1+psi^2) = %.3f); psi=0.012: corr(sigma2,psi) %.3f",
                    bs, bp, sp, 0.3 / std::sqrt(1.09), low.correlation(1, 2))};
}

Outcome consistency() {
  const double v200 = main_run().parameter("beta1").variance;
  const double v800 = mc_run(800, 0.3, 4007).parameter("beta1").variance;
  const double ratio = v800 / v200;
  return {ratio >= 0.2 && ratio <= 1.0 / 3.0, fmt("var(q=800)/var(q=200) = %.4f in [0.2, 0.3333]", ratio)};
}

Outcome normality() {
  const auto& ks = main_run().normality;
  return {ks.p_value > 0.01, fmt("KS statistic %.4f, p = %.4f (> 0.01)", ks.statistic, ks.p_value)};
}

Outcome hessian_correctness() {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    Rng rng(1009, static_cast<std::uint64_t>(i));
    const std::size_t k = 1 + rng.index(3);
    Vector beta(static_cast<Eigen::Index>(k));
    for (auto& b : beta) b = rng.uniform(-2.0, 2.0);
    const auto stats = compute_stats(test::draw_sample(rng, 20 + rng.index(200), Theta{beta, 1.0, 0.3}));
    // Evaluate away from the estimate so that score terms do not vanish.
    for (auto& b : beta) b += rng.uniform(-0.3, 0.3);
    const Theta at{beta, rng.uniform(0.3, 3.0), rng.uniform(-0.9, 0.9)};
    // hessian() is the negated second-derivative matrix.
    const Matrix H = -hessian(at, stats);
    const Matrix fd = test::fd_jacobian([&](const Vector& v) { return score(test::unpack(v), stats); }, test::pack(at));
    for (Eigen::Index a = 0; a < H.rows(); ++a) {
      for (Eigen::Index b = 0; b < H.cols(); ++b) {
        worst = std::max(worst, std::abs(H(a, b) - fd(a, b)) / std::max(1.0, std::abs(fd(a, b))));
      }
    }
  }
  return {worst <= 1e-5, fmt("max relative entry error = %.3g (tol 1e-5)", worst)};
}

Outcome coding_validity() {
  Rng rng(1010);
  int graphs = 0, lattices = 0, random = 0, codings = 0;
  std::string problem;
  while (graphs < 500 && problem.empty()) {
    NeighborGraph g;
    if (graphs % 2 == 0) {
      g = build_lattice_graph(1 + rng.index(25), 2 + rng.index(25), rng.index(2) ? Contiguity::queen : Contiguity::rook);
      ++lattices;
    } else {
      const std::size_t n = 2 + rng.index(150);
      g = test::random_graph(rng, n, rng.uniform(1.0, 6.0) / static_cast<double>(n));
      if (g.edge_count() == 0) continue;
      ++random;
    }
    ++graphs;
    for (int draw = 0; draw < 3 && problem.empty(); ++draw) {
      const auto mode = draw == 2 ? CodingMode::subsample(1 + rng.index(g.size())) : CodingMode::exhaustive();
      const auto coding = code_pairs(g, rng.index(1u << 30), mode);
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (const auto& p : coding.pairs) pairs.emplace_back(p.first, p.second);
      problem = coding.empty() ? "empty coding" : test::coding_problem(g, pairs);
      ++codings;
    }
  }
  return {problem.empty() && graphs == 500,
          fmt("%d graphs (%d lattices, %d random), %d codings checked%s%s", graphs, lattices, random, codings,
              problem.empty() ? "" : ": ", problem.c_str())};
}

Outcome multivariate_consistency() {
  double worst_path = 0.0, worst_score = 0.0;
  int unconverged = 0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(1011, static_cast<std::uint64_t>(i));
    const Theta truth = Theta::scalar(rng.uniform(-2.0, 2.0), rng.uniform(0.2, 3.0), rng.uniform(-0.7, 0.7));
    const auto stats = compute_stats(test::draw_sample(rng, 20 + rng.index(300), truth));
    const auto multi = estimate(stats), scalar = estimate_scalar(stats);
    worst_path = std::max(worst_path, max_abs(test::pack(multi.theta) - test::pack(scalar.theta)));

    const std::size_t k = 2 + rng.index(3);
    Vector beta(static_cast<Eigen::Index>(k));
    for (auto& b : beta) b = rng.uniform(-2.0, 2.0);
    const auto stats_k = compute_stats(test::draw_sample(rng, 30 + rng.index(300), Theta{beta, 1.0, truth.psi}));
    const auto fit = estimate(stats_k);
    if (!fit.converged || !multi.converged) ++unconverged;
    worst_score = std::max(worst_score, max_abs(score(fit.theta, stats_k)));
  }
  return {worst_path <= 1e-12 && worst_score <= 1e-8 && unconverged == 0,
          fmt("k=1 max |multivariate - scalar| = %.3g (tol 1e-12); k>=2 max |score| = %.3g (tol 1e-8); "
              "unconverged %d",
              worst_path, worst_score, unconverged)};
}

Outcome bootstrap_sanity() {
  const auto data = generate_lattice_sem(30, 30, Vector{{1.0}}, 1.0, 0.5, 1012);
  const auto mode = default_resample_mode(data.size());

  const auto one = coding_bootstrap(data, 1, mode, 77);
  const auto direct = estimate(data, code_pairs(data.graph, coding_stream_seed(77, 0), mode));
  const bool degenerate = one.parameters[0].mean == direct.theta.beta(0) && one.parameters[0].sd == 0.0 &&
                          one.parameters[2].mean == direct.theta.psi;

  const auto boot = coding_bootstrap(data, 200, mode, 78);
  const auto coding = code_pairs(data.graph, 1012, mode);
  const auto stats = compute_stats(extract_pair_sample(data, coding));
  const auto fit = estimate(stats);
  const double se = std::sqrt(fisher_information(fit.theta, stats).beta_inverse(0, 0));
  const double ratio = boot.parameters[0].sd / se;
  return {degenerate && ratio >= 0.5 && ratio <= 2.0,
          fmt("B=1 degenerate: %s; B=200 sd(beta) %.4f vs Fisher se %.4f, ratio %.3f in [0.5, 2]",
              degenerate ? "yes" : "no", boot.parameters[0].sd, se, ratio)};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "psi=0 reduction", psi_zero_reduction},
    {2, "oracle equivalence", oracle_equivalence},
    {3, "low-correlation likelihood shape", low_correlation_regime},
    {4, "unbiasedness", unbiasedness},
    {5, "Fisher variance", fisher_variance},
    {6, "uncorrelated estimates", uncorrelatedness},
    {7, "consistency", consistency},
    {8, "normality", normality},
    {9, "Hessian vs finite differences", hessian_correctness},
    {10, "coding validity", coding_validity},
    {11, "multivariate consistency", multivariate_consistency},
    {12, "bootstrap sanity", bootstrap_sanity},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("[%s] %2d %-34s %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
