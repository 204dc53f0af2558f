#include "sgfl/baselines.hpp"
#include "sgfl/hybrid.hpp"
#include "sgfl/io.hpp"
#include "sgfl/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgfl;

namespace {

constexpr int kExitInputError = 2;
constexpr int kExitSolverError = 3;

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

std::vector<std::string> parse_str_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// counter-based seed split so grid points are reproducible regardless of
// scheduling
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PenaltyConfig make_penalty(const Dataset& data, double l1, double l2, double alpha,
                           const std::string& weights_arg) {
  PenaltyConfig pen = PenaltyConfig::make(l1, l2, data.T, alpha);
  if (!weights_arg.empty() && weights_arg != "1")
    pen.weights = read_weights_file(weights_arg, data.T);
  return pen;
}

HybridConfig make_hybrid_config(double epsilon, const std::string& sweep, std::uint64_t seed) {
  HybridConfig cfg;
  cfg.epsilon = epsilon;
  cfg.seed = seed;
  if (sweep == "random")
    cfg.sweep = HybridConfig::Sweep::Random;
  else if (sweep != "cyclic")
    throw CLI::ValidationError("--sweep must be cyclic or random");
  return cfg;
}

int cmd_simulate(const SimSpec& spec, const fs::path& out) {
  SimTruth sim = simulate(spec);
  write_dataset(sim.data, out);
  write_solution_csv(sim.truth, out / "beta_true.csv");
  write_segmentation_json(sim.truth.seg, out / "segmentation_true.json");
  std::cout << "wrote dataset (T=" << sim.data.T << ", d=" << sim.data.d << ", p=" << sim.data.p
            << ") to " << out.string() << "\n";
  return 0;
}

int cmd_fit(const Dataset& data, const PenaltyConfig& pen, const HybridConfig& cfg,
            const fs::path& out, bool dense) {
  auto [sol, report] = solve_sgfl(data, pen, cfg);
  fs::create_directories(out);
  write_solution_csv(sol, out / "coefficients.csv", false);
  if (dense) write_solution_csv(sol, out / "coefficients_dense.csv", true);
  write_segmentation_json(sol.seg, out / "segmentation.json");
  write_report_json(report, sol.objective, out / "report.json");
  std::cout << "objective " << sol.objective << ", chains " << sol.seg.num_chains()
            << ", certificate " << report.certificate_norm << (report.certified ? " (pass)" : "")
            << "\n";
  return 0;
}

struct PathRow {
  double lambda1, lambda2;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int chains = 0;
  double sparsity = 0.0;
  std::vector<double> hbic_values;
  double bic_value = 0.0;
  std::string error;
};

int cmd_path(const Dataset& data, double alpha, const std::string& weights_arg, int n1, int n2,
             GridScale scale, double floor_ratio, const std::vector<int>& gammas, double epsilon,
             const std::string& sweep, std::uint64_t seed, int threads, const fs::path& out) {
  const PenaltyGrid grid = build_grid(data, n1, n2, scale, floor_ratio);
  std::vector<std::pair<double, double>> points;
  for (double l2 : grid.lambda2)
    for (double l1 : grid.lambda1) points.emplace_back(l1, l2);

  std::vector<PathRow> rows(points.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      PathRow& row = rows[i];
      row.lambda1 = points[i].first;
      row.lambda2 = points[i].second;
      try {
        const PenaltyConfig pen =
            make_penalty(data, row.lambda1, row.lambda2, alpha, weights_arg);
        HybridConfig cfg = make_hybrid_config(epsilon, sweep, split_seed(seed, i));
        auto [sol, report] = solve_sgfl(data, pen, cfg);
        row.objective = sol.objective;
        row.chains = sol.seg.num_chains();
        int zeros = 0;
        for (const Vec& b : sol.beta)
          for (Eigen::Index j = 0; j < b.size(); ++j) zeros += b[j] == 0.0;
        row.sparsity = static_cast<double>(zeros) / (static_cast<double>(sol.seg.num_chains()) * data.p);
        for (int g : gammas) row.hbic_values.push_back(hbic(data, sol, g));
        row.bic_value = bic(data, sol);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  fs::create_directories(out);
  std::ofstream csv(out / "path.csv");
  csv.precision(12);
  csv << "lambda1,lambda2,objective,chains,sparsity";
  for (int g : gammas) csv << ",hbic_gamma" << g;
  csv << ",bic,error\n";
  for (const PathRow& r : rows) {
    csv << r.lambda1 << "," << r.lambda2 << "," << r.objective << "," << r.chains << ","
        << r.sparsity;
    for (double h : r.hbic_values) csv << "," << h;
    if (r.hbic_values.empty())
      for (size_t i = 0; i < gammas.size(); ++i) csv << ",";
    csv << "," << r.bic_value << "," << r.error << "\n";
  }

  json selection;
  for (size_t gi = 0; gi < gammas.size(); ++gi) {
    int best = -1;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].error.empty()) continue;
      if (best < 0 || rows[i].hbic_values[gi] < rows[static_cast<size_t>(best)].hbic_values[gi])
        best = static_cast<int>(i);
    }
    if (best >= 0)
      selection["hbic_gamma" + std::to_string(gammas[gi])] = {
          {"lambda1", rows[static_cast<size_t>(best)].lambda1},
          {"lambda2", rows[static_cast<size_t>(best)].lambda2},
          {"row", best}};
  }
  int best_bic = -1;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].error.empty()) continue;
    if (best_bic < 0 || rows[i].bic_value < rows[static_cast<size_t>(best_bic)].bic_value)
      best_bic = static_cast<int>(i);
  }
  if (best_bic >= 0)
    selection["bic"] = {{"lambda1", rows[static_cast<size_t>(best_bic)].lambda1},
                        {"lambda2", rows[static_cast<size_t>(best_bic)].lambda2},
                        {"row", best_bic}};
  std::ofstream sel(out / "selection.json");
  sel << selection.dump(2) << "\n";

  int failures = 0;
  for (const PathRow& r : rows) failures += !r.error.empty();
  std::cout << "path over " << rows.size() << " grid points, " << failures << " failures\n";
  return failures == static_cast<int>(rows.size()) && !rows.empty() ? kExitSolverError : 0;
}

int cmd_benchmark(const Dataset& data, const PenaltyConfig& pen, double epsilon,
                  std::uint64_t seed, const std::vector<std::string>& methods,
                  const fs::path& out) {
  struct Row {
    std::string method;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double solve_time = 0.0, tuning_time = 0.0;
    bool failed = false;
    std::string error;
  };
  std::vector<Row> rows;

  for (const std::string& m : methods) {
    Row row;
    row.method = m;
    try {
      if (m == "hybrid" || m == "hyb-c") {
        auto [sol, rep] = solve_sgfl(data, pen, make_hybrid_config(epsilon, "cyclic", seed));
        row.objective = sol.objective;
        row.solve_time = rep.wall_time_s;
      } else if (m == "hyb-r") {
        auto [sol, rep] = solve_sgfl(data, pen, make_hybrid_config(epsilon, "random", seed));
        row.objective = sol.objective;
        row.solve_time = rep.wall_time_s;
      } else if (m == "pd" || m == "admm" || m == "ladmm" || m == "spg") {
        BaselineConfig bc;
        BaselineResult res = m == "pd"     ? pd_solve(data, pen, bc)
                             : m == "admm" ? admm_solve(data, pen, bc)
                             : m == "ladmm"
                                 ? ladmm_solve(data, pen, bc)
                                 : spg_solve(data, pen, bc);
        row.objective = res.objective;
        row.solve_time = res.solve_time_s;
        row.tuning_time = res.tuning_time_s;
      } else if (m == "2s") {
        auto [sol, res] = two_step_solve(data, pen, make_hybrid_config(epsilon, "cyclic", seed));
        row.objective = sol.objective;
        row.solve_time = res.solve_time_s;
      } else {
        throw std::runtime_error("unknown method: " + m);
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  double best = std::numeric_limits<double>::infinity();
  for (const Row& r : rows)
    if (!r.failed) best = std::min(best, r.objective);

  fs::create_directories(out);
  json j = json::array();
  std::cout << "method        time(s)   tuning(s)  objective      rel-accuracy\n";
  for (const Row& r : rows) {
    const double rel = r.failed ? std::numeric_limits<double>::quiet_NaN()
                                : (r.objective - best) / (1.0 + std::abs(best));
    j.push_back({{"method", r.method},
                 {"objective", r.objective},
                 {"solve_time_s", r.solve_time},
                 {"tuning_time_s", r.tuning_time},
                 {"relative_accuracy", rel},
                 {"failed", r.failed},
                 {"error", r.error}});
    std::cout.width(12);
    std::cout << std::left << r.method << "  ";
    std::cout << r.solve_time << "  " << r.tuning_time << "  " << r.objective << "  " << rel
              << (r.failed ? "  FAILED: " + r.error : "") << "\n";
  }
  std::ofstream f(out / "benchmark.json");
  f << j.dump(2) << "\n";

  for (const Row& r : rows)
    if (r.failed) return kExitSolverError;
  return 0;
}

int cmd_evaluate(const Dataset& data, const fs::path& fit_csv, const fs::path& truth_csv,
                 const fs::path& truth_seg, const fs::path& out) {
  const Solution fit = read_solution_csv(fit_csv);
  const Solution truth = read_solution_csv(truth_csv);
  const Segmentation tseg = read_segmentation_json(truth_seg);

  Metrics m = classification_metrics(fit.dense(), truth.dense());
  m.ncp = static_cast<int>(fit.seg.change_points().size());
  m.hausdorff = hausdorff_distance(fit.seg.change_points(), tseg.change_points(), data.T);
  m.r2 = pseudo_r2(data, fit.dense());
  write_metrics_json(m, out);
  std::cout << "ncp " << m.ncp << ", hausdorff " << m.hausdorff << ", tpr " << m.tpr << ", ppv "
            << m.ppv << ", sparsity " << m.sparsity << ", r2 " << m.r2 << "\n";
  return 0;
}

int cmd_certify(const Dataset& data, const PenaltyConfig& pen, const fs::path& fit_csv,
                const fs::path& out) {
  Solution sol = read_solution_csv(fit_csv);
  if (sol.seg.T != data.T) throw std::runtime_error("solution length does not match dataset");
  sol.validate(data.p);
  auto cert = min_norm_subgradient(sol, data, pen);
  json j = {{"norm", cert.norm},
            {"tolerance", cert.tol},
            {"pass", cert.pass()},
            {"chain_norms", cert.chain_norms}};
  std::ofstream f(out);
  f << j.dump(2) << "\n";
  std::cout << "certificate norm " << cert.norm << " (tol " << cert.tol << "): "
            << (cert.pass() ? "pass" : "fail") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse group fused lasso toolkit"};
  app.require_subcommand(1);

  std::string data_dir, out = "out", weights = "1", sweep = "cyclic";
  double lambda1 = 0.0, lambda2 = 0.0, alpha = 1.0, epsilon = 1e-6;
  std::uint64_t seed = 0;
  bool dense = false;

  auto add_penalty_opts = [&](CLI::App* cmd) {
    cmd->add_option("--lambda1", lambda1);
    cmd->add_option("--lambda2", lambda2);
    cmd->add_option("--alpha", alpha);
    cmd->add_option("--weights", weights, "weights file or 1 for all-ones");
  };

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
  SimSpec spec;
  std::string cps;
  sim_cmd->add_option("--T", spec.T)->required();
  sim_cmd->add_option("--d", spec.d)->required();
  sim_cmd->add_option("--p", spec.p)->required();
  sim_cmd->add_option("--change-points", cps, "1-based change points, comma separated");
  sim_cmd->add_option("--sparsity", spec.sparsity);
  sim_cmd->add_option("--sigma", spec.sigma_eps);
  sim_cmd->add_option("--rho", spec.rho_x);
  sim_cmd->add_option("--seed", seed);
  sim_cmd->add_option("--out", out);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "solve one SGFL problem");
  fit_cmd->add_option("--data", data_dir)->required();
  add_penalty_opts(fit_cmd);
  fit_cmd->add_option("--epsilon", epsilon);
  fit_cmd->add_option("--sweep", sweep, "cyclic or random");
  fit_cmd->add_option("--seed", seed);
  fit_cmd->add_flag("--dense", dense, "also write dense coefficients");
  fit_cmd->add_option("--out", out);

  // path
  auto* path_cmd = app.add_subcommand("path", "solve over a penalty grid");
  int n1 = 10, n2 = 5, threads = 1;
  std::string grid_scale = "log", gamma_list = "1,2,3,4,5,6,7,8,9,10";
  double floor_ratio = 0.01;
  path_cmd->add_option("--data", data_dir)->required();
  path_cmd->add_option("--alpha", alpha);
  path_cmd->add_option("--weights", weights);
  path_cmd->add_option("--grid-n1", n1);
  path_cmd->add_option("--grid-n2", n2);
  path_cmd->add_option("--grid-scale", grid_scale, "linear or log");
  path_cmd->add_option("--grid-floor", floor_ratio);
  path_cmd->add_option("--gamma-list", gamma_list);
  path_cmd->add_option("--epsilon", epsilon);
  path_cmd->add_option("--sweep", sweep);
  path_cmd->add_option("--seed", seed);
  path_cmd->add_option("--threads", threads);
  path_cmd->add_option("--out", out);

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "compare solvers on one instance");
  std::string methods = "hyb-c,hyb-r,pd,admm,ladmm";
  bench_cmd->add_option("--data", data_dir)->required();
  add_penalty_opts(bench_cmd);
  bench_cmd->add_option("--epsilon", epsilon);
  bench_cmd->add_option("--seed", seed);
  bench_cmd->add_option("--method", methods, "comma separated method list");
  bench_cmd->add_option("--out", out);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "metrics of a fit against the truth");
  std::string fit_file, truth_beta, truth_seg, out_file = "metrics.json";
  eval_cmd->add_option("--data", data_dir)->required();
  eval_cmd->add_option("--fit", fit_file)->required();
  eval_cmd->add_option("--truth-beta", truth_beta)->required();
  eval_cmd->add_option("--truth-seg", truth_seg)->required();
  eval_cmd->add_option("--out", out_file);

  // certify
  auto* cert_cmd = app.add_subcommand("certify", "optimality certificate for a fit");
  cert_cmd->add_option("--data", data_dir)->required();
  cert_cmd->add_option("--fit", fit_file);
  add_penalty_opts(cert_cmd);
  cert_cmd->add_option("--out", out_file);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      spec.seed = seed;
      for (int cp : parse_int_list(cps)) spec.change_points.push_back(cp - 1);
      return cmd_simulate(spec, out);
    }
    const Dataset data = read_dataset(data_dir);
    if (fit_cmd->parsed()) {
      return cmd_fit(data, make_penalty(data, lambda1, lambda2, alpha, weights),
                     make_hybrid_config(epsilon, sweep, seed), out, dense);
    }
    if (path_cmd->parsed()) {
      GridScale gs = grid_scale == "linear" ? GridScale::Linear : GridScale::Log;
      return cmd_path(data, alpha, weights, n1, n2, gs, floor_ratio, parse_int_list(gamma_list),
                      epsilon, sweep, seed, std::max(threads, 1), out);
    }
    if (bench_cmd->parsed()) {
      return cmd_benchmark(data, make_penalty(data, lambda1, lambda2, alpha, weights), epsilon,
                           seed, parse_str_list(methods), out);
    }
    if (eval_cmd->parsed()) {
      return cmd_evaluate(data, fit_file, truth_beta, truth_seg, out_file);
    }
    if (cert_cmd->parsed()) {
      return cmd_certify(data, make_penalty(data, lambda1, lambda2, alpha, weights), fit_file,
                         out_file);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverError;
  }
  return 0;
}
