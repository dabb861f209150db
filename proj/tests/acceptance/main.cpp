// One line per acceptance criterion; exit status 1 if any fails.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjprox/cli.hpp"
#include "hjprox/core.hpp"
#include "hjprox/csv.hpp"
#include "hjprox/dataset.hpp"
#include "hjprox/hj.hpp"
#include "hjprox/icnn.hpp"
#include "hjprox/maxplus.hpp"
#include "hjprox/minorants.hpp"
#include "hjprox/priors.hpp"
#include "hjprox/recover.hpp"
#include "hjprox/rng.hpp"
#include "hjprox/train.hpp"

using namespace hjprox;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates failed checks with a short description of the first few.
struct Tally {
  std::size_t checks = 0;
  std::size_t failed = 0;
  std::string first;

  void check(bool ok, const std::string& what) {
    ++checks;
    if (ok) return;
    if (failed < 3) first += (first.empty() ? "" : "; ") + what;
    ++failed;
  }
  Outcome outcome(const std::string& summary) const {
    std::string d = summary + ", " + std::to_string(checks - failed) + "/" + std::to_string(checks) + " checks";
    if (failed) d += " [" + first + "]";
    return {failed == 0, d};
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Point random_point(const CounterRng& rng, std::uint64_t k, std::size_t dim, double a) {
  Point p(static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < dim; ++j) p[static_cast<Eigen::Index>(j)] = rng.uniform(k * 16 + j, -a, a);
  return p;
}

Point point1(double v) { return Point::Constant(1, v); }

fs::path work_dir() { return fs::path(HJPROX_WORK_DIR); }
fs::path source_dir() { return fs::path(HJPROX_SOURCE_DIR); }

int cli(const std::vector<std::string>& args, std::string* captured = nullptr) {
  std::vector<const char*> argv{"hjprox"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (captured) *captured = out.str();
  if (rc != 0) std::fprintf(stderr, "hjprox %s -> %d: %s", args.front().c_str(), rc, err.str().c_str());
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// A desk config from configs/desk with its output redirected under the work
// directory.
fs::path staged_config(const std::string& name) {
  json j = json::parse(slurp(source_dir() / "configs" / "desk" / (name + ".json")));
  const fs::path dir = work_dir() / "desk";
  fs::create_directories(dir);
  j["output_dir"] = (dir / name).string();
  const fs::path cfg = dir / (name + ".json");
  std::ofstream(cfg) << j.dump(2) << "\n";
  return cfg;
}

// ---- 1 ----
Outcome analytic_golden() {
  Tally t;
  const CounterRng rng(101);
  const PriorSpec na = PriorSpec::neg_abs_1d();
  const PriorSpec l1 = PriorSpec::l1();
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const double x = rng.uniform(4 * k, -5, 5);
    const double tv = rng.uniform(4 * k + 1, 0.05, 3.0);
    const TimeParam t1(tv);
    const Point p = point1(x);
    t.check(std::abs(eval_S_closed(na, p, t1) - (-tv / 2 - std::abs(x))) <= 1e-12, "S of -|x|");
    t.check(std::abs(eval_psi(na, p, t1) - (x * x / 2 + tv * std::abs(x) + tv * tv / 2)) <= 1e-12, "psi of -|x|");
    // J_BVS as (psi*(y) - y^2/2) / t with the conjugate of psi worked out by hand
    const double y = rng.uniform(4 * k + 2, -5, 5);
    const double conj = 0.5 * std::pow(std::max(std::abs(y) - tv, 0.0), 2) - tv * tv / 2;
    t.check(std::abs(eval_Jbvs_closed(na, point1(y), t1) - (conj - y * y / 2) / tv) <= 1e-12, "J_BVS of -|x|");
    const double piecewise = std::abs(y) > tv ? -std::abs(y) : -tv / 2 - y * y / (2 * tv);
    t.check(std::abs(eval_Jbvs_closed(na, point1(y), t1) - piecewise) <= 1e-12, "J_BVS piecewise");
    const auto prox = eval_prox_closed(l1, p, t1);
    const double soft = std::copysign(std::max(std::abs(x) - tv, 0.0), x);
    t.check(prox.size() == 1 && std::abs(prox[0][0] - soft) <= 1e-12, "soft threshold");
  }
  return t.outcome("10^4 random (x,t)");
}

// ---- 2 ----
Outcome forward_oracle() {
  Tally t;
  struct Family {
    std::string name;
    PriorSpec p;
    std::vector<std::size_t> dims;
  };
  const std::vector<Family> families{
      {"L1", PriorSpec::l1(), {1, 2}},
      {"NegL1", PriorSpec::neg_l1(), {1, 2}},
      {"NegAbs1D", PriorSpec::neg_abs_1d(), {1}},
      {"MinPlus", PriorSpec::min_plus_two_wells(1), {1}},
      {"MinPlus", PriorSpec::min_plus_two_wells(2), {2}},
      {"Concave", PriorSpec::concave_quadratic(0.25), {1, 2}},
      {"Zero", PriorSpec::zero(), {1, 2}},
  };
  const TimeParam tp(1.0);
  double worst = 0.0;
  for (const auto& f : families) {
    for (std::size_t dim : f.dims) {
      const CounterRng rng(202 + dim);
      for (std::uint64_t k = 0; k < 200; ++k) {
        Point x = random_point(rng, k, dim, 3.0);
        if (near_nondiff(f.p, x, tp, 1e-6)) x = random_point(rng, k + 100000, dim, 3.0);
        const double exact = eval_S_closed(f.p, x, tp);
        const double err = std::abs(forward_solve(f.p, x, tp).value - exact);
        worst = std::max(worst, err);
        t.check(err <= 1e-7, f.name + " " + std::to_string(dim) + "D forward " + fmt(err));
      }
      // grid oracle: the grid minimum exceeds S by at most Lipschitz * half-diagonal
      const std::size_t ppa = dim == 1 ? 16001 : 321;
      const Grid grid(dim, -8.0, 8.0, ppa);
      const double h = grid.spacing(0);
      const double rd = std::sqrt(static_cast<double>(dim));
      const double lip = rd * (3.0 + 8.0) + 8.0 * rd;
      for (std::uint64_t k = 0; k < 20; ++k) {
        const Point x = random_point(rng, 5000 + k, dim, 3.0);
        const double s = forward_solve(f.p, x, tp).value;
        const double g =
            grid_minimize([&](const Point& y) { return (x - y).squaredNorm() / 2 + eval_J(f.p, y); }, grid).second;
        t.check(g >= s - 1e-9 && g - s <= lip * h * rd / 2, f.name + " grid");
      }
    }
  }
  return t.outcome("worst |forward - closed| " + fmt(worst));
}

// ---- 3 ----
Outcome backward_roundtrip() {
  Tally t;
  const TimeParam tp(1.0);
  double worst = 0.0;
  for (const PriorSpec& p : {PriorSpec::neg_abs_1d(), PriorSpec::l1()}) {
    const Grid grid(1, -8.0, 8.0, 1601);
    const BackwardSolver jbvs(BackwardQuery::from_prior(p, tp, 1, 8.0), tp);
    const CounterRng rng(303);
    for (std::uint64_t k = 0; k < 100; ++k) {
      const Point x = random_point(rng, k, 1, 3.0);
      const double r = roundtrip_check(p, x, tp, grid, jbvs);
      worst = std::max(worst, r);
      t.check(r <= 1e-4, to_string(p.kind) + " roundtrip " + fmt(r));
    }
    for (std::uint64_t k = 0; k < 200; ++k) {
      // lower bound everywhere, equality on the reachable set
      const Point y = random_point(rng, 1000 + k, 1, 4.0);
      t.check(jbvs(y) <= eval_J(p, y) + 1e-7, "J_BVS <= J");
      Point x = random_point(rng, 2000 + k, 1, 4.0);
      if (near_nondiff(p, x, tp, 1e-6)) continue;
      const Point prox = eval_prox_closed(p, x, tp).front();
      t.check(std::abs(jbvs(prox) - eval_J(p, prox)) <= 1e-6, "J_BVS = J at prox points");
    }
  }
  return t.outcome("worst roundtrip " + fmt(worst));
}

// ---- 4 ----
double brute_recovered(const MinorantModel& m, const Point& x) {
  Objective f{[&](const Point& y) { return (x - y).squaredNorm() / (2 * m.t) + eval_minorant(m, y); }, {}};
  MinimizeOptions opts;
  opts.restarts = 6;
  opts.seed = hash_point(x, 1);
  opts.restart_box = Box::cube(m.dim, 6.0);
  std::vector<Point> seeds{x};
  for (const auto& a : m.anchors) seeds.push_back(a.y);
  double best = multistart_minimize(f, seeds, opts).value;
  if (m.dim == 1) best = std::min(best, grid_minimize(f.value, Grid(1, -12.0, 12.0, 240001)).second);
  return best;
}

Dataset closed_dataset(const PriorSpec& p, std::size_t dim, std::size_t count, double a, std::uint64_t seed) {
  return synthesize_dataset(p, dim, TimeParam(1.0), count, a, seed);
}

std::vector<double> closed_j(const PriorSpec& p, const Dataset& ds) {
  std::vector<double> j;
  for (const auto& s : ds.samples) j.push_back(eval_J(p, s.prox_point(TimeParam(ds.t))));
  return j;
}

Outcome minorant_suite() {
  Tally t;
  const TimeParam tp(1.0);
  struct Case {
    PriorSpec p;
    std::size_t dim;
    bool jbvs_closed;
  };
  const std::vector<Case> cases{{PriorSpec::neg_abs_1d(), 1, true},
                                {PriorSpec::l1(), 2, true},
                                {PriorSpec::neg_l1(), 2, true},
                                {PriorSpec::concave_quadratic(0.25), 2, true},
                                {PriorSpec::min_plus_two_wells(2), 2, false}};
  double worst_pqm = 0.0;
  std::string alphas;
  for (const auto& c : cases) {
    const std::string name = to_string(c.p.kind);
    // largest alpha keeping PQM below J_BVS on held-out reachable points
    const Dataset hold = closed_dataset(c.p, c.dim, 200, 3.0, 398);
    std::vector<Point> hold_y;
    for (const auto& s : hold.samples) hold_y.push_back(s.prox_point(tp));
    const Dataset probe = closed_dataset(c.p, c.dim, 10, 3.0, 399);
    const double alpha = estimate_alpha(probe, closed_j(c.p, probe), hold_y, closed_j(c.p, hold));
    alphas += (alphas.empty() ? "" : ", ") + name + " " + fmt(alpha);
    for (std::size_t K : {1u, 3u, 10u}) {
      const Dataset ds = closed_dataset(c.p, c.dim, K, 3.0, 400 + K);
      const auto j = closed_j(c.p, ds);
      const MinorantModel pam = build_minorant(ds, j, MinorantMode::PAM);
      for (const auto& a : pam.anchors) t.check(std::abs(eval_minorant(pam, a.y) - a.j) <= 1e-12, name + " PAM anchor");
      if (alpha > 0.0) {
        const MinorantModel pqm = build_minorant(ds, j, MinorantMode::PQM, alpha);
        for (const auto& a : pqm.anchors) t.check(std::abs(eval_minorant(pqm, a.y) - a.j) <= 1e-12, name + " PQM anchor");
      }
      // PAM reproduces S exactly at its samples
      for (const auto& s : ds.samples) {
        t.check(std::abs(recovered_S_pam(pam, s.x) - s.s_value) <= 1e-12, name + " PAM sample value");
        t.check(std::abs(brute_recovered(pam, s.x) - s.s_value) <= 1e-6, name + " PAM sample inf");
      }
      // the closed-form infimum holds for any alpha in (0, 1)
      const MinorantModel pqm = build_minorant(ds, j, MinorantMode::PQM, alpha > 0.0 ? alpha : 0.5);
      const CounterRng rng(404 + K);
      for (std::uint64_t k = 0; k < 100; ++k) {
        const Point x = random_point(rng, k, c.dim, 3.0);
        const double err = std::abs(recovered_S_pqm(pqm, x) - brute_recovered(pqm, x));
        worst_pqm = std::max(worst_pqm, err);
        t.check(err <= 1e-5, name + " PQM vs brute " + fmt(err));
      }
    }
    if (!c.jbvs_closed) continue;
    const Dataset ds = closed_dataset(c.p, c.dim, 10, 3.0, 499);
    const MinorantModel m = alpha > 0.0 ? build_minorant(ds, closed_j(c.p, ds), MinorantMode::PQM, alpha)
                                        : build_minorant(ds, closed_j(c.p, ds), MinorantMode::PAM);
    const CounterRng rng(405);
    for (std::uint64_t k = 0; k < 1000; ++k) {
      const Point y = random_point(rng, k, c.dim, 4.0);
      t.check(eval_minorant(m, y) <= eval_Jbvs_closed(c.p, y, tp) + 1e-12, name + " minorant property");
    }
  }
  return t.outcome("worst |PQM - brute| " + fmt(worst_pqm) + "; alpha " + alphas);
}

// ---- 5 ----
Outcome maxplus_scaling() {
  ScalingOptions opts;
  opts.alpha = 0.25;
  opts.a = 1.0;
  const std::vector<std::size_t> Ks{16, 32, 64, 128, 256};
  const PriorSpec p = PriorSpec::concave_quadratic(0.25);
  const auto r1 = scaling_experiment(p, TimeParam(1.0), {1}, Ks, 5, 7, opts);
  const auto r2 = scaling_experiment(p, TimeParam(1.0), {2}, Ks, 5, 7, opts);
  const double s1 = r1.front().scaling_exponent;
  const double s2 = r2.front().scaling_exponent;
  const bool ok = s1 >= -2.5 && s1 <= -1.5 && s2 >= -1.3 && s2 <= -0.7;
  return {ok, "slope 1D " + fmt(s1) + " (want [-2.5,-1.5]), 2D " + fmt(s2) + " (want [-1.3,-0.7])"};
}

// ---- 6 ----
IcnnModel perturbed(const IcnnConfig& c) {
  IcnnModel m(c);
  const CounterRng rng(c.seed ^ 0x77);
  for (Eigen::Index i = 0; i < m.params().size(); ++i) m.params()[i] += 0.5 * rng.uniform(static_cast<std::uint64_t>(i), -1, 1);
  for (std::size_t k = 1; k < c.layers; ++k) m.W(k) = m.W(k).cwiseAbs().array() + 0.05;
  m.w_out() = m.w_out().cwiseAbs().array() + 0.05;
  return m;
}

Outcome icnn_suite() {
  Tally t;
  double worst_convex = 0.0, worst_fd = 0.0, worst_dir = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t dim = 1 + seed % 3;
    const IcnnModel m = perturbed(IcnnConfig{dim, 16, 2 + seed % 2, 5.0, seed % 2 ? 0.5 : 0.0, seed});
    const CounterRng rng(600 + seed);
    for (std::uint64_t k = 0; k < 1000; ++k) {
      const Point a = random_point(rng, 3 * k, dim, 4.0);
      const Point b = random_point(rng, 3 * k + 1, dim, 4.0);
      const double lam = rng.uniform(3 * k + 2);
      const double v = forward(m, lam * a + (1 - lam) * b) - (lam * forward(m, a) + (1 - lam) * forward(m, b));
      worst_convex = std::max(worst_convex, v);
      t.check(v <= 1e-9, "convexity " + fmt(v));
    }
    for (std::uint64_t k = 0; k < 20; ++k) {
      const Point y = random_point(rng, 9000 + k, dim, 3.0);
      const Point g = input_gradient(m, y);
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double h = 1e-5;
        Point yp = y, ym = y;
        yp[i] += h;
        ym[i] -= h;
        const double fd = (forward(m, yp) - forward(m, ym)) / (2 * h);
        const double rel = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
        worst_fd = std::max(worst_fd, rel);
        t.check(rel <= 1e-5, "input gradient " + fmt(rel));
      }
    }
    // directional derivative of the loss in parameter space
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(dim), 16);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = rng.uniform(20000 + static_cast<std::uint64_t>(i), -3, 3);
    for (LossTarget target : {LossTarget::Value, LossTarget::Gradient}) {
      for (LossKind loss : {LossKind::MSE, LossKind::L1}) {
        Eigen::MatrixXd T = target == LossTarget::Value ? Eigen::MatrixXd(Eigen::MatrixXd::Random(1, 16))
                                                        : Eigen::MatrixXd(Eigen::MatrixXd::Random(Y.rows(), 16));
        const TapeGradient g = param_gradient(m, Y, T, loss, target);
        for (std::uint64_t d = 0; d < 10; ++d) {
          Eigen::VectorXd dir(m.params().size());
          for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.uniform(30000 + 1000 * d + static_cast<std::uint64_t>(i), -1, 1);
          dir.normalize();
          const double h = 1e-6;
          const IcnnModel mp(m.config(), m.params() + h * dir);
          const IcnnModel mm(m.config(), m.params() - h * dir);
          const double fd = (batch_loss(mp, Y, T, loss, target) - batch_loss(mm, Y, T, loss, target)) / (2 * h);
          const double an = g.d_params.dot(dir);
          const double rel = std::abs(fd - an) / std::max(1e-3, std::abs(an));
          worst_dir = std::max(worst_dir, rel);
          t.check(rel <= 1e-4, "parameter gradient " + fmt(rel));
        }
      }
    }
  }
  // every projected optimizer step leaves the constrained weights feasible
  const Dataset ds = synthesize_dataset(PriorSpec::neg_l1(), 2, TimeParam(1.0), 256, 4.0, 6);
  TrainConfig c;
  c.total_steps = 500;
  c.decay_every = 500;
  c.batch_size = 64;
  c.lr0 = 5e-2;
  c.hidden = 16;
  c.layers = 3;
  std::size_t steps = 0;
  train_icnn(IcnnConfig{2, 16, 3, 5.0, 0.0, 9}, sample_matrix(ds), psi_targets(ds), c,
             [&](std::size_t, const IcnnModel& m) {
               ++steps;
               t.check(weights_nonnegative(m), "nonnegative weights");
             });
  t.check(steps == 500, "observer saw every step");
  return t.outcome("worst convexity gap " + fmt(worst_convex) + ", FD rel " + fmt(worst_fd) + ", directional rel " +
                   fmt(worst_dir));
}

// ---- 7, 8 ----
const std::vector<std::string> kFamilies{"l1", "min_plus", "concave", "neg_l1"};

bool desk_run(const std::string& name) {
  const fs::path cfg = staged_config(name);
  return cli({"gen-data", cfg.string()}) == 0 && cli({"train", cfg.string()}) == 0 &&
         cli({"eval", cfg.string()}) == 0;
}

Outcome desk_training() {
  Tally t;
  std::string summary;
  for (const auto& name : kFamilies) {
    if (!desk_run(name)) {
      t.check(false, name + " CLI run failed");
      continue;
    }
    std::ifstream is(work_dir() / "desk" / name / "mse_report.csv");
    for (const auto& row : read_mse_report(is)) {
      if (row.example != name + "/direct") continue;
      t.check(row.mse_psi <= 1e-2, name + " mse_psi " + fmt(row.mse_psi));
      t.check(row.mse_prior <= 1e-2, name + " mse_prior " + fmt(row.mse_prior));
      summary += (summary.empty() ? "" : ", ") + name + " psi " + fmt(row.mse_psi) + " prior " + fmt(row.mse_prior);
    }
  }
  t.check(t.checks == 2 * kFamilies.size(), "report rows present");
  return t.outcome(summary + "; full-budget recipe in configs/full is run offline, not here");
}

Outcome recovery_consistency() {
  Tally t;
  // min-plus pair from criterion 7 (trained here if absent)
  const fs::path dir = work_dir() / "desk" / "min_plus" / "d2";
  if (!fs::exists(dir / "second.ckpt") && !desk_run("min_plus")) return {false, "min-plus desk run failed"};
  const IcnnModel first = load_checkpoint(dir / "first.ckpt");
  const IcnnModel second = load_checkpoint(dir / "second.ckpt");
  const double l1 = json::parse(slurp(dir / "first.json")).at("final_loss").get<double>();
  const double l2 = json::parse(slurp(dir / "second.json")).at("final_loss").get<double>();
  const double tol = 5.0 * (std::sqrt(l1) + std::sqrt(l2));
  const ConjugateDataset cds = load_conjugate_dataset(dir / "conjugate.csv");
  const auto direct = RecoveredPrior::direct(second);
  const auto inv = RecoveredPrior::invert(first, TimeParam(1.0), Box::cube(2, 8.0));
  double worst = 0.0;
  for (std::size_t k = 0; k < 100; ++k) {
    double d = HUGE_VAL;
    try {
      d = std::abs(direct(cds.x[k]) - inv(cds.x[k]));
    } catch (const OutOfRange&) {
    }
    worst = std::max(worst, d);
    t.check(d <= tol, "direct vs invert " + fmt(d));
  }

  const fs::path cfg = staged_config("zero");
  if (cli({"gen-data", cfg.string()}) != 0 || cli({"train", cfg.string()}) != 0) return {false, "zero-prior run failed"};
  const auto zero = RecoveredPrior::direct(load_checkpoint(work_dir() / "desk" / "zero" / "d2" / "second.ckpt"));
  const CounterRng rng(808);
  double zmax = 0.0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double v = std::abs(zero(random_point(rng, k, 2, 4.0)));
    zmax = std::max(zmax, v);
    t.check(v <= 1e-6, "zero prior " + fmt(v));
  }
  return t.outcome("worst |direct - invert| " + fmt(worst) + " vs 5x combined RMSE " + fmt(tol) +
                   "; max |J-hat| for the zero prior " + fmt(zmax));
}

// ---- 9 ----
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

Outcome reproducibility() {
  Tally t;
  const fs::path root = work_dir() / "repro";
  fs::remove_all(root);
  fs::create_directories(root);
  const json cfg_json = {
      {"name", "repro"},
      {"prior", {{"kind", "ConcaveQuadratic"}, {"curvature", 0.25}}},
      {"dims", {2}},
      {"N", 1500},
      {"seed", 5},
      {"eval_points", 300},
      {"train", {{"total_steps", 300}, {"decay_every", 150}, {"batch_size", 128}, {"hidden", 16}}},
      {"scaling", {{"dims", {1}}, {"K", {8, 16, 32}}, {"trials", 2}, {"eval_points", 1024}}},
      {"output_dir", "out"}};
  const fs::path cfg = root / "repro.json";
  std::ofstream(cfg) << cfg_json.dump(2) << "\n";
  const fs::path out = root / "out";
  const std::string c = cfg.string();
  const std::vector<std::vector<std::string>> commands{
      {"gen-data", c},
      {"train", c},
      {"eval", c},
      {"cross-section", "--checkpoint", (out / "d2" / "first.ckpt").string(), "--origin", "1,0", "--direction",
       "1,1", "--halfwidth", "2", "--samples", "41", "--truth", "--out", (out / "cross.csv").string()},
      {"cross-section", "--checkpoint", (out / "d2" / "second.ckpt").string(), "--origin", "0,0", "--truth", "--out",
       (out / "cross_prior.csv").string()},
      {"minorant", "--dataset", (out / "d2" / "data.csv").string(), "--mode", "PQM", "--alpha", "0.5", "--config", c,
       "--out", (out / "pqm.txt").string()},
      {"scaling", c},
  };
  std::vector<std::string> first_out, second_out;
  std::map<std::string, std::string> first_files;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& cmd : commands) {
      std::string captured;
      t.check(cli(cmd, &captured) == 0, cmd.front() + " exit status");
      (pass == 0 ? first_out : second_out).push_back(captured);
    }
    if (pass == 0) first_files = snapshot(out);
  }
  const auto second_files = snapshot(out);
  t.check(first_files.size() == 14, "artifact count " + std::to_string(first_files.size()));
  t.check(first_files.size() == second_files.size(), "same artifact set");
  for (const auto& [name, bytes] : first_files) {
    const auto it = second_files.find(name);
    t.check(it != second_files.end() && it->second == bytes, name + " differs");
  }
  for (std::size_t i = 0; i < first_out.size(); ++i) t.check(first_out[i] == second_out[i], "stdout differs");
  return t.outcome(std::to_string(first_files.size()) + " artifacts from " + std::to_string(commands.size()) +
                   " commands compared byte for byte");
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  const std::vector<Criterion> all{
      {1, "analytic golden suite", 1.0, analytic_golden},
      {2, "forward-solver oracle", 30.0, forward_oracle},
      {3, "backward solve and roundtrip", 0.0, backward_roundtrip},
      {4, "minorant suite", 60.0, minorant_suite},
      {5, "max-plus scaling slopes", 300.0, maxplus_scaling},
      {6, "ICNN property suite", 120.0, icnn_suite},
      {7, "desk-scale training, four 2-D families", 600.0, desk_training},
      {8, "direct vs invert recovery, zero prior", 0.0, recovery_consistency},
      {9, "CLI reproducibility", 0.0, reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  fs::create_directories(work_dir());

  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt(secs) + " s";
    if (c.limit_seconds > 0.0) {
      timing += " of " + fmt(c.limit_seconds) + " s";
      if (secs > c.limit_seconds) {
        o.pass = false;
        o.detail += " [over time budget]";
      }
    }
    std::printf("%s  %d  %s (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, timing.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
