#include "hjprox/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hjprox/csv.hpp"
#include "hjprox/dataset.hpp"
#include "hjprox/hj.hpp"
#include "hjprox/minorants.hpp"
#include "hjprox/recover.hpp"
#include "hjprox/rng.hpp"

namespace hjprox::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

std::size_t positive(const json& v, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) throw ConfigError(std::string("config: ") + what + " must be positive integers");
  return v.get<std::size_t>();
}

std::vector<std::size_t> positive_list(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty())
    throw ConfigError(std::string("config: '") + key + "' must be a nonempty list");
  std::vector<std::size_t> out;
  for (const auto& v : j.at(key)) out.push_back(positive(v, key));
  return out;
}

Point point_from_json(const json& v) {
  if (!v.is_array() || v.empty()) throw ConfigError("config: points must be nonempty number lists");
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  return p;
}

Point parse_point(const std::string& s) {
  std::vector<double> vals;
  for (auto f : csv::split(s)) vals.push_back(csv::parse_double(f));
  if (vals.empty()) throw ConfigError("empty point '" + s + "'");
  return Eigen::Map<const Point>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::uint64_t data_seed(const ExperimentConfig& c, std::size_t dim) { return CounterRng(c.seed).bits(dim); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DependencyMissing("cannot write " + path.string());
  os << text;
  if (!os) throw Error("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DependencyMissing("not found: " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json network_json(const IcnnConfig& c) {
  return {{"dim", c.dim}, {"hidden", c.hidden}, {"layers", c.layers}, {"beta", c.beta}, {"mu", c.mu}, {"seed", c.seed}};
}

// Checkpoint plus its JSON sidecar and loss history.
void save_run(const fs::path& dir, const std::string& stem, const TrainResult& r, json meta) {
  save_checkpoint(dir / (stem + ".ckpt"), r.model);
  meta["network"] = network_json(r.model.config());
  meta["final_loss"] = r.final_loss;
  meta["model_id"] = model_id(r.model);
  meta["checkpoint"] = stem + ".ckpt";
  write_text(dir / (stem + ".json"), meta.dump(2) + "\n");
  std::ostringstream hist;
  write_loss_history(hist, r.history);
  write_text(dir / (stem + "_loss.csv"), hist.str());
}

TrainConfig effective_train(const ExperimentConfig& c, std::optional<double> desk) {
  TrainConfig t = c.train;
  if (desk) t.desk_scale = desk;
  t.validate();
  return t;
}

json run_meta(const ExperimentConfig& c, std::size_t dim, const char* role, const TrainConfig& tc) {
  return {{"role", role}, {"example", c.name}, {"dim", dim},       {"t", c.t},
          {"a", c.a},     {"prior", c.prior},  {"data_seed", data_seed(c, dim)}, {"train", to_json(tc)}};
}

struct Globals {
  std::optional<double> desk_scale;
};

// ---- subcommands ----

void cmd_gen_data(const ExperimentConfig& c, std::ostream& out) {
  for (std::size_t dim : c.dims) {
    const fs::path dir = c.dim_dir(dim);
    fs::create_directories(dir);
    const std::uint64_t seed = data_seed(c, dim);
    const Dataset ds = synthesize_dataset(c.prior_for(dim), dim, TimeParam(c.t), c.N_for(dim), c.a, seed);
    save_dataset(dir / "data.csv", ds);
    out << "dim " << dim << ": " << ds.samples.size() << " rows, seed " << seed << " -> " << (dir / "data.csv").string()
        << "\n";
  }
}

void cmd_train(const ExperimentConfig& c, const std::string& stage, const Globals& g, std::ostream& out) {
  const TrainConfig tc = effective_train(c, g.desk_scale);
  for (std::size_t dim : c.dims) {
    const fs::path dir = c.dim_dir(dim);
    if (stage == "first" || stage == "both") {
      const Dataset ds = load_dataset(dir / "data.csv");
      const TrainResult r = train_first_lpn(ds, tc);
      save_run(dir, "first", r, run_meta(c, dim, "psi", tc));
      save_conjugate_dataset(dir / "conjugate.csv", build_conjugate_dataset(r.model, ds, model_id(r.model)));
      out << "dim " << dim << ": first network, " << tc.steps() << " steps, final loss " << csv::format(r.final_loss)
          << "\n";
    }
    if (stage == "second" || stage == "both") {
      const IcnnModel first = load_checkpoint(dir / "first.ckpt");
      const std::string id = model_id(first);
      ConjugateDataset cds;
      if (fs::exists(dir / "conjugate.csv")) cds = load_conjugate_dataset(dir / "conjugate.csv");
      if (cds.provenance != id) {
        cds = build_conjugate_dataset(first, load_dataset(dir / "data.csv"), id);
        save_conjugate_dataset(dir / "conjugate.csv", cds);
      }
      const TrainResult r = train_second_lpn(cds, tc);
      json meta = run_meta(c, dim, "phi_G", tc);
      meta["provenance"] = id;
      save_run(dir, "second", r, meta);
      out << "dim " << dim << ": second network, " << tc.steps() << " steps, final loss " << csv::format(r.final_loss)
          << "\n";
    }
  }
}

void cmd_eval(const ExperimentConfig& c, double search_halfwidth, std::ostream& out) {
  std::vector<MseRow> rows;
  const TimeParam t(c.t);
  for (std::size_t dim : c.dims) {
    const fs::path dir = c.dim_dir(dim);
    const IcnnModel first = load_checkpoint(dir / "first.ckpt");
    const IcnnModel second = load_checkpoint(dir / "second.ckpt");
    const PriorSpec p = c.prior_for(dim);
    const Dataset held_out = synthesize_dataset(p, dim, t, c.eval_points, c.a, c.eval_seed);
    const double mse_psi = score_psi_mse(first, held_out);
    const RecoveredPrior direct = RecoveredPrior::direct(second, t, c.t != 1.0);
    rows.push_back({c.name + "/direct", dim, mse_psi, score_prior_mse(direct, p, held_out)});

    // points outside the learned range cannot be inverted; score the rest
    const RecoveredPrior inv = RecoveredPrior::invert(first, t, Box::cube(dim, search_halfwidth));
    const std::vector<Point> pts = reachable_points(held_out);
    std::vector<double> err(pts.size(), std::nan(""));
    parallel_for(pts.size(), [&](std::size_t i) {
      try {
        const double d = eval_invert(inv, pts[i]) - eval_J(p, pts[i]);
        err[i] = d * d;
      } catch (const OutOfRange&) {
      }
    });
    double sum = 0.0;
    std::size_t used = 0;
    for (double e : err) {
      if (std::isnan(e)) continue;
      sum += e;
      ++used;
    }
    rows.push_back({c.name + "/invert", dim, mse_psi, used ? sum / static_cast<double>(used) : std::nan("")});
    if (used < pts.size()) out << "dim " << dim << ": invert skipped " << pts.size() - used << " unreachable points\n";
  }
  fs::create_directories(c.output_dir);
  std::ostringstream report;
  write_mse_report(report, rows);
  write_text(c.output_dir / "mse_report.csv", report.str());
  out << report.str();
}

struct CrossSectionArgs {
  std::string checkpoint;
  std::string role;
  std::string origin;
  std::string direction;
  double halfwidth = 1.0;
  std::size_t samples = 101;
  bool truth = false;
  std::string out;
};

void cmd_cross_section(const CrossSectionArgs& a, std::ostream& out) {
  const fs::path ckpt(a.checkpoint);
  const IcnnModel m = load_checkpoint(ckpt);
  fs::path sidecar = ckpt;
  sidecar.replace_extension(".json");
  json meta = fs::exists(sidecar) ? read_json(sidecar) : json::object();
  const std::string role = !a.role.empty() ? a.role : (get_or<std::string>(meta, "role", "psi") == "phi_G" ? "direct" : "psi");
  const TimeParam t(get_or<double>(meta, "t", 1.0));
  const double box = 2.0 * get_or<double>(meta, "a", 4.0);
  const std::size_t dim = m.config().dim;

  ScalarField f;
  std::optional<RecoveredPrior> rp;
  if (role == "psi") {
    f = [&](const Point& x) { return forward(m, x); };
  } else if (role == "direct") {
    rp = RecoveredPrior::direct(m, t, t.value() != 1.0);
  } else if (role == "invert") {
    rp = RecoveredPrior::invert(m, t, Box::cube(dim, box));
  } else {
    throw ConfigError("cross-section: role must be psi, direct or invert");
  }
  if (rp) {
    // nodes outside the learned range are reported as nan
    f = [&](const Point& x) {
      try {
        return (*rp)(x);
      } catch (const OutOfRange&) {
        return std::nan("");
      }
    };
  }

  ScalarField truth;
  std::optional<PriorSpec> prior;
  if (a.truth) {
    if (!meta.contains("prior")) throw DependencyMissing("cross-section: --truth needs the checkpoint's .json sidecar");
    prior = prior_from_json(meta.at("prior"), dim);
    if (role == "psi") {
      truth = [&](const Point& x) { return eval_psi(*prior, x, t); };
    } else {
      truth = [&](const Point& x) {
        try {
          return eval_Jbvs_closed(*prior, x, t);
        } catch (const Unsupported&) {
          return eval_J(*prior, x);
        }
      };
    }
  }
  const Point origin = parse_point(a.origin);
  const Point dir = a.direction.empty() ? Point(Point::Unit(static_cast<Eigen::Index>(dim), 0)) : parse_point(a.direction);
  require_dim(origin, dim);
  require_dim(dir, dim);
  const auto rows = cross_section(f, origin, dir, a.halfwidth, a.samples, truth);
  std::ostringstream os;
  write_cross_section(os, rows);
  if (a.out.empty()) {
    out << os.str();
  } else {
    write_text(a.out, os.str());
    out << rows.size() << " rows -> " << a.out << "\n";
  }
}

struct MinorantArgs {
  std::string dataset;
  std::string mode;
  double alpha = 0.0;
  std::string out;
  std::string config;
  std::string j_source;
  std::string j_file;
  std::size_t eps_points = 4096;
  std::uint64_t seed = 0;
};

std::vector<double> read_j_file(const fs::path& path, std::size_t expect) {
  std::ifstream is(path);
  if (!is) throw DependencyMissing("J values not found: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "j") throw ConfigError("J file: header must be 'j'");
  std::vector<double> j;
  while (std::getline(is, line))
    if (!line.empty()) j.push_back(csv::parse_double(line));
  if (j.size() != expect) throw ConfigError("J file: row count differs from the dataset");
  return j;
}

void cmd_minorant(const MinorantArgs& a, std::ostream& out) {
  const Dataset ds = load_dataset(a.dataset);
  const TimeParam t(ds.t);
  std::optional<PriorSpec> prior;
  if (!a.config.empty()) prior = load_config(a.config).prior_for(ds.dim);
  const std::string source = !a.j_source.empty() ? a.j_source : (!a.j_file.empty() ? "file" : "closed");

  std::optional<BackwardSolver> numeric;
  auto jbvs_numeric = [&]() -> BackwardSolver& {
    if (!numeric) numeric.emplace(BackwardQuery::from_prior(*prior, t, ds.dim, ds.a), t);
    return *numeric;
  };
  std::vector<double> j;
  JSource js = JSource::File;
  if (source == "file") {
    if (a.j_file.empty()) throw DependencyMissing("minorant: --j-source file needs --j-file");
    j = read_j_file(a.j_file, ds.samples.size());
  } else if (source == "closed" || source == "backward") {
    if (!prior) throw DependencyMissing("minorant: no J source; pass --config with the prior or --j-file");
    js = source == "closed" ? JSource::ClosedForm : JSource::BackwardSolve;
    // proximal points are reachable, so J = J_BVS there
    for (const auto& s : ds.samples) {
      const Point y = s.prox_point(t);
      j.push_back(source == "closed" ? eval_J(*prior, y) : jbvs_numeric()(y));
    }
  } else {
    throw ConfigError("minorant: --j-source must be closed, backward or file");
  }

  const MinorantModel m = build_minorant(ds, j, minorant_mode_from_string(a.mode), a.alpha, js);
  save_minorant(a.out, m);

  double eps = std::nan("");
  if (prior) {
    const ScalarField jb = [&](const Point& y) {
      try {
        return eval_Jbvs_closed(*prior, y, t);
      } catch (const Unsupported&) {
        return jbvs_numeric()(y);
      }
    };
    eps = eps_inf([&](const Point& y) { return t.value() * jb(y) + 0.5 * y.squaredNorm(); }, m,
                  Box::cube(ds.dim, ds.a), a.eps_points, a.seed);
  }
  std::ostringstream report;
  report << "K,mode,alpha,eps_inf\n";
  csv::write_row(report, {std::to_string(m.anchors.size()), to_string(m.mode), csv::format(m.alpha), csv::format(eps)});
  write_text(a.out + ".eps.csv", report.str());
  out << "K=" << m.anchors.size() << " mode=" << to_string(m.mode) << " eps_inf=" << csv::format(eps) << " -> " << a.out
      << "\n";
}

void cmd_scaling(const ExperimentConfig& c, std::ostream& out) {
  if (!c.scaling) throw ConfigError("scaling: config has no 'scaling' block");
  const ScalingBlock& s = *c.scaling;
  std::vector<ErrorReport> all;
  for (std::size_t dim : s.dims) {
    auto r = scaling_experiment(c.prior_for(dim), TimeParam(c.t), {dim}, s.K, s.trials, s.seed, s.options);
    out << "dim " << dim << ": slope " << csv::format(r.empty() ? std::nan("") : r.front().scaling_exponent) << "\n";
    all.insert(all.end(), r.begin(), r.end());
  }
  fs::create_directories(c.output_dir);
  std::ostringstream os;
  write_scaling_report(os, all);
  write_text(c.output_dir / "scaling.csv", os.str());
}

int report(std::ostream& err, int code, const std::exception& e) {
  err << "error: " << e.what() << "\n";
  return code;
}

}  // namespace

PriorSpec prior_from_json(const json& b, std::size_t dim) {
  if (!b.is_object() || !b.contains("kind") || !b.at("kind").is_string())
    throw ConfigError("config: prior block needs a 'kind' string");
  PriorKind kind;
  try {
    kind = prior_kind_from_string(b.at("kind").get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  PriorSpec p;
  switch (kind) {
    case PriorKind::L1: p = PriorSpec::l1(); break;
    case PriorKind::NegL1: p = PriorSpec::neg_l1(); break;
    case PriorKind::NegAbs1D: p = PriorSpec::neg_abs_1d(); break;
    case PriorKind::Zero: p = PriorSpec::zero(); break;
    case PriorKind::ConcaveQuadratic:
      p = PriorSpec::concave_quadratic(get_or<double>(b, "curvature", 0.25), get_or<double>(b, "huber_radius", 0.0));
      break;
    case PriorKind::MinPlusQuadratics:
      if (!b.contains("centers")) {
        p = PriorSpec::min_plus_two_wells(dim);
      } else {
        std::vector<Point> centers;
        for (const auto& v : b.at("centers")) centers.push_back(point_from_json(v));
        p = PriorSpec::min_plus(std::move(centers), get_or<std::vector<double>>(b, "widths", {}));
      }
      break;
    case PriorKind::Custom: throw ConfigError("config: custom priors cannot be described in a config file");
  }
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (const auto d = p.fixed_dim(); d && *d != dim)
    throw ConfigError("config: prior " + to_string(kind) + " is tied to dimension " + std::to_string(*d));
  return p;
}

json to_json(const TrainConfig& c) {
  json j{{"lr0", c.lr0},
         {"decay_factor", c.decay_factor},
         {"decay_every", c.decay_every},
         {"total_steps", c.total_steps},
         {"batch_size", c.batch_size},
         {"loss", c.loss == LossKind::MSE ? "mse" : "l1"},
         {"loss_target", c.loss_target == LossTarget::Value ? "psi" : "prox"},
         {"seed", c.seed},
         {"hidden", c.hidden},
         {"layers", c.layers},
         {"beta", c.beta},
         {"mu", c.mu},
         {"effective_steps", c.steps()},
         {"effective_decay_every", c.decay_interval()}};
  j["desk_scale"] = c.desk_scale ? json(*c.desk_scale) : json(nullptr);
  return j;
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", "experiment");
  if (c.name.empty() || c.name.find_first_of(",\n\"") != std::string::npos)
    throw ConfigError("config: name must be nonempty and free of commas and quotes");
  if (!j.contains("prior")) throw ConfigError("config: missing prior block");
  c.prior = j.at("prior");
  c.dims = positive_list(j, "dims");
  for (std::size_t d : c.dims) prior_from_json(c.prior, d);
  if (!j.contains("N")) {
    c.N.assign(c.dims.size(), 30000);
  } else if (j.at("N").is_array()) {
    c.N = positive_list(j, "N");
    if (c.N.size() != c.dims.size()) throw ConfigError("config: N needs one entry per dimension");
  } else {
    c.N.assign(c.dims.size(), positive(j.at("N"), "N"));
  }
  c.t = get_or<double>(j, "t", 1.0);
  c.a = get_or<double>(j, "a", 4.0);
  if (!(c.t > 0.0) || !(c.a > 0.0)) throw ConfigError("config: t and a must be positive");
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.eval_seed = get_or<std::uint64_t>(j, "eval_seed", 1);
  c.eval_points = get_or<std::size_t>(j, "eval_points", 5000);
  if (c.eval_points == 0) throw ConfigError("config: eval_points must be positive");

  const json tj = j.value("train", json::object());
  TrainConfig& t = c.train;
  t.lr0 = get_or<double>(tj, "lr0", t.lr0);
  t.decay_factor = get_or<double>(tj, "decay_factor", t.decay_factor);
  t.decay_every = get_or<std::size_t>(tj, "decay_every", t.decay_every);
  t.total_steps = get_or<std::size_t>(tj, "total_steps", t.total_steps);
  t.batch_size = get_or<std::size_t>(tj, "batch_size", t.batch_size);
  t.seed = get_or<std::uint64_t>(tj, "seed", c.seed);
  t.hidden = get_or<std::size_t>(tj, "hidden", t.hidden);
  t.layers = get_or<std::size_t>(tj, "layers", t.layers);
  t.beta = get_or<double>(tj, "beta", t.beta);
  t.mu = get_or<double>(tj, "mu", t.mu);
  if (tj.contains("desk_scale") && !tj.at("desk_scale").is_null()) t.desk_scale = get_or<double>(tj, "desk_scale", 0.0);
  try {
    t.loss = loss_kind_from_string(get_or<std::string>(tj, "loss", "mse"));
    t.loss_target = loss_target_from_string(get_or<std::string>(tj, "loss_target", "psi"));
    t.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: train: ") + e.what());
  }

  const fs::path out = get_or<std::string>(j, "output_dir", "out/" + c.name);
  c.output_dir = (out.is_absolute() ? out : base_dir / out).lexically_normal();

  if (j.contains("scaling")) {
    const json& sj = j.at("scaling");
    ScalingBlock s;
    s.dims = positive_list(sj, "dims");
    s.K = positive_list(sj, "K");
    s.trials = get_or<std::size_t>(sj, "trials", s.trials);
    s.seed = get_or<std::uint64_t>(sj, "seed", c.seed);
    s.options.alpha = get_or<double>(sj, "alpha", s.options.alpha);
    s.options.a = get_or<double>(sj, "a", s.options.a);
    s.options.eval_points = get_or<std::size_t>(sj, "eval_points", s.options.eval_points);
    s.options.hessian_samples = get_or<std::size_t>(sj, "hessian_samples", s.options.hessian_samples);
    for (std::size_t d : s.dims) prior_from_json(c.prior, d);
    c.scaling = s;
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config not found: " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, fs::absolute(path).parent_path());
}

PriorSpec ExperimentConfig::prior_for(std::size_t dim) const { return prior_from_json(prior, dim); }

std::size_t ExperimentConfig::N_for(std::size_t dim) const {
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i] == dim) return N[i];
  throw InvalidArgument("no N for dimension " + std::to_string(dim));
}

fs::path ExperimentConfig::dim_dir(std::size_t dim) const { return output_dir / ("d" + std::to_string(dim)); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hamilton-Jacobi proximal priors: data, training, recovery and max-plus studies"};
  app.require_subcommand(1);
  Globals g;
  std::string desk;
  auto* desk_opt = app.add_option("--desk-scale", desk, "Shrink training schedules by this factor (0.05 if no value)")
                       ->expected(0, 1);

  std::string config;
  auto* gen = app.add_subcommand("gen-data", "Synthesize one dataset per dimension");
  gen->add_option("config", config, "Experiment config (JSON)")->required();

  std::string stage = "both";
  auto* train = app.add_subcommand("train", "Train the first and/or second network");
  train->add_option("config", config, "Experiment config (JSON)")->required();
  train->add_option("--stage", stage, "first, second or both")->check(CLI::IsMember({"first", "second", "both"}));

  double search = 0.0;
  auto* eval = app.add_subcommand("eval", "Write the MSE report for both recovery methods");
  eval->add_option("config", config, "Experiment config (JSON)")->required();
  eval->add_option("--search-halfwidth", search, "Box for the invert method (default 2a)");

  CrossSectionArgs cs;
  auto* cross = app.add_subcommand("cross-section", "Sample a checkpoint along a line");
  cross->add_option("--checkpoint", cs.checkpoint, "first.ckpt or second.ckpt")->required();
  cross->add_option("--role", cs.role, "psi, direct or invert (default from the sidecar)");
  cross->add_option("--origin", cs.origin, "Comma-separated point")->required();
  cross->add_option("--direction", cs.direction, "Comma-separated direction (default e_1)");
  cross->add_option("--halfwidth", cs.halfwidth, "Half-length of the segment");
  cross->add_option("--samples", cs.samples, "Number of nodes");
  cross->add_flag("--truth", cs.truth, "Add the closed-form reference column");
  cross->add_option("--out", cs.out, "Output CSV (default stdout)");

  MinorantArgs ma;
  auto* minor = app.add_subcommand("minorant", "Build a PAM/PQM minorant from a dataset");
  minor->add_option("--dataset", ma.dataset, "Dataset CSV")->required();
  minor->add_option("--mode", ma.mode, "PAM or PQM")->required();
  minor->add_option("--alpha", ma.alpha, "PQM margin in (0, 1]");
  minor->add_option("--out", ma.out, "Minorant model file")->required();
  minor->add_option("--config", ma.config, "Experiment config naming the prior");
  minor->add_option("--j-source", ma.j_source, "closed, backward or file");
  minor->add_option("--j-file", ma.j_file, "CSV with header 'j' and one value per sample");
  minor->add_option("--eps-points", ma.eps_points, "Points for the sup-error estimate");
  minor->add_option("--seed", ma.seed, "Seed for the sup-error points");

  auto* scaling = app.add_subcommand("scaling", "Max-plus error against the number of anchors");
  scaling->add_option("config", config, "Experiment config with a 'scaling' block")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (desk_opt->count() > 0) {
      g.desk_scale = desk.empty() ? 0.05 : csv::parse_double(desk);
      if (!(*g.desk_scale > 0.0)) throw ConfigError("--desk-scale must be positive");
    }
    if (gen->parsed()) {
      cmd_gen_data(load_config(config), out);
    } else if (train->parsed()) {
      cmd_train(load_config(config), stage, g, out);
    } else if (eval->parsed()) {
      const ExperimentConfig c = load_config(config);
      cmd_eval(c, search > 0.0 ? search : 2.0 * c.a, out);
    } else if (cross->parsed()) {
      cmd_cross_section(cs, out);
    } else if (minor->parsed()) {
      cmd_minorant(ma, out);
    } else if (scaling->parsed()) {
      cmd_scaling(load_config(config), out);
    }
  } catch (const TrainingDiverged& e) {
    return report(err, kTrainingDiverged, e);
  } catch (const DependencyMissing& e) {
    return report(err, kDependencyMissing, e);
  } catch (const ConfigError& e) {
    return report(err, kConfigError, e);
  } catch (const InvalidArgument& e) {
    return report(err, kConfigError, e);
  } catch (const DimensionMismatch& e) {
    return report(err, kConfigError, e);
  } catch (const UnsupportedDimension& e) {
    return report(err, kConfigError, e);
  } catch (const Unsupported& e) {
    return report(err, kConfigError, e);
  } catch (const fs::filesystem_error& e) {
    return report(err, kConfigError, e);
  } catch (const NumericFailure& e) {
    return report(err, kNumericFailure, e);
  } catch (const UnboundedConjugate& e) {
    return report(err, kNumericFailure, e);
  } catch (const OutOfRange& e) {
    return report(err, kNumericFailure, e);
  } catch (const Nondifferentiable& e) {
    return report(err, kNumericFailure, e);
  } catch (const DegenerateInput& e) {
    return report(err, kNumericFailure, e);
  } catch (const std::exception& e) {
    return report(err, kOtherError, e);
  }
  return kOk;
}

}  // namespace hjprox::cli
