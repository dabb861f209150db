#include "hjprox/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "hjprox/csv.hpp"

namespace hjprox {

void Dataset::validate() const {
  if (dim == 0) throw InvalidArgument("dataset dimension must be >= 1");
  const TimeParam tp(t);
  for (const auto& s : samples) {
    require_dim(s.x, dim);
    require_dim(s.s_grad, dim);
    if (!s.x.allFinite() || !s.s_grad.allFinite() || !std::isfinite(s.s_value)) {
      throw NumericFailure("dataset sample is not finite", to_std(s.x));
    }
    if (!s.prox_point(tp).allFinite()) throw NumericFailure("derived y is not finite", to_std(s.x));
  }
}

void write_dataset(std::ostream& os, const Dataset& ds) {
  csv::write_row(os, {std::to_string(ds.dim), csv::format(ds.t), csv::format(ds.a),
                      std::to_string(ds.seed), std::to_string(ds.samples.size())});
  std::vector<double> row(2 * ds.dim + 1);
  for (const auto& s : ds.samples) {
    for (std::size_t j = 0; j < ds.dim; ++j) {
      row[j] = s.x[static_cast<Eigen::Index>(j)];
      row[ds.dim + 1 + j] = s.s_grad[static_cast<Eigen::Index>(j)];
    }
    row[ds.dim] = s.s_value;
    csv::write_row(os, row);
  }
}

Dataset read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("dataset: missing header");
  const auto head = csv::split(line);
  if (head.size() != 5) throw InvalidArgument("dataset: header must be dim,t,a,seed,count");
  Dataset ds;
  ds.dim = static_cast<std::size_t>(csv::parse_int(head[0]));
  ds.t = csv::parse_double(head[1]);
  ds.a = csv::parse_double(head[2]);
  ds.seed = std::stoull(std::string(head[3]));
  const auto count = static_cast<std::size_t>(csv::parse_int(head[4]));
  if (ds.dim == 0) throw InvalidArgument("dataset: dim must be >= 1");
  ds.samples.reserve(count);
  const auto n = static_cast<Eigen::Index>(ds.dim);
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (f.size() != 2 * ds.dim + 1) throw InvalidArgument("dataset: bad row width");
    SampleTriplet s{Point(n), 0.0, Point(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
      s.x[j] = csv::parse_double(f[static_cast<std::size_t>(j)]);
      s.s_grad[j] = csv::parse_double(f[ds.dim + 1 + static_cast<std::size_t>(j)]);
    }
    s.s_value = csv::parse_double(f[ds.dim]);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.size() != count) throw InvalidArgument("dataset: row count does not match header");
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DependencyMissing("cannot write " + path.string());
  write_dataset(os, ds);
  if (!os) throw Error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DependencyMissing("dataset not found: " + path.string());
  return read_dataset(is);
}

}  // namespace hjprox
