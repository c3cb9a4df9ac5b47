#include "nkq/error.hpp"
#include "nkq/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace nkq {

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string &s, std::size_t line) {
  if (s == "nan" || s == "NaN" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception &) {
  }
  fail(ErrorCode::Config, "csv line " + std::to_string(line) + ": bad number '" + s + "'");
}

template <class Int>
Int parse_int(const std::string &s, std::size_t line) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::Config, "csv line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

}  // namespace

void write_csv(std::ostream &out, const std::vector<RunRecord> &records) {
  out << kCsvHeader << '\n';
  for (const auto &r : records) {
    out << r.problem << ',' << r.estimator << ',' << r.point_source << ',' << r.cost << ','
        << r.N << ',' << r.T << ',' << r.L << ',' << r.replicate << ',' << r.seed << ','
        << format_double(r.estimate) << ',' << format_double(r.abs_error) << ','
        << format_double(r.wall_millis) << ',' << format_double(r.lambda0_x) << ','
        << format_double(r.lambda0_theta) << '\n';
  }
}

void write_csv(const std::string &path, const std::vector<RunRecord> &records) {
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_csv(f, records);
  require(static_cast<bool>(f), ErrorCode::Io, "write to '" + path + "' failed");
}

std::vector<RunRecord> read_csv(std::istream &in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Config, "csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kCsvHeader, ErrorCode::Config, "csv: unexpected header '" + line + "'");
  std::vector<RunRecord> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line);
    require(f.size() == 14, ErrorCode::Config,
            "csv line " + std::to_string(n) + ": expected 14 fields");
    RunRecord r;
    r.problem = f[0];
    r.estimator = f[1];
    r.point_source = f[2];
    r.cost = parse_int<std::uint64_t>(f[3], n);
    r.N = parse_int<Index>(f[4], n);
    r.T = parse_int<Index>(f[5], n);
    r.L = parse_int<Index>(f[6], n);
    r.replicate = parse_int<Index>(f[7], n);
    r.seed = parse_int<std::uint64_t>(f[8], n);
    r.estimate = parse_double(f[9], n);
    r.abs_error = parse_double(f[10], n);
    r.wall_millis = parse_double(f[11], n);
    r.lambda0_x = parse_double(f[12], n);
    r.lambda0_theta = parse_double(f[13], n);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RunRecord> read_csv(const std::string &path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorCode::Io, "cannot open '" + path + "'");
  return read_csv(f);
}

LogLogFit fit_loglog_slope(const std::vector<double> &costs, const std::vector<double> &errors) {
  require(costs.size() == errors.size(), ErrorCode::DimensionMismatch,
          "fit_loglog_slope: costs and errors differ in length");
  require(costs.size() >= 2, ErrorCode::InvalidArgument, "fit_loglog_slope: need two points");
  const auto n = static_cast<double>(costs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    require(costs[i] > 0.0 && errors[i] > 0.0 && std::isfinite(costs[i]) &&
                std::isfinite(errors[i]),
            ErrorCode::InvalidArgument, "fit_loglog_slope: values must be positive and finite");
    mx += std::log(costs[i]);
    my += std::log(errors[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const double dx = std::log(costs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(errors[i]) - my);
  }
  require(sxx > 0.0, ErrorCode::InvalidArgument, "fit_loglog_slope: costs are all equal");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.rate = fit.slope < 0.0 ? -1.0 / fit.slope : 0.0;
  return fit;
}

double quantile(std::vector<double> values, double p) {
  require(!values.empty(), ErrorCode::InvalidArgument, "quantile of empty data");
  require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidArgument, "quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

double mean_of(const std::vector<double> &v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double> &v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

std::vector<CellSummary> summarize(const std::vector<RunRecord> &records) {
  using Key = std::tuple<std::string, std::string, std::string, Index, Index, Index>;
  std::map<Key, std::size_t> index;
  std::vector<std::vector<const RunRecord *>> groups;
  for (const auto &r : records) {
    const Key k{r.problem, r.estimator, r.point_source, r.N, r.T, r.L};
    auto [it, inserted] = index.emplace(k, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&r);
  }
  std::vector<CellSummary> out;
  out.reserve(groups.size());
  for (const auto &g : groups) {
    CellSummary s;
    s.problem = g.front()->problem;
    s.estimator = g.front()->estimator;
    s.point_source = g.front()->point_source;
    s.N = g.front()->N;
    s.T = g.front()->T;
    s.L = g.front()->L;
    s.count = static_cast<Index>(g.size());
    std::vector<double> cost, err, est, wall;
    for (const auto *r : g) {
      cost.push_back(static_cast<double>(r->cost));
      est.push_back(r->estimate);
      wall.push_back(r->wall_millis);
      if (!std::isnan(r->abs_error)) err.push_back(r->abs_error);
    }
    s.mean_cost = mean_of(cost);
    s.mean_estimate = mean_of(est);
    s.estimate_std_error = std_error_of(est);
    s.mean_wall_millis = mean_of(wall);
    if (err.empty()) {
      s.mean_error = s.q25 = s.q75 = s.std_error = std::numeric_limits<double>::quiet_NaN();
    } else {
      s.mean_error = mean_of(err);
      s.q25 = quantile(err, 0.25);
      s.q75 = quantile(err, 0.75);
      s.std_error = std_error_of(err);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace nkq
