#include "cpslope/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "cpslope/errors.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace cpslope {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& field, const std::string& context) {
  const std::string s = strip(field);
  double value = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(context + ": bad number '" + field + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& field, const std::string& context) {
  const std::string s = strip(field);
  std::int64_t value = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(context + ": bad integer '" + field + "'");
  }
  return value;
}

std::vector<int> parse_tau_field(const std::string& field,
                                 const std::string& context) {
  std::vector<int> tau;
  if (strip(field).empty()) return tau;
  for (const auto& part : split(field, ';')) {
    tau.push_back(static_cast<int>(parse_int(part, context)));
  }
  return tau;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

// ---- dataset CSV -----------------------------------------------------------

Dataset load_dataset(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  int row = 0;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  ++row;
  if (strip(line) != "series_id,time,replicate,value") {
    throw ParseError(path + ":1: expected header 'series_id,time,replicate,value'");
  }

  struct Cell { int time; int rep; double value; };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Cell>> cells;
  std::unordered_set<std::string> seen_keys;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    const std::string context = path + ":" + std::to_string(row);
    const auto fields = split(line, ',');
    if (fields.size() != 4) {
      throw ParseError(context + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    }
    const std::string id = strip(fields[0]);
    if (id.empty()) throw ParseError(context + ": empty series_id");
    const int t = static_cast<int>(parse_int(fields[1], context));
    const int r = static_cast<int>(parse_int(fields[2], context));
    const double v = parse_double(fields[3], context);
    if (!std::isfinite(v)) throw ParseError(context + ": non-finite value");
    if (t < 1) throw ParseError(context + ": time must be >= 1");
    if (r < 1) throw ParseError(context + ": replicate must be >= 1");
    const std::string key = id + "\x1f" + std::to_string(t) + "\x1f" + std::to_string(r);
    if (!seen_keys.insert(key).second) {
      throw ParseError(context + ": duplicate cell (series " + id + ", time " +
                       std::to_string(t) + ", replicate " + std::to_string(r) + ")");
    }
    auto [it, inserted] = cells.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back({t, r, v});
  }
  if (order.empty()) throw ParseError(path + ": no data rows");

  Dataset data;
  data.series_ids = order;
  data.n_series = static_cast<int>(order.size());
  int t_max = 0, r_max = 0;
  for (const auto& cell : cells[order.front()]) {
    t_max = std::max(t_max, cell.time);
    r_max = std::max(r_max, cell.rep);
  }
  data.n_times = t_max;
  data.n_reps = r_max;
  for (const auto& id : order) {
    const auto& v = cells[id];
    int st = 0, sr = 0;
    for (const auto& cell : v) {
      st = std::max(st, cell.time);
      sr = std::max(sr, cell.rep);
    }
    if (st != data.n_times || sr != data.n_reps) {
      throw ParseError(path + ": series '" + id + "' has T=" + std::to_string(st) +
                       ", R=" + std::to_string(sr) + " but series '" +
                       order.front() + "' has T=" + std::to_string(data.n_times) +
                       ", R=" + std::to_string(data.n_reps) +
                       " (all series must share T and R)");
    }
    if (static_cast<int>(v.size()) != st * sr) {
      throw ParseError(path + ": series '" + id + "' is missing cells (" +
                       std::to_string(v.size()) + " of " +
                       std::to_string(st * sr) + "); time must be contiguous 1..T");
    }
    Eigen::MatrixXd x(data.n_times, data.n_reps);
    for (const auto& cell : v) x(cell.time - 1, cell.rep - 1) = cell.value;
    data.values.push_back(std::move(x));
  }
  data.validate();
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "series_id,time,replicate,value\n";
  for (int n = 0; n < data.n_series; ++n) {
    for (int t = 1; t <= data.n_times; ++t) {
      for (int r = 1; r <= data.n_reps; ++r) {
        out << data.series_ids[n] << ',' << t << ',' << r << ','
            << format_double(data.values[n](t - 1, r - 1)) << '\n';
      }
    }
  }
}

// ---- truth sidecar -----------------------------------------------------------

void write_truth_csv(const std::vector<SeriesTruth>& truth,
                     const std::string& path,
                     const std::vector<std::string>& scenario_echo) {
  std::ofstream out = open_output(path);
  for (const auto& line : scenario_echo) out << "# " << line << '\n';
  out << "series_id,ell,tau\n";
  for (const auto& tr : truth) {
    out << tr.id << ',' << tr.ell() << ',' << join_ints(tr.tau) << '\n';
  }
}

std::vector<SeriesTruth> load_truth_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<SeriesTruth> truth;
  std::string line;
  int row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    const std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    if (!header_seen) {
      if (s != "series_id,ell,tau") {
        throw ParseError(path + ":" + std::to_string(row) +
                         ": expected header 'series_id,ell,tau'");
      }
      header_seen = true;
      continue;
    }
    const std::string context = path + ":" + std::to_string(row);
    const auto fields = split(line, ',');
    if (fields.size() != 3) throw ParseError(context + ": expected 3 fields");
    SeriesTruth tr;
    tr.id = strip(fields[0]);
    tr.tau = parse_tau_field(fields[2], context);
    if (static_cast<int>(tr.tau.size()) != parse_int(fields[1], context)) {
      throw ParseError(context + ": ell does not match the tau list length");
    }
    truth.push_back(std::move(tr));
  }
  if (!header_seen) throw ParseError(path + ": missing header");
  return truth;
}

// ---- variance CSV ---------------------------------------------------------------

void write_variances_csv(const std::vector<std::string>& ids,
                         const Eigen::MatrixXd& sigma2, bool shared,
                         const std::string& path) {
  std::ofstream out = open_output(path);
  out << "series_id,time,sigma2\n";
  if (shared) {
    for (int t = 1; t <= sigma2.cols(); ++t) {
      out << "*," << t << ',' << format_double(sigma2(0, t - 1)) << '\n';
    }
  } else {
    for (int n = 0; n < sigma2.rows(); ++n) {
      for (int t = 1; t <= sigma2.cols(); ++t) {
        out << ids[n] << ',' << t << ',' << format_double(sigma2(n, t - 1)) << '\n';
      }
    }
  }
}

Eigen::MatrixXd load_variances_csv(const std::string& path,
                                   const std::vector<std::string>& ids,
                                   int n_times) {
  std::ifstream in = open_input(path);
  std::string line;
  int row = 0;
  if (!std::getline(in, line) || strip(line) != "series_id,time,sigma2") {
    throw ParseError(path + ":1: expected header 'series_id,time,sigma2'");
  }
  ++row;
  std::unordered_map<std::string, int> index;
  for (std::size_t n = 0; n < ids.size(); ++n) index[ids[n]] = static_cast<int>(n);
  const int n_series = static_cast<int>(ids.size());
  Eigen::MatrixXd sigma2 = Eigen::MatrixXd::Constant(n_series, n_times, -1.0);
  bool shared_rows = false, per_series_rows = false;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    const std::string context = path + ":" + std::to_string(row);
    const auto fields = split(line, ',');
    if (fields.size() != 3) throw ParseError(context + ": expected 3 fields");
    const std::string id = strip(fields[0]);
    const int t = static_cast<int>(parse_int(fields[1], context));
    const double v = parse_double(fields[2], context);
    if (t < 1 || t > n_times) {
      throw ParseError(context + ": time " + std::to_string(t) +
                       " outside 1.." + std::to_string(n_times));
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ParseError(context + ": variance must be positive and finite");
    }
    if (id == "*") {
      shared_rows = true;
      sigma2.col(t - 1).setConstant(v);
    } else {
      per_series_rows = true;
      auto it = index.find(id);
      if (it == index.end()) {
        throw ParseError(context + ": unknown series '" + id + "'");
      }
      sigma2(it->second, t - 1) = v;
    }
  }
  if (shared_rows && per_series_rows) {
    throw ParseError(path + ": mixes shared ('*') and per-series rows");
  }
  if ((sigma2.array() <= 0.0).any()) {
    throw ParseError(path + ": variances missing for some (series, time) cells");
  }
  return sigma2;
}

// ---- trace files ------------------------------------------------------------------

void write_trace_csv(const Trace& trace, const std::string& trace_path,
                     const std::string& theta_path) {
  std::ofstream out = open_output(trace_path);
  out << "iter,ell,tau,log_posterior\n";
  for (const auto& rec : trace.records) {
    out << rec.iteration << ',' << rec.ell() << ',' << join_ints(rec.tau) << ','
        << format_double(rec.log_posterior) << '\n';
  }
  std::ofstream theta_out = open_output(theta_path);
  theta_out << "iter,theta\n";
  for (const auto& rec : trace.records) {
    theta_out << rec.iteration << ',' << join_doubles(rec.theta_active) << '\n';
  }
}

Trace load_trace_csv(const std::string& trace_path, const std::string& theta_path,
                     int n_times, int max_ell, int thin, int burn_in,
                     int n_iterations) {
  Trace trace;
  trace.n_times = n_times;
  trace.max_ell = max_ell;
  trace.thin = thin;
  trace.burn_in = burn_in;
  trace.n_iterations = n_iterations;

  std::ifstream in = open_input(trace_path);
  std::string line;
  int row = 0;
  if (!std::getline(in, line) || strip(line) != "iter,ell,tau,log_posterior") {
    throw ParseError(trace_path + ":1: bad trace header");
  }
  ++row;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    const std::string context = trace_path + ":" + std::to_string(row);
    const auto fields = split(line, ',');
    if (fields.size() != 4) throw ParseError(context + ": expected 4 fields");
    TraceRecord rec;
    rec.iteration = static_cast<int>(parse_int(fields[0], context));
    rec.tau = parse_tau_field(fields[2], context);
    if (static_cast<int>(rec.tau.size()) != parse_int(fields[1], context)) {
      throw ParseError(context + ": ell does not match the tau list length");
    }
    rec.log_posterior = parse_double(fields[3], context);
    trace.records.push_back(std::move(rec));
  }

  std::ifstream theta_in = open_input(theta_path);
  row = 0;
  if (!std::getline(theta_in, line) || strip(line) != "iter,theta") {
    throw ParseError(theta_path + ":1: bad theta trace header");
  }
  ++row;
  std::size_t k = 0;
  while (std::getline(theta_in, line)) {
    ++row;
    if (strip(line).empty()) continue;
    const std::string context = theta_path + ":" + std::to_string(row);
    const auto fields = split(line, ',');
    if (fields.size() != 2) throw ParseError(context + ": expected 2 fields");
    if (k >= trace.records.size()) {
      throw ParseError(context + ": more theta rows than trace rows");
    }
    auto& rec = trace.records[k];
    if (parse_int(fields[0], context) != rec.iteration) {
      throw ParseError(context + ": iteration mismatch with the trace file");
    }
    for (const auto& part : split(fields[1], ';')) {
      rec.theta_active.push_back(parse_double(part, context));
    }
    if (rec.theta_active.size() != rec.tau.size() + 2) {
      throw ParseError(context + ": expected " +
                       std::to_string(rec.tau.size() + 2) + " theta values");
    }
    ++k;
  }
  if (k != trace.records.size()) {
    throw ParseError(theta_path + ": fewer theta rows than trace rows");
  }
  return trace;
}

// ---- manifest -------------------------------------------------------------------------

namespace {

ordered_json config_to_json(const SamplerConfig& cfg) {
  ordered_json j;
  j["nu0"] = cfg.prior.nu0;
  j["mu0"] = "grand-mean";
  j["alpha"] = cfg.prior.alpha;
  j["b"] = cfg.prior.b;
  j["max_ell"] = cfg.prior.max_ell;
  j["ell_prior"] = cfg.prior.ell_prior_kind == EllPriorKind::complexity
                       ? "complexity"
                       : "poisson";
  j["poisson_lambda"] = cfg.prior.poisson_lambda;
  j["poisson_support_max"] = cfg.prior.poisson_support_max;
  j["alpha0"] = cfg.variance.alpha0;
  j["beta0"] = cfg.variance.beta0;
  j["c"] = cfg.moves.c;
  j["d1"] = cfg.moves.d1;
  j["d2"] = cfg.moves.d2;
  j["iterations"] = cfg.n_iterations;
  j["burn_in"] = cfg.burn_in;
  j["thin"] = cfg.thin;
  j["warm_start_iterations"] = cfg.warm_start_iterations;
  return j;
}

void config_from_json(const ordered_json& j, SamplerConfig& cfg) {
  cfg.prior.nu0 = j.at("nu0").get<double>();
  cfg.prior.alpha = j.at("alpha").get<double>();
  cfg.prior.b = j.at("b").get<double>();
  cfg.prior.max_ell = j.at("max_ell").get<int>();
  cfg.prior.ell_prior_kind = j.at("ell_prior").get<std::string>() == "complexity"
                                 ? EllPriorKind::complexity
                                 : EllPriorKind::truncated_poisson;
  cfg.prior.poisson_lambda = j.at("poisson_lambda").get<double>();
  cfg.prior.poisson_support_max = j.at("poisson_support_max").get<int>();
  cfg.variance.alpha0 = j.at("alpha0").get<double>();
  cfg.variance.beta0 = j.at("beta0").get<double>();
  cfg.moves.c = j.at("c").get<double>();
  cfg.moves.d1 = j.at("d1").get<int>();
  cfg.moves.d2 = j.at("d2").get<int>();
  cfg.n_iterations = j.at("iterations").get<int>();
  cfg.burn_in = j.at("burn_in").get<int>();
  cfg.thin = j.at("thin").get<int>();
  cfg.warm_start_iterations = j.at("warm_start_iterations").get<int>();
}

}  // namespace

void write_manifest(const RunManifest& manifest, const std::string& path) {
  ordered_json j;
  j["tool"] = "cpslope";
  j["schema"] = 1;
  j["command"] = "run";
  j["input"] = manifest.input;
  j["sampler"] = manifest.sampler;
  j["variances"] = manifest.variances;
  j["master_seed"] = manifest.master_seed;
  j["n_series"] = manifest.n_series;
  j["n_times"] = manifest.n_times;
  j["n_reps"] = manifest.n_reps;
  j["config"] = config_to_json(manifest.config);
  ordered_json series = ordered_json::array();
  for (const auto& s : manifest.series) {
    ordered_json e;
    e["id"] = s.id;
    e["seed"] = s.seed;
    e["trace"] = s.trace_file;
    e["theta"] = s.theta_file;
    e["accept_rate_move1"] = s.accept_rates[0];
    e["accept_rate_move2"] = s.accept_rates[1];
    e["accept_rate_move3"] = s.accept_rates[2];
    e["accept_rate_move4"] = s.accept_rates[3];
    series.push_back(std::move(e));
  }
  j["series"] = std::move(series);
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in = open_input(path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  RunManifest m;
  try {
    m.input = j.at("input").get<std::string>();
    m.sampler = j.at("sampler").get<std::string>();
    m.variances = j.at("variances").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.n_series = j.at("n_series").get<int>();
    m.n_times = j.at("n_times").get<int>();
    m.n_reps = j.at("n_reps").get<int>();
    config_from_json(j.at("config"), m.config);
    for (const auto& e : j.at("series")) {
      ManifestSeries s;
      s.id = e.at("id").get<std::string>();
      s.seed = e.at("seed").get<std::uint64_t>();
      s.trace_file = e.at("trace").get<std::string>();
      s.theta_file = e.at("theta").get<std::string>();
      s.accept_rates = {e.at("accept_rate_move1").get<double>(),
                        e.at("accept_rate_move2").get<double>(),
                        e.at("accept_rate_move3").get<double>(),
                        e.at("accept_rate_move4").get<double>()};
      m.series.push_back(std::move(s));
    }
  } catch (const ordered_json::exception& e) {
    throw ParseError(path + ": manifest field missing or mistyped: " + e.what());
  }
  return m;
}

// ---- summaries JSON --------------------------------------------------------------

void write_summaries_json(const std::vector<SeriesSummary>& summaries,
                          const std::string& path) {
  ordered_json j;
  j["tool"] = "cpslope";
  j["schema"] = 1;
  if (!summaries.empty()) {
    j["n_times"] = summaries.front().n_times;
    j["band_multiplier"] = summaries.front().band_multiplier;
  }
  ordered_json all = ordered_json::object();
  for (const auto& s : summaries) {
    ordered_json e;
    e["n_records"] = s.n_records;
    e["n_conditioned"] = s.n_conditioned;
    e["ell_map"] = s.ell_map;
    e["ell_posterior"] = s.ell_posterior;
    ordered_json marginals = ordered_json::array();
    for (const auto& m : s.location_marginals) {
      ordered_json me;
      me["min"] = m.min;
      me["q25"] = m.q25;
      me["median"] = m.median;
      me["q75"] = m.q75;
      me["max"] = m.max;
      ordered_json hist = ordered_json::object();
      for (const auto& [t, c] : m.histogram) hist[std::to_string(t)] = c;
      me["histogram"] = std::move(hist);
      marginals.push_back(std::move(me));
    }
    e["location_marginals"] = std::move(marginals);
    e["z_counts"] = s.z_counts;
    e["z_probs"] = s.z_probs;
    e["fitted_mean"] = std::vector<double>(
        s.fitted_mean.data(), s.fitted_mean.data() + s.fitted_mean.size());
    e["fitted_sd"] = std::vector<double>(
        s.fitted_sd.data(), s.fitted_sd.data() + s.fitted_sd.size());
    std::vector<double> lower(s.n_times), upper(s.n_times);
    for (int t = 0; t < s.n_times; ++t) {
      lower[t] = s.fitted_mean(t) - s.band_multiplier * s.fitted_sd(t);
      upper[t] = s.fitted_mean(t) + s.band_multiplier * s.fitted_sd(t);
    }
    e["band_lower"] = lower;
    e["band_upper"] = upper;
    all[s.series_id] = std::move(e);
  }
  j["series"] = std::move(all);
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

std::vector<std::pair<std::string, int>> load_summary_map_ells(
    const std::string& path) {
  std::ifstream in = open_input(path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  std::vector<std::pair<std::string, int>> out;
  try {
    for (const auto& [id, e] : j.at("series").items()) {
      out.emplace_back(id, e.at("ell_map").get<int>());
    }
  } catch (const ordered_json::exception& e) {
    throw ParseError(path + ": summaries field missing or mistyped: " + e.what());
  }
  return out;
}

// ---- evaluation outputs ---------------------------------------------------------

void write_mae_table_csv(const BenchmarkScore& score, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "true_ell,count,mae,se\n";
  for (const auto& row : score.rows) {
    out << row.true_ell << ',' << row.count << ',' << format_double(row.mae)
        << ',' << (row.se ? format_double(*row.se) : std::string()) << '\n';
  }
}

void write_error_histogram_csv(const BenchmarkScore& score,
                               const std::string& path) {
  std::ofstream out = open_output(path);
  out << "error,count\n";
  for (const auto& [err, count] : score.signed_error_histogram) {
    out << err << ',' << count << '\n';
  }
}

// ---- plot data -------------------------------------------------------------------

void write_plot_data(const std::vector<SeriesSummary>& summaries,
                     const std::vector<std::pair<std::string, const Trace*>>& traces,
                     const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out = open_output((fs::path(dir) / "ell_trace.csv").string());
    out << "series_id,iter,ell\n";
    for (const auto& [id, trace] : traces) {
      for (const auto& rec : trace->records) {
        out << id << ',' << rec.iteration << ',' << rec.ell() << '\n';
      }
    }
  }
  {
    std::ofstream out = open_output((fs::path(dir) / "locations.csv").string());
    out << "series_id,change_point,min,q25,median,q75,max\n";
    for (const auto& s : summaries) {
      for (std::size_t jj = 0; jj < s.location_marginals.size(); ++jj) {
        const auto& m = s.location_marginals[jj];
        out << s.series_id << ',' << jj + 1 << ',' << format_double(m.min) << ','
            << format_double(m.q25) << ',' << format_double(m.median) << ','
            << format_double(m.q75) << ',' << format_double(m.max) << '\n';
      }
    }
  }
  {
    std::ofstream out = open_output((fs::path(dir) / "z_probs.csv").string());
    out << "series_id,time,probability\n";
    for (const auto& s : summaries) {
      for (int t = 1; t <= s.n_times; ++t) {
        out << s.series_id << ',' << t << ',' << format_double(s.z_probs[t - 1])
            << '\n';
      }
    }
  }
  {
    std::ofstream out = open_output((fs::path(dir) / "fitted_band.csv").string());
    out << "series_id,time,mean,sd,lower,upper\n";
    for (const auto& s : summaries) {
      for (int t = 1; t <= s.n_times; ++t) {
        const double m = s.fitted_mean(t - 1), sd = s.fitted_sd(t - 1);
        out << s.series_id << ',' << t << ',' << format_double(m) << ','
            << format_double(sd) << ','
            << format_double(m - s.band_multiplier * sd) << ','
            << format_double(m + s.band_multiplier * sd) << '\n';
      }
    }
  }
}

// ---- key=value config files ----------------------------------------------------

std::map<std::string, std::string> load_key_value_file(const std::string& path) {
  std::ifstream in = open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(row) +
                       ": expected key=value, got '" + s + "'");
    }
    const std::string key = strip(s.substr(0, eq));
    if (key.empty()) {
      throw ParseError(path + ":" + std::to_string(row) + ": empty key");
    }
    if (!kv.emplace(key, strip(s.substr(eq + 1))).second) {
      throw ParseError(path + ":" + std::to_string(row) + ": duplicate key '" +
                       key + "'");
    }
  }
  return kv;
}

SimScenario parse_scenario(const std::map<std::string, std::string>& kv,
                           const std::string& context) {
  SimScenario sc;
  auto geti = [&](const std::string& key, int& field) {
    if (auto it = kv.find(key); it != kv.end()) {
      field = static_cast<int>(parse_int(it->second, context + " (" + key + ")"));
    }
  };
  auto getd = [&](const std::string& key, double& field) {
    if (auto it = kv.find(key); it != kv.end()) {
      field = parse_double(it->second, context + " (" + key + ")");
    }
  };
  geti("T", sc.n_times);
  geti("N", sc.n_series);
  geti("R", sc.n_reps);
  geti("ell_min", sc.ell_min);
  geti("ell_max", sc.ell_max);
  geti("jitter_trials", sc.jitter_trials);
  getd("jitter_prob", sc.jitter_prob);
  getd("replicate_jitter_mean", sc.replicate_jitter_mean);
  getd("slope_sd", sc.slope_sd);
  getd("sign_flip_prob", sc.sign_flip_prob);
  getd("endpoint_sd2", sc.endpoint_sd2);
  geti("max_retries", sc.max_retries);
  if (auto it = kv.find("seed"); it != kv.end()) {
    sc.seed = static_cast<std::uint64_t>(
        parse_int(it->second, context + " (seed)"));
  }
  if (auto it = kv.find("noise"); it != kv.end()) {
    if (it->second == "noisy") sc.noise = NoiseKind::noisy;
    else if (it->second == "exact") sc.noise = NoiseKind::exact;
    else throw ConfigError(context + ": noise must be 'noisy' or 'exact'");
  }
  if (auto it = kv.find("variance"); it != kv.end()) {
    if (it->second == "free") sc.variance = VarianceKind::free_per_series;
    else if (it->second == "shared") sc.variance = VarianceKind::shared_across_series;
    else throw ConfigError(context + ": variance must be 'free' or 'shared'");
  }
  static const std::set<std::string> known = {
      "T", "N", "R", "ell_min", "ell_max", "jitter_trials", "jitter_prob",
      "replicate_jitter_mean", "slope_sd", "sign_flip_prob", "endpoint_sd2",
      "max_retries", "seed", "noise", "variance"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) {
      throw ConfigError(context + ": unknown scenario key '" + key + "'");
    }
  }
  sc.validate();
  return sc;
}

std::vector<std::string> series_file_stems(const std::vector<std::string>& ids) {
  std::vector<std::string> stems;
  std::unordered_set<std::string> used;
  stems.reserve(ids.size());
  for (std::size_t n = 0; n < ids.size(); ++n) {
    std::string stem = ids[n];
    for (char& ch : stem) {
      const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                      (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' ||
                      ch == '.';
      if (!ok) ch = '_';
    }
    if (!used.insert(stem).second) {
      stem += "_" + std::to_string(n);
      used.insert(stem);
    }
    stems.push_back(std::move(stem));
  }
  return stems;
}

}  // namespace cpslope
