#ifndef STRATACR_IO_HPP
#define STRATACR_IO_HPP

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratacr/data.hpp"
#include "stratacr/diagnostics.hpp"
#include "stratacr/simulate.hpp"

namespace stratacr {

enum class EncounterFormat { History, Frequency };

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_num(const std::string& s, const std::string& path, int lineno) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed number '" + s + "'");
  }
}

inline long parse_int(const std::string& s, const std::string& path, int lineno) {
  double v = parse_num(s, path, lineno);
  long r = std::lround(v);
  if (static_cast<double>(r) != v)
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected integer, got '" + s + "'");
  return r;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Stratum-level covariate table: stratum,<covariate columns...>
struct StrataTable {
  std::vector<std::string> colnames;  // excluding the stratum column
  Matrix values;                      // S rows
  int S() const { return static_cast<int>(values.size()); }
};

inline StrataTable load_strata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto header = detail::split_csv(line);
  if (header.empty() || header[0] != "stratum")
    throw std::runtime_error(path + ": first column must be 'stratum'");
  StrataTable t;
  t.colnames.assign(header.begin() + 1, header.end());
  int lineno = 1;
  std::vector<std::pair<long, std::vector<double>>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() != header.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong field count");
    long s = detail::parse_int(f[0], path, lineno);
    std::vector<double> vals;
    for (std::size_t j = 1; j < f.size(); ++j) vals.push_back(detail::parse_num(f[j], path, lineno));
    rows.emplace_back(s, std::move(vals));
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t s = 0; s < rows.size(); ++s) {
    if (rows[s].first != static_cast<long>(s + 1))
      throw std::runtime_error(path + ": stratum labels must be exactly 1..S");
    t.values.push_back(std::move(rows[s].second));
  }
  if (t.values.empty()) throw std::runtime_error(path + ": no strata");
  return t;
}

// Encounters CSV. History format: id,stratum,k1,...,kK with 0/1 cells.
// Frequency format: id,stratum,y (K supplied by the caller).
inline EncounterData load_encounters(const std::string& path, EncounterFormat format,
                                     int K = 0, int S_hint = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto header = detail::split_csv(line);
  EncounterData data;
  if (format == EncounterFormat::History) {
    if (header.size() < 3 || header[0] != "id" || header[1] != "stratum")
      throw std::runtime_error(path + ": expected header id,stratum,k1,...,kK");
    data.K = static_cast<int>(header.size()) - 2;
  } else {
    if (header.size() != 3 || header[0] != "id" || header[1] != "stratum" || header[2] != "y")
      throw std::runtime_error(path + ": expected header id,stratum,y");
    if (K < 1) throw std::invalid_argument("frequency format requires the occasion count K");
    data.K = K;
  }
  int lineno = 1;
  int max_stratum = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() != header.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong field count");
    long s = detail::parse_int(f[1], path, lineno);
    if (s < 1 || (S_hint > 0 && s > S_hint))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": stratum label out of range");
    max_stratum = std::max(max_stratum, static_cast<int>(s));
    if (format == EncounterFormat::History) {
      std::vector<std::uint8_t> h(data.K);
      int y = 0;
      for (int k = 0; k < data.K; ++k) {
        long v = detail::parse_int(f[2 + k], path, lineno);
        if (v != 0 && v != 1)
          throw std::runtime_error(path + ":" + std::to_string(lineno) + ": history cells must be 0/1");
        h[k] = static_cast<std::uint8_t>(v);
        y += h[k];
      }
      if (y == 0)
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": uncaptured individual in data");
      data.histories.push_back(std::move(h));
      data.freq.push_back(y);
    } else {
      long y = detail::parse_int(f[2], path, lineno);
      if (y == 0)
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": uncaptured individual in data");
      if (y < 0 || y > data.K)
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": frequency outside 1..K");
      data.freq.push_back(static_cast<int>(y));
    }
    data.strata_of.push_back(static_cast<int>(s) - 1);
  }
  if (data.freq.empty()) throw std::runtime_error(path + ": no individuals");
  data.S = S_hint > 0 ? S_hint : max_stratum;
  data.validate();
  return data;
}

inline void write_encounters(const std::string& path, const EncounterData& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (data.has_histories()) {
    out << "id,stratum";
    for (int k = 1; k <= data.K; ++k) out << ",k" << k;
    out << "\n";
    for (int i = 0; i < data.n_individuals(); ++i) {
      out << (i + 1) << "," << (data.strata_of[i] + 1);
      for (int k = 0; k < data.K; ++k) out << "," << static_cast<int>(data.histories[i][k]);
      out << "\n";
    }
  } else {
    out << "id,stratum,y\n";
    for (int i = 0; i < data.n_individuals(); ++i)
      out << (i + 1) << "," << (data.strata_of[i] + 1) << "," << data.freq[i] << "\n";
  }
}

inline void write_strata(const std::string& path, const StrataTable& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "stratum";
  for (const auto& c : t.colnames) out << "," << c;
  out << "\n";
  for (int s = 0; s < t.S(); ++s) {
    out << (s + 1);
    for (double v : t.values[s]) out << "," << detail::fmt(v);
    out << "\n";
  }
}

inline void write_truth(const std::string& path, const SimTruth& truth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# true parameters:";
  for (std::size_t j = 0; j < truth.params.beta.size(); ++j)
    out << " beta_" << (j + 1) << "=" << detail::fmt(truth.params.beta[j]);
  out << " p=" << detail::fmt(truth.params.p) << " alpha0=" << detail::fmt(truth.params.alpha0)
      << " alpha1=" << detail::fmt(truth.params.alpha1) << " a=" << detail::fmt(truth.params.a)
      << "\n";
  out << "stratum,N\n";
  for (std::size_t s = 0; s < truth.N.size(); ++s) out << (s + 1) << "," << truth.N[s] << "\n";
}

// Design matrix from declared covariate columns: numeric columns are
// taken verbatim, categorical columns are dummy-coded against their
// smallest level.
struct DesignBuild {
  Matrix design;
  std::vector<std::string> names;
};

inline DesignBuild build_design(const StrataTable& strata,
                                const std::vector<std::string>& numeric,
                                const std::vector<std::string>& categorical,
                                bool intercept) {
  DesignBuild out;
  int S = strata.S();
  out.design.assign(S, {});
  if (intercept) {
    out.names.push_back("intercept");
    for (auto& row : out.design) row.push_back(1.0);
  }
  auto col_index = [&](const std::string& name) {
    for (std::size_t j = 0; j < strata.colnames.size(); ++j)
      if (strata.colnames[j] == name) return static_cast<int>(j);
    throw std::invalid_argument("covariate column not found in strata file: " + name);
  };
  for (const auto& name : numeric) {
    int j = col_index(name);
    out.names.push_back(name);
    for (int s = 0; s < S; ++s) out.design[s].push_back(strata.values[s][j]);
  }
  for (const auto& name : categorical) {
    int j = col_index(name);
    std::set<double> levels;
    for (int s = 0; s < S; ++s) levels.insert(strata.values[s][j]);
    if (levels.size() < 2)
      throw std::invalid_argument("categorical column has a single level: " + name);
    bool first = true;
    for (double lvl : levels) {
      if (first) { first = false; continue; }  // reference level
      std::ostringstream nm;
      nm << name << "_" << lvl;
      out.names.push_back(nm.str());
      for (int s = 0; s < S; ++s)
        out.design[s].push_back(strata.values[s][j] == lvl ? 1.0 : 0.0);
    }
  }
  return out;
}

// Flat key=value config file; '#' starts a comment.
inline std::map<std::string, std::string> parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline void write_draws_csv(const std::string& path, const DrawsMatrix& draws) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "chain,iter";
  for (const auto& c : draws.columns) out << "," << c;
  out << "\n";
  for (std::size_t c = 0; c < draws.chains.size(); ++c)
    for (std::size_t r = 0; r < draws.chains[c].size(); ++r) {
      out << (c + 1) << "," << (r + 1);
      for (double v : draws.chains[c][r]) out << "," << detail::fmt(v);
      out << "\n";
    }
}

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "parameter,mean,sd,q2.5,q50,q97.5,rhat\n";
  for (const auto& r : rows) {
    out << r.name << "," << detail::fmt(r.mean) << "," << detail::fmt(r.sd) << ","
        << detail::fmt(r.q025) << "," << detail::fmt(r.q50) << "," << detail::fmt(r.q975) << ",";
    if (std::isfinite(r.rhat)) out << detail::fmt(r.rhat);
    out << "\n";
  }
}

inline void write_gof_csv(const std::string& path, const GofResult& gof) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# p_value=" << detail::fmt(bayesian_p(gof)) << "\n";
  out << "draw,x_obs,x_sim\n";
  for (std::size_t m = 0; m < gof.x_obs.size(); ++m)
    out << (m + 1) << "," << detail::fmt(gof.x_obs[m]) << "," << detail::fmt(gof.x_sim[m]) << "\n";
}

inline void write_pi_summary_csv(const std::string& path, const std::vector<double>& pi_means) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "stratum,pi_mean\n";
  for (std::size_t s = 0; s < pi_means.size(); ++s)
    out << (s + 1) << "," << detail::fmt(pi_means[s]) << "\n";
}

inline GofResult gof_from_draws(const DrawsMatrix& draws) {
  GofResult gof;
  int jo = draws.column("X_obs");
  int js = draws.column("X_sim");
  for (const auto& ch : draws.chains)
    for (const auto& row : ch) {
      gof.x_obs.push_back(row[jo]);
      gof.x_sim.push_back(row[js]);
    }
  return gof;
}

// All output artifacts for a completed run.
inline void write_outputs(const DrawsMatrix& draws, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir);
  write_draws_csv(dir + "/draws.csv", draws);
  write_summary_csv(dir + "/summary.csv", summarize(draws));
  write_gof_csv(dir + "/gof.csv", gof_from_draws(draws));
  std::vector<double> pi_means;
  for (std::size_t j = 0; j < draws.columns.size(); ++j)
    if (draws.columns[j].rfind("pi_", 0) == 0)
      pi_means.push_back(mean(draws.pooled(static_cast<int>(j))));
  write_pi_summary_csv(dir + "/pi_summary.csv", pi_means);
}

}  // namespace stratacr

#endif
