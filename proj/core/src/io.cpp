#include "maxsmooth/io.hpp"

#include "maxsmooth/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace maxsmooth {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(' ');
    const auto e = s.find_last_not_of(' ');
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

std::string join(const std::vector<std::string>& v, char delim) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s.push_back(delim);
    s += v[i];
  }
  return s;
}

void check_id(const std::string& id, const std::string& where) {
  if (id.empty()) throw DataError("empty station identifier in " + where);
  if (id.find_first_of(",;\t #") != std::string::npos)
    throw DataError("station identifier '" + id + "' contains a reserved character in " + where);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  return is;
}

bool parse_bool(const std::string& s, const std::string& where) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (l == "1" || l == "true" || l == "yes" || l == "y") return true;
  if (l == "0" || l == "false" || l == "no" || l == "n") return false;
  throw DataError("expected a boolean, got '" + s + "' in " + where);
}

}  // namespace

int TextTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

TextTable parse_table(std::istream& is, const std::string& source) {
  TextTable t;
  std::string line;
  int n = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      t.comments.push_back(line);
      continue;
    }
    if (!have_header) {
      t.delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
      t.header = split(line, t.delimiter);
      have_header = true;
      std::set<std::string> seen;
      for (const auto& h : t.header)
        if (!seen.insert(h).second) throw DataError(source + ": duplicate column '" + h + "'", n);
      continue;
    }
    auto fields = split(line, t.delimiter);
    if (fields.size() != t.header.size())
      throw DataError(source + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                          std::to_string(fields.size()),
                      n);
    t.rows.push_back(std::move(fields));
    t.lines.push_back(n);
  }
  if (!have_header) throw DataError(source + ": no header line");
  return t;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan" || s == "NaN" || s == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != e) throw DataError("not a number: '" + s + "' in " + where);
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DataError("not an integer: '" + s + "' in " + where);
  return v;
}

std::vector<SiteData> parse_maxima(std::istream& is, const std::string& source) {
  const TextTable t = parse_table(is, source);
  const int cs = t.column("station"), cy = t.column("year"), ca = t.column("amax"), cp = t.column("pooling_ok");
  if (cs < 0 || cy < 0 || ca < 0) throw DataError(source + ": header must contain station, year and amax", 1);
  std::vector<SiteData> sites;
  std::map<std::string, std::size_t> index;
  std::map<std::pair<std::string, int>, int> seen;
  std::set<std::string> dropped;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int line = t.lines[r];
    const std::string where = source + " line " + std::to_string(line);
    try {
      check_id(row[static_cast<std::size_t>(cs)], where);
      const std::string& id = row[static_cast<std::size_t>(cs)];
      const int year = parse_int(row[static_cast<std::size_t>(cy)], where);
      const double amax = parse_double(row[static_cast<std::size_t>(ca)], where);
      if (!std::isfinite(amax) || amax <= 0.0) throw DataError("annual maximum must be finite and positive");
      const auto key = std::make_pair(id, year);
      if (const auto it = seen.find(key); it != seen.end())
        throw DataError("duplicate station " + id + " year " + std::to_string(year) + " (first at line " +
                        std::to_string(it->second) + ")");
      seen[key] = line;
      if (cp >= 0 && !parse_bool(row[static_cast<std::size_t>(cp)], where)) {
        dropped.insert(id);
        continue;
      }
      auto it = index.find(id);
      if (it == index.end()) {
        it = index.emplace(id, sites.size()).first;
        sites.push_back(SiteData{id, {}, {}});
      }
      sites[it->second].years.push_back(year);
      sites[it->second].maxima.push_back(amax);
    } catch (const DataError& e) {
      if (e.line() >= 0) throw;
      throw DataError(source + ": " + e.what(), line);
    }
  }
  for (auto& s : sites) {
    std::vector<std::size_t> order(s.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.years[a] < s.years[b]; });
    SiteData sorted{s.site_id, {}, {}};
    for (std::size_t i : order) {
      sorted.years.push_back(s.years[i]);
      sorted.maxima.push_back(s.maxima[i]);
    }
    s = std::move(sorted);
  }
  return sites;
}

std::vector<SiteData> load_maxima(const std::string& path) {
  auto is = open_in(path);
  return parse_maxima(is, path);
}

void write_maxima(std::ostream& os, const std::vector<SiteData>& sites) {
  os << "station,year,amax\n";
  for (const auto& s : sites)
    for (std::size_t i = 0; i < s.size(); ++i) os << s.site_id << ',' << s.years[i] << ',' << format_double(s.maxima[i]) << '\n';
}

int DescriptorTable::row(const std::string& site_id) const {
  for (std::size_t i = 0; i < site_ids.size(); ++i)
    if (site_ids[i] == site_id) return static_cast<int>(i);
  return -1;
}

void DescriptorTable::validate() const {
  if (coords.size() != site_ids.size() || values.rows() != static_cast<Eigen::Index>(site_ids.size()) ||
      values.cols() != static_cast<Eigen::Index>(names.size()))
    throw DataError("descriptor table dimensions are inconsistent");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < site_ids.size(); ++i) {
    if (!ids.insert(site_ids[i]).second) throw DataError("descriptor table lists " + site_ids[i] + " twice");
    if (!coords[i].allFinite()) throw DataError("non-finite coordinates for " + site_ids[i]);
  }
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto col = values.col(static_cast<Eigen::Index>(c));
    const std::string& n = names[c];
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      const double v = col(i);
      const std::string at = n + " of " + site_ids[static_cast<std::size_t>(i)];
      if (!std::isfinite(v)) throw DataError("non-finite " + at);
      if (n == "AREA" && !(v > 0.0)) throw DataError("AREA must be positive: " + at);
      if (n == "FARL" && !(v > 0.0 && v <= 1.0)) throw DataError("FARL must lie in (0, 1]: " + at);
      if (n == "URBEXT" && !(v >= 0.0)) throw DataError("URBEXT must be nonnegative: " + at);
      if (n == "BFIHOST" && !(v > 0.0 && v < 1.0)) throw DataError("BFIHOST must lie in (0, 1): " + at);
    }
  }
}

DescriptorTable DescriptorTable::select(const std::vector<std::string>& ids) const {
  DescriptorTable out;
  out.names = names;
  out.values.resize(static_cast<Eigen::Index>(ids.size()), values.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int r = row(ids[i]);
    if (r < 0) throw DataError("no descriptors for station " + ids[i]);
    out.site_ids.push_back(ids[i]);
    out.coords.push_back(coords[static_cast<std::size_t>(r)]);
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(r);
  }
  return out;
}

DescriptorTable parse_descriptors(std::istream& is, const std::string& source) {
  const TextTable t = parse_table(is, source);
  const int cs = t.column("station"), cx = t.column("x"), cy = t.column("y");
  if (cs < 0 || cx < 0 || cy < 0) throw DataError(source + ": header must contain station, x and y", 1);
  DescriptorTable d;
  std::vector<int> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const int ci = static_cast<int>(c);
    if (ci == cs || ci == cx || ci == cy) continue;
    d.names.push_back(t.header[c]);
    cols.push_back(ci);
  }
  d.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = source + " line " + std::to_string(t.lines[r]);
    try {
      check_id(row[static_cast<std::size_t>(cs)], where);
      d.site_ids.push_back(row[static_cast<std::size_t>(cs)]);
      d.coords.emplace_back(parse_double(row[static_cast<std::size_t>(cx)], where),
                            parse_double(row[static_cast<std::size_t>(cy)], where));
      for (std::size_t c = 0; c < cols.size(); ++c)
        d.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            parse_double(row[static_cast<std::size_t>(cols[c])], where);
    } catch (const DataError& e) {
      if (e.line() >= 0) throw;
      throw DataError(e.what(), t.lines[r]);
    }
  }
  d.validate();
  return d;
}

DescriptorTable load_descriptors(const std::string& path) {
  auto is = open_in(path);
  return parse_descriptors(is, path);
}

void write_descriptors(std::ostream& os, const DescriptorTable& t) {
  os << "station,x,y";
  for (const auto& n : t.names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < t.site_ids.size(); ++i) {
    os << t.site_ids[i] << ',' << format_double(t.coords[i].x()) << ',' << format_double(t.coords[i].y());
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) os << ',' << format_double(t.values(static_cast<Eigen::Index>(i), c));
    os << '\n';
  }
}

double transform_descriptor(const std::string& name, double raw) {
  if (!std::isfinite(raw)) throw InputError("non-finite value in column " + name);
  if (name == "BFIHOST") return raw * raw;
  if (name == "ASPBAR") return raw / 100.0;
  if (name == "URBEXT") {
    if (!(raw > -1.0)) throw InputError("URBEXT + 1 must be positive in column URBEXT");
    return std::log1p(raw);
  }
  if (!(raw > 0.0)) throw InputError("nonpositive value under the log transform in column " + name);
  return std::log(raw);
}

CovariateTable transform_descriptors(const DescriptorTable& t, const std::vector<std::string>& columns) {
  const std::vector<std::string> use = columns.empty() ? t.names : columns;
  CovariateTable out;
  out.names = use;
  out.values.resize(static_cast<Eigen::Index>(t.site_ids.size()), static_cast<Eigen::Index>(use.size()));
  for (std::size_t c = 0; c < use.size(); ++c) {
    const auto it = std::find(t.names.begin(), t.names.end(), use[c]);
    if (it == t.names.end()) throw InputError("descriptor column " + use[c] + " not found");
    const auto src = it - t.names.begin();
    for (Eigen::Index i = 0; i < out.values.rows(); ++i)
      out.values(i, static_cast<Eigen::Index>(c)) = transform_descriptor(use[c], t.values(i, src));
  }
  return out;
}

namespace {

const char* kParamNames[] = {"psi", "tau", "phi", "gamma"};

FitStatus status_from(const std::string& s, const std::string& where) {
  for (FitStatus f : {FitStatus::kConverged, FitStatus::kNotConverged, FitStatus::kDegenerate, FitStatus::kTooShort})
    if (s == to_string(f)) return f;
  throw DataError("unknown fit status '" + s + "' in " + where);
}

}  // namespace

void write_site_fits(std::ostream& os, const std::vector<SiteFit>& fits) {
  int d = 0;
  for (const auto& f : fits) d = std::max<int>(d, static_cast<int>(f.eta_hat.size()));
  if (d == 0) d = 4;
  os << "station,status,n_obs,restarts,repaired,log_lik,grad_sup_norm";
  for (int i = 0; i < d; ++i) os << ',' << kParamNames[i];
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) os << ",q_" << kParamNames[i] << '_' << kParamNames[j];
  os << ",message\n";
  for (const auto& f : fits) {
    if (f.eta_hat.size() != d) throw InputError("site fits mix trend and stationary models");
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << f.site_id << ',' << to_string(f.status) << ',' << f.n_obs << ',' << f.restarts << ','
       << (f.precision_repaired ? 1 : 0) << ',' << format_double(f.log_lik) << ',' << format_double(f.grad_sup_norm);
    for (int i = 0; i < d; ++i) os << ',' << format_double(f.eta_hat(i));
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) os << ',' << format_double(f.precision(i, j));
    os << ',' << msg << '\n';
  }
}

std::vector<SiteFit> parse_site_fits(std::istream& is, const std::string& source) {
  const TextTable t = parse_table(is, source);
  const int d = t.column("gamma") >= 0 ? 4 : 3;
  for (const char* c : {"station", "status", "n_obs", "restarts", "repaired", "log_lik", "grad_sup_norm", "message"})
    if (t.column(c) < 0) throw DataError(source + ": missing column " + c, 1);
  std::vector<SiteFit> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = source + " line " + std::to_string(t.lines[r]);
    auto get = [&](const std::string& c) { return row[static_cast<std::size_t>(t.column(c))]; };
    SiteFit f;
    f.site_id = get("station");
    f.status = status_from(get("status"), where);
    f.n_obs = static_cast<std::size_t>(parse_int(get("n_obs"), where));
    f.restarts = parse_int(get("restarts"), where);
    f.precision_repaired = parse_int(get("repaired"), where) != 0;
    f.log_lik = parse_double(get("log_lik"), where);
    f.grad_sup_norm = parse_double(get("grad_sup_norm"), where);
    f.eta_hat.resize(d);
    f.precision.resize(d, d);
    for (int i = 0; i < d; ++i) {
      if (t.column(kParamNames[i]) < 0) throw DataError(source + ": missing column " + kParamNames[i], 1);
      f.eta_hat(i) = parse_double(get(kParamNames[i]), where);
    }
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        const std::string c = std::string("q_") + kParamNames[i] + "_" + kParamNames[j];
        if (t.column(c) < 0) throw DataError(source + ": missing column " + c, 1);
        f.precision(i, j) = f.precision(j, i) = parse_double(get(c), where);
      }
    f.message = get("message");
    out.push_back(std::move(f));
  }
  return out;
}

void write_draws(std::ostream& os, const PosteriorDraws& d, const std::map<std::string, std::string>& meta) {
  auto list = [](const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(format_double(x));
    return join(s, ';');
  };
  std::vector<std::string> params;
  for (Param p : d.params) params.emplace_back(param_name(p));
  os << "# maxsmooth draws v1\n";
  os << "# seed=" << d.seed << '\n';
  os << "# chains=" << d.n_chains << '\n';
  os << "# iterations=" << d.iterations << '\n';
  os << "# burn_in=" << d.burn_in << '\n';
  os << "# params=" << join(params, ';') << '\n';
  os << "# sites=" << join(d.site_ids, ';') << '\n';
  os << "# rhat=" << list(d.rhat) << '\n';
  os << "# ess=" << list(d.ess) << '\n';
  os << "# acceptance=" << list(d.acceptance) << '\n';
  os << "# rejected=" << d.rejected << '\n';
  os << "# status=" << d.status() << '\n';
  for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
  os << "chain,iteration";
  for (const auto& n : d.theta_names) os << ',' << n;
  for (const auto& n : d.nu_names) os << ',' << n;
  for (const auto& n : d.eta_names()) os << ',' << n;
  os << '\n';
  for (int r = 0; r < d.n_draws(); ++r) {
    os << d.chain[static_cast<std::size_t>(r)] << ',' << d.iteration[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < d.theta.cols(); ++c) os << ',' << format_double(d.theta(r, c));
    for (Eigen::Index c = 0; c < d.nu.cols(); ++c) os << ',' << format_double(d.nu(r, c));
    for (Eigen::Index c = 0; c < d.eta.cols(); ++c) os << ',' << format_double(d.eta(r, c));
    os << '\n';
  }
}

PosteriorDraws parse_draws(std::istream& is, const std::string& source, std::map<std::string, std::string>* meta_out) {
  const TextTable t = parse_table(is, source);
  std::map<std::string, std::string> meta;
  for (const auto& c : t.comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    meta[split(c.substr(1, eq - 1), '\0').front()] = c.substr(eq + 1);
  }
  auto need = [&](const std::string& k) {
    const auto it = meta.find(k);
    if (it == meta.end()) throw DataError(source + ": missing metadata '" + k + "'");
    return it->second;
  };
  auto list = [](const std::string& s) {
    std::vector<std::string> v;
    if (!s.empty()) v = split(s, ';');
    return v;
  };
  PosteriorDraws d;
  d.seed = std::stoull(need("seed"));
  d.n_chains = parse_int(need("chains"), source);
  d.iterations = parse_int(need("iterations"), source);
  d.burn_in = parse_int(need("burn_in"), source);
  for (const auto& p : list(need("params"))) d.params.push_back(param_from_name(p));
  d.site_ids = list(need("sites"));
  for (const auto& s : list(need("rhat"))) d.rhat.push_back(parse_double(s, source));
  for (const auto& s : list(need("ess"))) d.ess.push_back(parse_double(s, source));
  for (const auto& s : list(need("acceptance"))) d.acceptance.push_back(parse_double(s, source));
  d.rejected = parse_int(need("rejected"), source);
  d.rhat_warning = need("status") == "rhat_warning";

  if (t.header.size() < 2 || t.header[0] != "chain" || t.header[1] != "iteration")
    throw DataError(source + ": draws must start with chain and iteration columns", 1);
  const std::vector<std::string> eta_names = d.eta_names();
  const std::set<std::string> eta_set(eta_names.begin(), eta_names.end());
  std::vector<int> theta_cols, nu_cols;
  for (std::size_t c = 2; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    if (h.rfind("sigma_eps_", 0) == 0 || h.rfind("s_", 0) == 0 || h.rfind("rho_", 0) == 0) {
      theta_cols.push_back(static_cast<int>(c));
      d.theta_names.push_back(h);
    } else if (h.rfind("beta_", 0) == 0 || h.rfind("u_", 0) == 0) {
      nu_cols.push_back(static_cast<int>(c));
      d.nu_names.push_back(h);
    } else if (!eta_set.count(h)) {
      throw DataError(source + ": unexpected column " + h, 1);
    }
  }
  std::vector<int> eta_cols;
  for (const auto& n : eta_names) {
    const int c = t.column(n);
    if (c < 0) throw DataError(source + ": missing column " + n, 1);
    eta_cols.push_back(c);
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  d.theta.resize(n, static_cast<Eigen::Index>(theta_cols.size()));
  d.nu.resize(n, static_cast<Eigen::Index>(nu_cols.size()));
  d.eta.resize(n, static_cast<Eigen::Index>(eta_cols.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    const std::string where = source + " line " + std::to_string(t.lines[static_cast<std::size_t>(r)]);
    d.chain.push_back(parse_int(row[0], where));
    d.iteration.push_back(parse_int(row[1], where));
    for (std::size_t c = 0; c < theta_cols.size(); ++c)
      d.theta(r, static_cast<Eigen::Index>(c)) = parse_double(row[static_cast<std::size_t>(theta_cols[c])], where);
    for (std::size_t c = 0; c < nu_cols.size(); ++c)
      d.nu(r, static_cast<Eigen::Index>(c)) = parse_double(row[static_cast<std::size_t>(nu_cols[c])], where);
    for (std::size_t c = 0; c < eta_cols.size(); ++c)
      d.eta(r, static_cast<Eigen::Index>(c)) = parse_double(row[static_cast<std::size_t>(eta_cols[c])], where);
  }
  if (meta_out) *meta_out = std::move(meta);
  return d;
}

void write_standardizer(std::ostream& os, const Standardizer& s) {
  os << "column,center,scale\n";
  for (std::size_t i = 0; i < s.names.size(); ++i)
    os << s.names[i] << ',' << format_double(s.center(static_cast<Eigen::Index>(i))) << ','
       << format_double(s.scale(static_cast<Eigen::Index>(i))) << '\n';
}

Standardizer parse_standardizer(std::istream& is, const std::string& source) {
  const TextTable t = parse_table(is, source);
  const int cn = t.column("column"), cc = t.column("center"), cs = t.column("scale");
  if (cn < 0 || cc < 0 || cs < 0) throw DataError(source + ": header must be column,center,scale", 1);
  Standardizer s;
  s.center.resize(static_cast<Eigen::Index>(t.rows.size()));
  s.scale.resize(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = source + " line " + std::to_string(t.lines[r]);
    s.names.push_back(t.rows[r][static_cast<std::size_t>(cn)]);
    s.center(static_cast<Eigen::Index>(r)) = parse_double(t.rows[r][static_cast<std::size_t>(cc)], where);
    s.scale(static_cast<Eigen::Index>(r)) = parse_double(t.rows[r][static_cast<std::size_t>(cs)], where);
  }
  return s;
}

std::string read_file(const std::string& path) {
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

}  // namespace maxsmooth
