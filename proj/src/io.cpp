#include "ivmono/io.hpp"

#include "ivmono/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <sstream>

namespace ivmono::io {

namespace {

std::string_view
trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view>
split(std::string_view line, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

bool
parse_double(std::string_view s, double& out)
{
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool
parse_index(std::string_view s, std::size_t& out)
{
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string
fmt_double(double v)
{
  return fmt::format("{}", v);
}

const char*
family_name(OutcomeFamily f)
{
  return f == OutcomeFamily::gaussian ? "gaussian" : "exponential";
}

Direction
parse_direction(const std::string& s)
{
  if (s == "le" || s == "<=")
    return Direction::le;
  if (s == "ge" || s == ">=")
    return Direction::ge;
  if (s == "both" || s == "=" || s == "==")
    return Direction::both;
  if (s == "neither" || s == "none")
    return Direction::neither;
  throw Error(ErrorKind::config_invalid, fmt::format("unknown direction '{}'", s));
}

std::size_t
label_index(const json& v, const std::vector<std::string>& labels)
{
  if (v.is_number_unsigned())
    return v.get<std::size_t>();
  if (v.is_string()) {
    auto it = std::find(labels.begin(), labels.end(), v.get<std::string>());
    if (it != labels.end())
      return static_cast<std::size_t>(it - labels.begin());
  }
  throw Error(ErrorKind::config_invalid, fmt::format("unknown instrument value {}", v.dump()));
}

template<class T>
void
read_field(const json& j, const char* key, T& out)
{
  if (j.contains(key))
    out = j.at(key).get<T>();
}

json
map_summary(const CounterfactualMap& m)
{
  json j;
  j["source"] = m.source();
  j["target"] = m.target();
  j["nodes"] = m.size();
  if (m.size() > 0) {
    j["domain"] = { number(m.grid().front()), number(m.grid().back()) };
    j["range"] = { number(m.images().front()), number(m.images().back()) };
  }
  return j;
}

json
complier_summary(const ComplierTable& c, const CellTables& tables)
{
  json j;
  j["from"] = tables.labels[c.from];
  j["to"] = tables.labels[c.to];
  j["treatment"] = c.treatment;
  j["probability"] = number(c.probability);
  j["repair"] = number(c.repair);
  j["effective_size"] = number(c.effective_size);
  // Observed support span of the complier CDF: where it moves off 0 and 1.
  const auto& g = c.cdf.grid();
  const auto& v = c.cdf.values();
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = lo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > 0.0 && std::isnan(lo))
      lo = g[i];
    if (v[i] < 1.0)
      hi = g[i];
  }
  j["support_span"] = { number(lo), number(hi) };
  return j;
}

} // namespace

json
number(double v)
{
  if (std::isfinite(v))
    return v;
  return nullptr;
}

Dataset
read_dataset(const std::filesystem::path& path, const std::vector<std::string>& labels, std::size_t k)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::io_error, fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::io_error, fmt::format("'{}' is empty", path.string()));
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
    line.erase(0, 3);
  const auto header = split(line, ',');
  auto column = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw Error(ErrorKind::io_error, fmt::format("'{}' has no column '{}'", path.string(), name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cy = column("y");
  const std::size_t ct = column("t");
  const std::size_t cz = column("z");

  Dataset data;
  std::vector<std::string> raw_z;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty())
      continue;
    const auto f = split(line, ',');
    if (f.size() != header.size())
      throw Error(ErrorKind::io_error, fmt::format("{}:{}: expected {} fields", path.string(), row, header.size()));
    double y = 0.0;
    std::size_t t = 0;
    if (!parse_double(f[cy], y))
      throw Error(ErrorKind::io_error, fmt::format("{}:{}: bad outcome '{}'", path.string(), row, f[cy]));
    if (!std::isfinite(y))
      throw Error(ErrorKind::non_finite, fmt::format("{}:{}: non-finite outcome", path.string(), row));
    if (!parse_index(f[ct], t))
      throw Error(ErrorKind::io_error, fmt::format("{}:{}: bad treatment '{}'", path.string(), row, f[ct]));
    data.y.push_back(y);
    data.t.push_back(t);
    raw_z.emplace_back(f[cz]);
  }

  data.labels = labels;
  if (data.labels.empty()) {
    data.labels = raw_z;
    std::sort(data.labels.begin(), data.labels.end());
    data.labels.erase(std::unique(data.labels.begin(), data.labels.end()), data.labels.end());
    const bool numeric = std::all_of(data.labels.begin(), data.labels.end(), [](const std::string& s) {
      std::size_t v;
      return parse_index(s, v);
    });
    if (numeric) {
      std::sort(data.labels.begin(), data.labels.end(), [](const std::string& a, const std::string& b) {
        return std::stoull(a) < std::stoull(b);
      });
    }
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    index[data.labels[i]] = i;
  data.z.reserve(raw_z.size());
  for (const auto& s : raw_z) {
    auto it = index.find(s);
    if (it == index.end())
      throw Error(ErrorKind::config_invalid, fmt::format("instrument value '{}' is not a declared label", s));
    data.z.push_back(it->second);
  }
  std::size_t max_t = 0;
  for (auto t : data.t)
    max_t = std::max(max_t, t);
  data.k = std::max(k, max_t);
  if (data.k == 0)
    throw Error(ErrorKind::config_invalid, "data needs at least two treatment values");
  if (max_t > data.k)
    throw Error(ErrorKind::config_invalid, fmt::format("treatment {} exceeds k = {}", max_t, data.k));
  data.validate();
  return data;
}

void
write_dataset(const std::filesystem::path& path, const Dataset& data)
{
  std::string out = "y,t,z\n";
  out.reserve(data.size() * 28);
  for (std::size_t i = 0; i < data.size(); ++i)
    out += fmt::format("{},{},{}\n", data.y[i], data.t[i], data.labels[data.z[i]]);
  write_text(path, out);
}

void
write_latent(const std::filesystem::path& path, const Dataset& data)
{
  if (!data.has_latent())
    throw Error(ErrorKind::no_latent_data, "dataset carries no latent records");
  const std::size_t nt = data.num_treatments();
  const std::size_t nz = data.num_instruments();
  std::string out;
  std::vector<std::string> cols;
  for (std::size_t t = 0; t < nt; ++t)
    cols.push_back(fmt::format("u_{}", t));
  for (std::size_t t = 0; t < nt; ++t)
    cols.push_back(fmt::format("y_{}", t));
  for (std::size_t z = 0; z < nz; ++z)
    cols.push_back(fmt::format("t_at_z{}", z));
  cols.push_back("z");
  out += fmt::format("{}\n", fmt::join(cols, ","));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.latent[i];
    out += fmt::format("{},{},{},{}\n", fmt::join(r.u, ","), fmt::join(r.y, ","), fmt::join(r.t_at, ","),
                       data.labels[data.z[i]]);
  }
  write_text(path, out);
}

DgpConfig
config_from_json(const json& j)
{
  if (!j.is_object())
    throw Error(ErrorKind::config_invalid, "config must be a JSON object");
  DgpConfig c;
  try {
    if (j.contains("preset")) {
      std::size_t k = j.value("k", std::size_t{ 2 });
      c = preset(j.at("preset").get<std::string>(), k);
    } else {
      read_field(j, "k", c.k);
    }
    read_field(j, "labels", c.labels);
    read_field(j, "assignment_probs", c.assignment_probs);
    if (j.contains("outcomes")) {
      c.outcomes.clear();
      for (const auto& o : j.at("outcomes")) {
        OutcomeModel m;
        const std::string fam = o.value("family", std::string("gaussian"));
        if (fam == "gaussian") {
          m.family = OutcomeFamily::gaussian;
          m.a = o.value("mean", 0.0);
          m.b = o.value("sd", 1.0);
        } else if (fam == "exponential") {
          m.family = OutcomeFamily::exponential;
          m.a = o.value("rate", 1.0);
          m.b = 0.0;
        } else {
          throw Error(ErrorKind::config_invalid, fmt::format("unknown outcome family '{}'", fam));
        }
        c.outcomes.push_back(m);
      }
    }
    if (j.contains("rank_mode")) {
      const auto mode = j.at("rank_mode").get<std::string>();
      if (mode == "invariance")
        c.rank_mode = RankMode::invariance;
      else if (mode == "similarity")
        c.rank_mode = RankMode::similarity;
      else
        throw Error(ErrorKind::config_invalid, fmt::format("unknown rank_mode '{}'", mode));
    }
    read_field(j, "rho", c.rho);
    read_field(j, "base_utility", c.base_utility);
    read_field(j, "loading", c.loading);
    read_field(j, "taste_scale", c.taste_scale);
    read_field(j, "discount", c.discount);
    read_field(j, "seed", c.seed);
    if (j.contains("declared")) {
      c.declared.clear();
      for (const auto& d : j.at("declared")) {
        PairMonotonicity pm;
        const auto& pair = d.at("pair");
        if (!pair.is_array() || pair.size() != 2)
          throw Error(ErrorKind::config_invalid, "declared pair must list two instrument values");
        pm.pair = { label_index(pair[0], c.labels), label_index(pair[1], c.labels) };
        for (const auto& s : d.at("directions"))
          pm.directions.push_back(parse_direction(s.get<std::string>()));
        pm.sign_treatment = sign_treatment_of(pm.directions);
        c.declared.push_back(std::move(pm));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config_invalid, e.what());
  }
  if (!j.contains("preset"))
    c.preset = "custom";
  c.validate();
  return c;
}

json
config_to_json(const DgpConfig& c)
{
  json j;
  j["preset"] = c.preset;
  j["k"] = c.k;
  j["labels"] = c.labels;
  j["assignment_probs"] = c.assignment_probs;
  json outs = json::array();
  for (const auto& o : c.outcomes) {
    if (o.family == OutcomeFamily::gaussian)
      outs.push_back({ { "family", family_name(o.family) }, { "mean", o.a }, { "sd", o.b } });
    else
      outs.push_back({ { "family", family_name(o.family) }, { "rate", o.a } });
  }
  j["outcomes"] = outs;
  j["rank_mode"] = c.rank_mode == RankMode::invariance ? "invariance" : "similarity";
  j["rho"] = c.rho;
  j["base_utility"] = c.base_utility;
  j["loading"] = c.loading;
  j["taste_scale"] = c.taste_scale;
  j["discount"] = c.discount;
  json decl = json::array();
  for (const auto& pm : c.declared) {
    json dirs = json::array();
    for (auto d : pm.directions)
      dirs.push_back(to_string(d));
    decl.push_back({ { "pair", { c.labels[pm.pair.first], c.labels[pm.pair.second] } }, { "directions", dirs } });
  }
  j["declared"] = decl;
  return j;
}

json
read_json(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::io_error, fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config_invalid, fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void
write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::io_error, fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out)
    throw Error(ErrorKind::io_error, fmt::format("write to '{}' failed", path.string()));
}

void
write_json(const std::filesystem::path& path, const json& j)
{
  write_text(path, j.dump(2) + "\n");
}

std::uint64_t
fnv1a(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string
hash_hex(const json& j)
{
  return fmt::format("fnv1a64:{:016x}", fnv1a(j.dump()));
}

std::vector<InstrumentPair>
parse_pairs(const std::string& text, const std::vector<std::string>& labels)
{
  std::vector<InstrumentPair> out;
  auto find = [&](std::string_view s) {
    auto it = std::find(labels.begin(), labels.end(), s);
    if (it == labels.end())
      throw Error(ErrorKind::config_invalid, fmt::format("unknown instrument value '{}' in pair list", s));
    return static_cast<std::size_t>(it - labels.begin());
  };
  for (auto item : split(text, ',')) {
    if (item.empty())
      continue;
    auto parts = split(item, ':');
    if (parts.size() != 2)
      throw Error(ErrorKind::config_invalid, fmt::format("pair '{}' is not of the form a:b", item));
    InstrumentPair p{ find(parts[0]), find(parts[1]) };
    if (p.first == p.second)
      throw Error(ErrorKind::config_invalid, fmt::format("pair '{}' repeats an instrument value", item));
    out.push_back(p);
  }
  if (out.empty())
    throw Error(ErrorKind::config_invalid, "empty pair list");
  return out;
}

std::vector<double>
parse_tau_grid(const std::string& text)
{
  std::vector<double> out;
  auto parts = split(text, ':');
  if (parts.size() == 3) {
    double lo = 0.0, hi = 0.0, step = 0.0;
    if (!parse_double(parts[0], lo) || !parse_double(parts[1], hi) || !parse_double(parts[2], step) ||
        !(step > 0.0) || !(hi >= lo))
      throw Error(ErrorKind::config_invalid, fmt::format("bad tau range '{}'", text));
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i)
      out.push_back(lo + static_cast<double>(i) * step);
  } else {
    for (auto s : split(text, ',')) {
      double v = 0.0;
      if (!parse_double(s, v))
        throw Error(ErrorKind::config_invalid, fmt::format("bad tau value '{}'", s));
      out.push_back(v);
    }
  }
  if (out.empty())
    throw Error(ErrorKind::config_invalid, "empty tau grid");
  for (double v : out) {
    if (!(v > 0.0 && v < 1.0))
      throw Error(ErrorKind::tau_out_of_range, fmt::format("tau = {} is outside (0, 1)", v));
  }
  return out;
}

json
options_to_json(const EstimateOptions& o, const std::vector<std::string>& labels)
{
  json j;
  j["trim_fraction"] = o.trim_fraction;
  j["eta"] = o.eta;
  j["grid_nodes"] = o.grid_nodes;
  j["tau_grid"] = o.tau_grid;
  json pairs = json::array();
  for (const auto& p : o.pairs)
    pairs.push_back(fmt::format("{}:{}", labels.at(p.first), labels.at(p.second)));
  j["pairs"] = pairs;
  j["dkw_delta"] = o.dkw_delta;
  return j;
}

json
propensity_to_json(const PropensityMatrix& p)
{
  json j;
  j["p"] = p.p;
  j["n_z"] = p.n_z;
  return j;
}

json
detections_to_json(const std::vector<SignDetection>& detections, const std::vector<std::string>& labels)
{
  json out = json::array();
  for (const auto& d : detections) {
    json j;
    j["pair"] = { labels.at(d.pair.first), labels.at(d.pair.second) };
    j["status"] = to_string(d.status);
    j["sign_treatment"] = d.status == SignStatus::found ? json(d.treatment) : json(nullptr);
    j["differences"] = d.differences;
    j["thresholds"] = d.thresholds;
    json dirs = json::array();
    for (auto x : d.directions)
      dirs.push_back(to_string(x));
    j["directions"] = dirs;
    j["score"] = number(d.score);
    out.push_back(std::move(j));
  }
  return out;
}

json
identification_to_json(const Identification& id, const CellTables& tables)
{
  json j;
  j["labels"] = tables.labels;
  j["k"] = tables.k;
  j["propensity"] = propensity_to_json(tables.propensity);
  j["sign_treatments"] = detections_to_json(id.detections, tables.labels);
  json a3;
  a3["satisfied"] = id.assumption3.satisfied;
  a3["reason"] = id.assumption3.reason;
  json ls = json::array();
  for (auto i : id.assumption3.lambda_star) {
    const auto& d = id.detections.at(i);
    ls.push_back({ { "pair", { tables.labels[d.pair.first], tables.labels[d.pair.second] } },
                   { "sign_treatment", d.treatment } });
  }
  a3["lambda_star"] = ls;
  j["assumption3"] = a3;

  if (id.failure) {
    j["failure"] = { { "kind", std::string(to_string(*id.failure)) }, { "message", id.failure_message } };
  } else {
    j["failure"] = nullptr;
  }

  if (id.system) {
    const auto& sys = *id.system;
    json eqs = json::array();
    for (std::size_t m = 1; m <= sys.k; ++m) {
      json e;
      e["sign_treatment"] = sys.original[m];
      e["toward"] = tables.labels[sys.oriented[m - 1].first];
      e["away"] = tables.labels[sys.oriented[m - 1].second];
      e["own"] = complier_summary(sys.own[m - 1], tables);
      json others = json::array();
      for (const auto& c : sys.others[m - 1]) {
        if (c)
          others.push_back(complier_summary(*c, tables));
      }
      e["others"] = others;
      e["balance"] = number(sys.balance[m - 1]);
      eqs.push_back(std::move(e));
    }
    j["complier_tables"] = eqs;
    j["anchor_treatment"] = sys.anchor();
  }

  if (id.maps) {
    const auto& maps = *id.maps;
    json ms = json::array();
    for (Treatment s = 0; s < maps.maps.size(); ++s) {
      for (Treatment t = 0; t < maps.maps.size(); ++t)
        ms.push_back(map_summary(maps(s, t)));
    }
    j["maps"] = { { "summaries", ms },
                  { "repaired", maps.repaired },
                  { "dropped_nodes", maps.dropped_nodes },
                  { "uncertified", maps.uncertified } };
    std::size_t saturated = 0;
    std::size_t flat = 0;
    for (const auto& s : maps.solutions) {
      saturated += s.saturated;
      flat += s.flat;
    }
    j["flags"] = { { "Saturated", saturated }, { "FlatRegion", flat } };
  }

  if (!id.qte.empty()) {
    json q = json::array();
    for (const auto& c : id.qte) {
      json vals = json::array();
      for (double v : c.value)
        vals.push_back(number(v));
      q.push_back({ { "s", c.s }, { "t", c.t }, { "tau", c.tau }, { "value", vals } });
    }
    j["qte"] = q;
  }
  if (!id.z_gap.empty())
    j["z_invariance_gap"] = id.z_gap;
  if (!id.moment_check.empty()) {
    json mc = json::array();
    for (double v : id.moment_check)
      mc.push_back(number(v));
    j["moment_residual_max"] = mc;
  }
  j["warnings"] = id.warnings;
  return j;
}

json
estimate_to_json(const Estimate& est, const EstimateOptions& options)
{
  json j;
  j["schema_version"] = schema_version;
  j["command"] = "estimate";
  j["options"] = options_to_json(options, est.tables.labels);
  j["observations"] = est.tables.propensity.n_z;
  j["identification"] = identification_to_json(est.id, est.tables);
  if (est.id.failure)
    return j;

  json effects;
  json means = json::array();
  for (Treatment s = 0; s < est.means.size(); ++s) {
    means.push_back({ { "treatment", s },
                      { "mean", number(est.means[s].value) },
                      { "standard_error", number(est.means[s].standard_error) },
                      { "clamped", est.means[s].clamped } });
  }
  effects["potential_means"] = means;
  json ate = json::object();
  for (Treatment s = 0; s < est.ate.size(); ++s) {
    for (Treatment t = 0; t < est.ate.size(); ++t) {
      if (s != t)
        ate[fmt::format("ate_{}_{}", s, t)] = number(est.ate[s][t]);
    }
  }
  effects["ate"] = ate;
  json local = json::array();
  for (const auto& le : est.local) {
    json m = json::array();
    for (const auto& x : le.means)
      m.push_back({ { "mean", number(x.value) }, { "standard_error", number(x.standard_error) } });
    json lq = json::array();
    for (double v : le.lqte)
      lq.push_back(number(v));
    local.push_back({ { "group", le.label },
                      { "sign_treatment", le.group.sign },
                      { "own_treatment", le.group.own },
                      { "probability", number(le.group.table.probability) },
                      { "local_means", m },
                      { "late", number(le.late) },
                      { "tau", options.tau_grid },
                      { "lqte", lq } });
  }
  effects["local"] = local;
  j["effects"] = effects;
  return j;
}

std::string
maps_csv(const MapFamily& maps)
{
  std::string out = "s,t,y,phi\n";
  for (Treatment s = 0; s < maps.maps.size(); ++s) {
    for (Treatment t = 0; t < maps.maps.size(); ++t) {
      const auto& m = maps(s, t);
      for (std::size_t i = 0; i < m.size(); ++i)
        out += fmt::format("{},{},{},{}\n", s, t, m.grid()[i], m.images()[i]);
    }
  }
  return out;
}

std::string
qte_csv(const std::vector<QteCurve>& curves)
{
  std::string out = "s,t,tau,qte\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.tau.size(); ++i)
      out += fmt::format("{},{},{},{}\n", c.s, c.t, c.tau[i], std::isfinite(c.value[i]) ? fmt_double(c.value[i]) : "");
  }
  return out;
}

} // namespace ivmono::io
