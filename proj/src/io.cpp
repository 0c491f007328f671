#include "pfode/io.hpp"

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace pfode {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(join(path, it.key()), "unknown field");
  }
}

const Json& field(const Json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

long long as_integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

double number_or(const Json& j, const std::string& path, const char* key, double fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_number(*it, join(path, key));
}

Vector as_vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], index_path(path, i));
  return v;
}

std::vector<double> as_doubles(const Json& j, const std::string& path) {
  const Vector v = as_vector(j, path);
  return {v.data(), v.data() + v.size()};
}

// Domain errors raised while building a value are reported at `path`.
template <class F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path.empty() ? "<root>" : path, e.what());
  }
}

std::string_view to_string(CurvatureSource s) { return s == CurvatureSource::Cached ? "cached" : "lookahead"; }

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

Json to_json(const GaussianMixture& gm) {
  Json comps = Json::array();
  for (const auto& c : gm.components()) {
    Json cov = Json::array();
    for (Eigen::Index r = 0; r < c.cov.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index k = 0; k < c.cov.cols(); ++k) row.push_back(c.cov(r, k));
      cov.push_back(row);
    }
    comps.push_back({{"weight", c.weight}, {"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                     {"cov", cov}});
  }
  return {{"dim", gm.dim()}, {"components", comps}};
}

GaussianMixture mixture_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"dim", "components", "schema_version", "name"});
  const long long dim = as_integer(field(j, path, "dim"), join(path, "dim"));
  if (dim < 1) throw ConfigError(join(path, "dim"), "must be >= 1");
  const std::string cpath = join(path, "components");
  const Json& comps = field(j, path, "components");
  if (!comps.is_array() || comps.empty()) throw ConfigError(cpath, "expected a non-empty array");
  std::vector<GaussianComponent> out;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string ip = index_path(cpath, i);
    const Json& c = comps[i];
    require_object(c, ip);
    reject_unknown(c, ip, {"weight", "mean", "cov"});
    GaussianComponent g;
    g.weight = as_number(field(c, ip, "weight"), join(ip, "weight"));
    g.mean = as_vector(field(c, ip, "mean"), join(ip, "mean"));
    if (g.mean.size() != dim) throw ConfigError(join(ip, "mean"), "length does not match dim");
    const Json& cov = field(c, ip, "cov");
    const std::string covp = join(ip, "cov");
    if (!cov.is_array() || static_cast<long long>(cov.size()) != dim)
      throw ConfigError(covp, "expected a dim x dim array");
    g.cov.resize(dim, dim);
    for (std::size_t r = 0; r < cov.size(); ++r) {
      const Vector row = as_vector(cov[r], index_path(covp, r));
      if (row.size() != dim) throw ConfigError(index_path(covp, r), "row length does not match dim");
      g.cov.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    out.push_back(std::move(g));
  }
  return at_path(join(path, "components"), [&] { return GaussianMixture(std::move(out)); });
}

Json to_json(const Parameterization& p) {
  Json j = {{"kind", std::string(to_string(p.kind()))}, {"sigma_min", p.sigma_min()}, {"sigma_max", p.sigma_max()}};
  if (p.kind() == Kind::VP) {
    j["beta_d"] = p.beta_d();
    j["beta_min"] = p.beta_min();
  }
  return j;
}

Parameterization parameterization_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) {
    return at_path(path, [&] { return Parameterization(kind_from_string(j.get<std::string>())); });
  }
  require_object(j, path);
  reject_unknown(j, path, {"kind", "sigma_min", "sigma_max", "beta_d", "beta_min"});
  const std::string kind = as_string(field(j, path, "kind"), join(path, "kind"));
  const Kind k = at_path(join(path, "kind"), [&] { return kind_from_string(kind); });
  const double smin = number_or(j, path, "sigma_min", Parameterization::kDefaultSigmaMin);
  const double smax = number_or(j, path, "sigma_max", Parameterization::kDefaultSigmaMax);
  const double bd = number_or(j, path, "beta_d", Parameterization::kDefaultBetaD);
  const double bm = number_or(j, path, "beta_min", Parameterization::kDefaultBetaMin);
  return at_path(path, [&] { return Parameterization(k, smin, smax, bd, bm); });
}

Json to_json(const EtaSchedule& eta) { return {{"min", eta.eta_min}, {"max", eta.eta_max}, {"p", eta.p}}; }

EtaSchedule eta_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"min", "max", "p"});
  EtaSchedule e;
  e.eta_min = number_or(j, path, "min", e.eta_min);
  e.eta_max = number_or(j, path, "max", e.eta_max);
  e.p = number_or(j, path, "p", e.p);
  at_path(path, [&] {
    e.validate();
    return 0;
  });
  return e;
}

Json to_json(const SolverPolicy& policy) {
  Json j = {{"lambda", std::string(to_string(policy.lambda))}};
  if (policy.lambda == LambdaKind::Step) {
    j["tau_k"] = policy.tau_k;
    j["curvature_source"] = std::string(to_string(policy.curvature_source));
  }
  return j;
}

SolverPolicy policy_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"lambda", "tau_k", "curvature_source"});
  SolverPolicy p;
  const std::string name = as_string(field(j, path, "lambda"), join(path, "lambda"));
  p.lambda = at_path(join(path, "lambda"), [&] { return lambda_kind_from_string(name); });
  p.tau_k = number_or(j, path, "tau_k", 0.0);
  if (const auto it = j.find("curvature_source"); it != j.end()) {
    const std::string src = as_string(*it, join(path, "curvature_source"));
    if (src == "cached") p.curvature_source = CurvatureSource::Cached;
    else if (src == "lookahead") p.curvature_source = CurvatureSource::Lookahead;
    else throw ConfigError(join(path, "curvature_source"), "expected \"cached\" or \"lookahead\"");
  }
  at_path(path, [&] {
    p.validate();
    return 0;
  });
  return p;
}

namespace {

Json to_json(const std::optional<ResampleSpec>& r) {
  if (!r) return nullptr;
  return {{"q", r->q}, {"N", r->n}};
}

std::optional<ResampleSpec> resample_from_json(const Json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  require_object(j, path);
  reject_unknown(j, path, {"q", "N"});
  ResampleSpec r;
  r.q = number_or(j, path, "q", r.q);
  if (const auto it = j.find("N"); it != j.end()) r.n = static_cast<int>(as_integer(*it, join(path, "N")));
  if (!(r.q >= 0.0)) throw ConfigError(join(path, "q"), "must be >= 0");
  if (r.n < 1) throw ConfigError(join(path, "N"), "must be >= 1");
  return r;
}

}  // namespace

Json to_json(const ScheduleFile& f) {
  Json per_step = Json::array();
  for (const auto& m : f.schedule.per_step)
    per_step.push_back({{"eta_used", m.eta_used}, {"s_hat", m.s_hat}, {"linesearch_iters", m.linesearch_iters}});
  return {{"schema_version", kSchemaVersion},
          {"parameterization", to_json(f.parameterization)},
          {"eta", to_json(f.eta)},
          {"resample", to_json(f.resample)},
          {"times", f.schedule.times},
          {"sigmas", f.schedule.sigmas},
          {"per_step", per_step},
          {"total_nfe", f.schedule.total_nfe}};
}

ScheduleFile schedule_from_json(const Json& j) {
  require_object(j, "");
  reject_unknown(j, "", {"schema_version", "parameterization", "eta", "resample", "times", "sigmas", "per_step",
                         "total_nfe"});
  if (const auto it = j.find("schema_version"); it != j.end() && as_integer(*it, "schema_version") != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version");
  ScheduleFile f;
  f.parameterization = parameterization_from_json(field(j, "", "parameterization"));
  if (const auto it = j.find("eta"); it != j.end()) f.eta = eta_from_json(*it);
  if (const auto it = j.find("resample"); it != j.end()) f.resample = resample_from_json(*it, "resample");
  f.schedule.times = as_doubles(field(j, "", "times"), "times");
  f.schedule.sigmas = as_doubles(field(j, "", "sigmas"), "sigmas");
  if (const auto it = j.find("per_step"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("per_step", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string ip = index_path("per_step", i);
      const Json& m = (*it)[i];
      require_object(m, ip);
      reject_unknown(m, ip, {"eta_used", "s_hat", "linesearch_iters"});
      StepMeta meta;
      meta.eta_used = as_number(field(m, ip, "eta_used"), join(ip, "eta_used"));
      meta.s_hat = as_number(field(m, ip, "s_hat"), join(ip, "s_hat"));
      meta.linesearch_iters = static_cast<int>(as_integer(field(m, ip, "linesearch_iters"), join(ip, "linesearch_iters")));
      f.schedule.per_step.push_back(meta);
    }
  }
  if (const auto it = j.find("total_nfe"); it != j.end()) f.schedule.total_nfe = as_integer(*it, "total_nfe");
  at_path("times", [&] {
    f.schedule.validate();
    return 0;
  });
  return f;
}

Json to_json(const ExperimentConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"mixture", c.mixture},
          {"parameterization", to_json(c.parameterization)},
          {"policy", to_json(c.policy)},
          {"eta", to_json(c.eta)},
          {"resample", to_json(c.resample)},
          {"samples", c.samples},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

ExperimentConfig config_from_json(const Json& j) {
  require_object(j, "");
  reject_unknown(j, "", {"schema_version", "mixture", "parameterization", "policy", "eta", "resample", "samples",
                         "seed", "output_dir"});
  if (const auto it = j.find("schema_version"); it != j.end() && as_integer(*it, "schema_version") != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version");
  ExperimentConfig c;
  c.mixture = as_string(field(j, "", "mixture"), "mixture");
  c.parameterization = parameterization_from_json(field(j, "", "parameterization"));
  if (const auto it = j.find("policy"); it != j.end()) c.policy = policy_from_json(*it);
  if (const auto it = j.find("eta"); it != j.end()) c.eta = eta_from_json(*it);
  if (const auto it = j.find("resample"); it != j.end()) c.resample = resample_from_json(*it, "resample");
  if (const auto it = j.find("samples"); it != j.end()) {
    const long long n = as_integer(*it, "samples");
    if (n < 0 || n > 10'000'000) throw ConfigError("samples", "must be in [0, 1e7]");
    c.samples = static_cast<int>(n);
  }
  if (const auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
      throw ConfigError("seed", "expected a non-negative integer");
    c.seed = it->get<std::uint64_t>();
  }
  if (const auto it = j.find("output_dir"); it != j.end()) c.output_dir = as_string(*it, "output_dir");
  return c;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), std::string("parse error: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Model load_model(const std::string& source, const std::filesystem::path& base_dir) {
  Model m;
  if (source.rfind("preset:", 0) == 0) {
    const std::string name = source.substr(7);
    auto gm = std::make_unique<GaussianMixture>(at_path("mixture", [&] { return make_preset(name); }));
    m.mixture = gm.get();
    m.denoiser = std::move(gm);
    return m;
  }
  if (source.rfind("constant:", 0) == 0) {
    std::vector<double> vals;
    std::stringstream ss(source.substr(9));
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size())
        throw ConfigError("mixture", "bad constant-velocity component '" + item + "'");
      vals.push_back(v);
    }
    if (vals.empty()) throw ConfigError("mixture", "constant velocity needs at least one component");
    m.denoiser = std::make_unique<ConstantVelocityField>(Eigen::Map<const Vector>(vals.data(), vals.size()));
    return m;
  }
  std::filesystem::path file(source);
  if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
  auto gm = std::make_unique<GaussianMixture>(mixture_from_json(read_json(file), ""));
  m.mixture = gm.get();
  m.denoiser = std::move(gm);
  return m;
}

}  // namespace pfode
