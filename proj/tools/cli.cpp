#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <sstream>

#include "rectflow/acceptance.hpp"
#include "rectflow/burgers.hpp"
#include "rectflow/errors.hpp"
#include "rectflow/measure.hpp"
#include "rectflow/moment_flow.hpp"
#include "rectflow/mp_analytic.hpp"
#include "rectflow/numeric.hpp"
#include "rectflow/path_io.hpp"
#include "rectflow/rect_free.hpp"
#include "rectflow/replicas.hpp"
#include "rectflow/wishart_sim.hpp"

namespace rectflow::cli {

namespace {

using json = nlohmann::ordered_json;

std::string render(double v) { return fmt::format("{:.17g}", v); }
std::string render(int v) { return fmt::format("{}", v); }
std::string render(std::size_t v) { return fmt::format("{}", v); }
std::string render(const std::string& v) { return v; }

// Registers options and remembers how to print their resolved values as key=value lines.
class Recorder {
 public:
  explicit Recorder(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
    entries_.emplace_back(name, [&var] { return render(var); });
    return app_->add_option("--" + name, var, desc)->capture_default_str();
  }

  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    for (const auto& [k, f] : entries_) out.push_back(k + "=" + f());
    return out;
  }
  json as_json() const {
    json j = json::object();
    for (const auto& [k, f] : entries_) j[k] = f();
    return j;
  }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> entries_;
};

// Embeds the command, library version and resolved config into every output.
struct Provenance {
  std::string command;
  const Recorder* rec;

  json header() const { return json{{"command", command}, {"version", RECTFLOW_VERSION}, {"config", rec->as_json()}}; }
  std::vector<std::string> comments() const {
    std::vector<std::string> c{fmt::format("rect-flow {} version {}", command, RECTFLOW_VERSION)};
    for (const auto& l : rec->lines()) c.push_back("config " + l);
    return c;
  }
  std::string trailer() const {
    std::string t;
    for (const auto& l : comments()) t += l + "\n";
    return t;
  }
};

// The file itself stays reproducible; the wall-clock time goes to a sidecar.
void write_output(const std::string& path, const std::string& text) {
  write_text_file(path, text);
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  json meta{{"file", path}, {"created_utc", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now))},
            {"threads", thread_budget()}};
  write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

void emit_summary(const json& summary, const std::string& path, std::ostream& out) {
  const std::string text = summary.dump(2) + "\n";
  if (!path.empty()) write_output(path, text);
  out << text;
}

int gate(json& summary, double metric, double tolerance) {
  if (!(tolerance > 0.0)) return 0;
  summary["tolerance"] = tolerance;
  summary["passed"] = metric <= tolerance;
  return metric <= tolerance ? 0 : 1;
}

// Measure specs: delta0, const:c, mp:sigma, file:path (or a bare path).
struct MeasureSpec {
  enum class Kind { delta0, constant, mp, file } kind = Kind::delta0;
  double value = 0.0;
  std::string path;
};

MeasureSpec parse_spec(const std::string& s) {
  MeasureSpec m;
  if (s == "delta0") return m;
  auto colon = s.find(':');
  std::string head = colon == std::string::npos ? "" : s.substr(0, colon);
  std::string rest = colon == std::string::npos ? s : s.substr(colon + 1);
  if (head == "const") {
    m.kind = MeasureSpec::Kind::constant;
    m.value = parse_double(rest, "const:c");
    if (!(m.value >= 0.0)) throw DomainError("invalid_initial_condition", "const:c needs c >= 0");
  } else if (head == "mp") {
    m.kind = MeasureSpec::Kind::mp;
    m.value = parse_double(rest, "mp:sigma");
    if (!(m.value > 0.0)) throw DomainError("invalid_parameters", "mp:sigma needs sigma > 0");
  } else {
    m.kind = MeasureSpec::Kind::file;
    m.path = head == "file" ? rest : s;
    if (m.path.empty()) throw DomainError("parse_error", "empty measure file path");
  }
  return m;
}

DiscreteMeasure half_line_file(const std::string& path) {
  auto mu = read_measure_file(path);
  if (!mu.on_half_line()) throw DomainError("invalid_measure", fmt::format("'{}' has atoms below 0", path));
  return mu;
}

// m^1..m^K of the eigenvalue law named by spec; mp uses the given shape.
MomentVector spec_moments(const std::string& spec, std::size_t K, double shape) {
  auto m = parse_spec(spec);
  switch (m.kind) {
    case MeasureSpec::Kind::delta0:
      return MomentVector(std::vector<double>(K, 0.0));
    case MeasureSpec::Kind::constant: {
      std::vector<double> v(K);
      for (std::size_t k = 0; k < K; ++k) v[k] = std::pow(m.value, static_cast<double>(k + 1));
      return MomentVector(std::move(v));
    }
    case MeasureSpec::Kind::mp:
      return mp_moments(MPParams(shape, m.value), K);
    case MeasureSpec::Kind::file:
      break;
  }
  return moments(half_line_file(m.path), K);
}

double mp_quantile(const MPParams& p, double u) {
  double lo = p.a_minus(), hi = p.a_plus();
  for (int i = 0; i < 80; ++i) {
    double mid = 0.5 * (lo + hi);
    (mp_cdf(p, mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// n initial eigenvalues: mid-quantiles (i + 1/2)/n of the law named by spec.
std::vector<double> initial_values(const std::string& spec, int n, double shape) {
  auto m = parse_spec(spec);
  const auto N = static_cast<std::size_t>(n);
  std::vector<double> out(N, 0.0);
  auto u = [N](std::size_t i) { return (static_cast<double>(i) + 0.5) / static_cast<double>(N); };
  switch (m.kind) {
    case MeasureSpec::Kind::delta0:
      break;
    case MeasureSpec::Kind::constant:
      std::fill(out.begin(), out.end(), m.value);
      break;
    case MeasureSpec::Kind::mp: {
      MPParams p(shape, m.value);
      for (std::size_t i = 0; i < N; ++i) out[i] = mp_quantile(p, u(i));
      break;
    }
    case MeasureSpec::Kind::file: {
      auto mu = half_line_file(m.path);
      std::vector<double> cum;
      double acc = 0.0;
      for (double w : mu.weights()) cum.push_back(acc += w);
      for (std::size_t i = 0; i < N; ++i) {
        auto it = std::lower_bound(cum.begin(), cum.end(), u(i));
        out[i] = mu.atoms()[std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), mu.size() - 1)];
      }
      break;
    }
  }
  return out;
}

std::vector<double> to_vector(const MomentVector& m) { return m.entries(); }

struct ModelOpts {
  int n = 300, m = 600;
  double beta1 = 1.0, beta2 = 1.0, kappa = 1.0, gamma = 1.0;
  std::string field = "real";

  void add(Recorder& r) {
    r.add("n", n, "number of rows (eigenvalues)");
    r.add("m", m, "number of columns");
    r.add("beta1", beta1, "beta1 > 0");
    r.add("beta2", beta2, "beta2 > 0");
    r.add("kappa", kappa, "noise strength kappa >= 0");
    r.add("gamma", gamma, "mean reversion gamma >= 0");
    r.add("field", field, "real or complex")->check(CLI::IsMember({"real", "complex"}));
  }
  WishartParams params() const {
    WishartParams w;
    w.n = n;
    w.m = m;
    w.beta1 = beta1;
    w.beta2 = beta2;
    w.kappa = kappa;
    w.gamma = gamma;
    w.field = field_from_string(field);
    return w;
  }
};

struct FlowOpts {
  double alpha = 0.5, beta1 = 1.0, beta2 = 1.0, kappa = 1.0, gamma = 1.0;
  std::string field = "real";

  void add(Recorder& r) {
    r.add("alpha", alpha, "rectangular ratio n/m in (0,1]");
    r.add("beta1", beta1, "beta1 > 0");
    r.add("beta2", beta2, "beta2 > 0");
    r.add("kappa", kappa, "noise strength kappa >= 0");
    r.add("gamma", gamma, "mean reversion gamma >= 0");
    r.add("field", field, "real or complex")->check(CLI::IsMember({"real", "complex"}));
  }
  FlowParams params() const {
    FlowParams p{alpha, field_from_string(field) == Field::complex ? 2.0 * beta1 : beta1, beta2, kappa, gamma};
    p.validate();
    p.require_limit_regime();
    return p;
  }
};

struct PathOpts {
  ModelOpts model;
  std::size_t seed = 0;
  std::size_t replicas = 1;
  std::size_t K = 6;
  double T = 1.0, dt = 0.0, record_every = 0.0, jitter_width = 1e-6, tolerance = 0.0;
  std::string init = "delta0", compare = "none", jitter = "auto", out, format = "csv";
};

json summary_stats(const ReplicaSummary& s, std::size_t from, std::size_t count) {
  std::vector<double> mean(s.mean.begin() + static_cast<std::ptrdiff_t>(from),
                           s.mean.begin() + static_cast<std::ptrdiff_t>(from + count));
  json se = json::array();
  for (std::size_t i = from; i < from + count; ++i)
    se.push_back(s.has_std_error() ? json(s.std_error[i]) : json(nullptr));
  return json{{"mean", mean}, {"std_error", se}};
}

using PathFn = std::function<EigenPath(std::size_t replica, std::uint64_t seed)>;

// Shared by simulate and oracle: replicas, comparison, path and summary files.
int run_paths(const PathOpts& o, const Provenance& prov, const PathFn& make, std::ostream& out) {
  const auto w = o.model.params();
  w.require_well_posed();
  const auto fp = FlowParams::from(w);
  if (o.replicas < 1) throw DomainError("invalid_replica", "replicas must be at least 1");
  if (o.K < 1) throw DomainError("moment_order", "K must be at least 1");

  std::optional<MPParams> reference;
  std::optional<FlowPrediction> prediction;
  if (o.compare == "mp") {
    reference.emplace(fp.shape(), std::sqrt(sigma_t2(fp, o.T)));
  } else if (o.compare == "stationary") {
    reference.emplace(fp.shape(), std::sqrt(fp.sigma_inf2()));
  } else if (o.compare == "predict") {
    auto init = initial_values(o.init, w.n, fp.shape());
    prediction = predict_mu_t(moments(DiscreteMeasure::empirical(init), o.K), fp, o.T);
  }

  std::optional<EigenPath> first;
  std::mutex first_mutex;
  auto summary = replicas(
      [&](std::size_t r, std::uint64_t seed) {
        auto path = make(r, seed);
        auto obs = to_vector(moments(DiscreteMeasure::empirical(path.final_state()), o.K));
        if (reference) {
          const MPParams& ref = *reference;
          obs.push_back(ks_distance(DiscreteMeasure::empirical(path.final_state()),
                                    [&ref](double x) { return mp_cdf(ref, x); }));
        }
        if (r == 0) {
          std::lock_guard lock(first_mutex);
          first = std::move(path);
        }
        return obs;
      },
      o.replicas, o.seed);

  json s = prov.header();
  s["n"] = w.n;
  s["replicas"] = o.replicas;
  s["final_time"] = o.T;
  s["scheme"] = first->scheme;
  s["substeps"] = first->substeps;
  s["bridge_refinements"] = first->bridge_refinements;
  s["min_substep"] = first->min_substep;
  s["moments"] = summary_stats(summary, 0, o.K);
  int code = 0;
  if (reference) {
    std::vector<double> ks;
    for (const auto& row : summary.samples) ks.push_back(row[o.K]);
    const double worst = *std::max_element(ks.begin(), ks.end());
    s["compare"] = json{{"reference", o.compare},
                        {"shape", reference->rho()},
                        {"sigma2", reference->sigma2()},
                        {"ks", summary.mean[o.K]},
                        {"ks_max", worst},
                        {"ks_replicas", ks}};
    code = gate(s, worst, o.tolerance);
  } else if (prediction) {
    double worst = 0.0;
    std::vector<double> rel;
    for (std::size_t k = 1; k <= o.K; ++k) {
      double p = prediction->nu(k);
      rel.push_back(std::abs(summary.mean[k - 1] - p) / std::max(std::abs(p), 1e-300));
      worst = std::max(worst, rel.back());
    }
    s["compare"] = json{{"reference", "predict"},
                        {"sigma_t2", prediction->sigma_t2},
                        {"moments", to_vector(prediction->nu)},
                        {"relative_error", rel},
                        {"max_relative_error", worst}};
    code = gate(s, worst, o.tolerance);
  }

  if (!o.out.empty()) {
    if (o.format == "csv" || o.format == "both") write_output(o.out + ".csv", path_to_csv(*first, prov.comments()));
    if (o.format == "binary" || o.format == "both") write_output(o.out + ".bin", path_to_binary(*first, prov.trailer()));
  }
  emit_summary(s, o.out.empty() ? "" : o.out + ".summary.json", out);
  return code;
}

void add_path_options(Recorder& r, PathOpts& o, bool scheme) {
  o.model.add(r);
  r.add("seed", o.seed, "base seed (required)")->required();
  r.add("replicas", o.replicas, "independent replicas; replica r uses stream r");
  r.add("T", o.T, "final time");
  r.add("record-every", o.record_every, "recording interval; 0 records t = 0 and T only");
  r.add("init", o.init, "initial eigenvalue law: delta0, const:c, mp:sigma, file:path");
  r.add("K", o.K, "moments reported");
  r.add("compare", o.compare, "none, mp (MP at sigma_T, delta0 start), stationary, predict")
      ->check(CLI::IsMember({"none", "mp", "stationary", "predict"}));
  r.add("tolerance", o.tolerance, "exit 1 when the comparison metric exceeds this (0 disables)");
  r.add("out", o.out, "output prefix for <out>.csv/.bin/.summary.json");
  r.add("format", o.format, "csv, binary or both")->check(CLI::IsMember({"csv", "binary", "both"}));
  if (scheme) {
    r.add("dt", o.dt, "largest substep; 0 selects the default");
    r.add("jitter", o.jitter, "spread coincident initial values: auto (when kappa > 0), on, off")
        ->check(CLI::IsMember({"auto", "on", "off"}));
    r.add("jitter-width", o.jitter_width, "width of the initial micro-fan");
  }
}

int cmd_simulate(const PathOpts& o, const Provenance& prov, std::ostream& out) {
  const auto w = o.model.params();
  w.require_well_posed();
  const auto init = initial_values(o.init, w.n, FlowParams::from(w).shape());
  SchemeOptions so;
  so.dt = o.dt;
  so.T = o.T;
  so.record_every = o.record_every;
  so.jitter = o.jitter == "on" || (o.jitter == "auto" && w.kappa > 0.0);
  so.jitter_width = o.jitter_width;
  return run_paths(o, prov, [&](std::size_t r, std::uint64_t seed) { return simulate_eigen(w, init, so, seed, r); }, out);
}

int cmd_oracle(const PathOpts& o, const Provenance& prov, std::ostream& out) {
  const auto w = o.model.params();
  w.require_well_posed();
  const auto init = initial_values(o.init, w.n, FlowParams::from(w).shape());
  if (!(o.T > 0.0)) throw DomainError("invalid_parameters", "T must be positive");
  std::vector<double> times{0.0};
  if (o.record_every > 0.0)
    for (std::size_t i = 1; static_cast<double>(i) * o.record_every < o.T * (1.0 - 1e-12); ++i)
      times.push_back(static_cast<double>(i) * o.record_every);
  times.push_back(o.T);
  return run_paths(o, prov, [&](std::size_t r, std::uint64_t seed) { return simulate_matrix_oracle(w, init, times, seed, r); },
                   out);
}

struct StationaryOpts {
  ModelOpts model;
  std::size_t seed = 0, replicas = 1, K = 6;
  double tolerance = 0.0;
  std::string out;
};

int cmd_stationary(const StationaryOpts& o, const Provenance& prov, std::ostream& out) {
  const auto w = o.model.params();
  w.require_well_posed();
  const auto fp = FlowParams::from(w);
  if (o.replicas < 1) throw DomainError("invalid_replica", "replicas must be at least 1");
  const MPParams ref(fp.shape(), std::sqrt(fp.sigma_inf2()));
  std::vector<double> first;
  std::mutex first_mutex;
  auto summary = replicas(
      [&](std::size_t r, std::uint64_t seed) {
        auto ev = sample_stationary(w.n, w.m, ref.sigma(), w.field, seed, r);
        auto mu = DiscreteMeasure::empirical(ev);
        auto obs = to_vector(moments(mu, o.K));
        obs.push_back(ks_distance(mu, [&ref](double x) { return mp_cdf(ref, x); }));
        if (r == 0) {
          std::lock_guard lock(first_mutex);
          first = std::move(ev);
        }
        return obs;
      },
      o.replicas, o.seed);
  json s = prov.header();
  s["sigma_inf2"] = ref.sigma2();
  s["shape"] = ref.rho();
  s["moments"] = summary_stats(summary, 0, o.K);
  std::vector<double> ks;
  for (const auto& row : summary.samples) ks.push_back(row[o.K]);
  const double worst = *std::max_element(ks.begin(), ks.end());
  s["ks"] = summary.mean[o.K];
  s["ks_max"] = worst;
  int code = gate(s, worst, o.tolerance);
  if (!o.out.empty()) {
    std::string csv;
    for (const auto& c : prov.comments()) csv += "# " + c + "\n";
    write_output(o.out + ".csv", csv + to_csv(DiscreteMeasure::empirical(first)));
  }
  emit_summary(s, o.out.empty() ? "" : o.out + ".summary.json", out);
  return code;
}

struct ConvolveOpts {
  double alpha = 0.5;
  std::string a = "mp:1", b = "mp:1", out;
  std::size_t K = 6;
};

RectCumulants<double> spec_cumulants(const std::string& spec, double alpha, std::size_t K) {
  auto m = parse_spec(spec);
  if (m.kind == MeasureSpec::Kind::mp) return sqrt_mp_cumulants(alpha, m.value * m.value, K);
  return rect_r_transform(spec_moments(spec, K, alpha), alpha);
}

int cmd_convolve(const ConvolveOpts& o, const Provenance& prov, std::ostream& out) {
  if (o.K < 1) throw DomainError("moment_order", "K must be at least 1");
  auto ca = spec_cumulants(o.a, o.alpha, o.K), cb = spec_cumulants(o.b, o.alpha, o.K);
  auto sum = add_cumulants(ca, cb);
  auto nu = rect_r_inverse(sum);
  json s = prov.header();
  s["alpha"] = o.alpha;
  s["a"] = json{{"spec", o.a}, {"cumulants", ca.coeffs}};
  s["b"] = json{{"spec", o.b}, {"cumulants", cb.coeffs}};
  s["cumulants"] = sum.coeffs;
  s["nu_moments"] = to_vector(nu);
  s["mu_moments"] = to_vector(even_from_squared(nu));
  emit_summary(s, o.out, out);
  return 0;
}

struct PredictOpts {
  FlowOpts flow;
  std::string init = "delta0", out;
  double t = 1.0;
  std::size_t K = 6;
};

int cmd_predict(const PredictOpts& o, const Provenance& prov, std::ostream& out) {
  const auto p = o.flow.params();
  if (o.K < 1) throw DomainError("moment_order", "K must be at least 1");
  auto pred = predict_mu_t(spec_moments(o.init, o.K, p.shape()), p, o.t);
  json s = prov.header();
  s["t"] = o.t;
  s["shape"] = p.shape();
  s["sigma_t2"] = pred.sigma_t2;
  s["nu_moments"] = to_vector(pred.nu);
  s["mu_moments"] = to_vector(pred.mu);
  emit_summary(s, o.out, out);
  return 0;
}

struct MPMomentsOpts {
  double rho = 0.5, sigma = 1.0;
  std::size_t K = 6;
  std::string out;
};

int cmd_mp_moments(const MPMomentsOpts& o, const Provenance& prov, std::ostream& out) {
  json s = prov.header();
  s["moments"] = to_vector(mp_moments(MPParams(o.rho, o.sigma), o.K));
  emit_summary(s, o.out, out);
  return 0;
}

struct MomentsOpts {
  FlowOpts flow;
  std::string init = "const:1", out;
  std::size_t K = 6;
  double T = 2.0, dt = 1e-3, record_every = 0.01, tolerance = 0.0;
};

int cmd_moments(const MomentsOpts& o, const Provenance& prov, std::ostream& out) {
  const auto p = o.flow.params();
  if (o.K < 1) throw DomainError("moment_order", "K must be at least 1");
  const auto m0 = spec_moments(o.init, o.K, p.shape());
  MomentIntegration opt;
  opt.dt = o.dt;
  opt.record_every = o.record_every;
  auto traj = integrate_moments(m0, p, o.T, opt);

  std::string csv;
  for (const auto& c : prov.comments()) csv += "# " + c + "\n";
  csv += "t";
  for (std::size_t k = 1; k <= o.K; ++k) csv += fmt::format(",m{}", k);
  csv += o.K >= 2 ? ",m1_closed,m2_closed\n" : ",m1_closed\n";
  double err1 = 0.0, err2 = 0.0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const auto& m = traj.moments[i];
    csv += render(t);
    for (std::size_t k = 1; k <= o.K; ++k) csv += "," + render(m(k));
    const double c1 = m1_closed(p, m0(1), t);
    err1 = std::max(err1, rel(m(1), c1));
    csv += "," + render(c1);
    if (o.K >= 2) {
      const double c2 = m2_closed(p, m0(1), m0(2), t);
      err2 = std::max(err2, rel(m(2), c2));
      csv += "," + render(c2);
    }
    csv += "\n";
  }
  if (!o.out.empty()) write_output(o.out + ".csv", csv);

  json s = prov.header();
  s["final_moments"] = to_vector(traj.moments.back());
  s["error_estimate"] = traj.error_estimate;
  s["max_relative_error_m1"] = err1;
  if (o.K >= 2) s["max_relative_error_m2"] = err2;
  int code = gate(s, std::max(err1, err2), o.tolerance);
  emit_summary(s, o.out.empty() ? "" : o.out + ".summary.json", out);
  return code;
}

struct BurgersOpts {
  FlowOpts flow;
  std::string kind = "mp", derivatives = "analytic", out;
  double sigma0 = 1.0, t = 0.5, scale = 1.0, tolerance = 0.0;
  double re_min = -2.0, re_max = 0.0, im_min = 0.5, im_max = 5.0;
  std::size_t n_re = 20, n_im = 20;
};

int cmd_burgers(const BurgersOpts& o, const Provenance& prov, std::ostream& out) {
  const auto p = o.flow.params();
  FlowEvaluator analytic;
  double a_plus = 0.0;
  if (o.kind == "mp") {
    analytic = mp_flow(p, o.sigma0, 0.0, o.scale);
    a_plus = MPParams(p.shape(), o.scale * mp_flow_sigma(p, o.sigma0, o.t)).a_plus();
  } else {
    analytic = stationary_flow(p);
    a_plus = MPParams(p.shape(), std::sqrt(p.sigma_inf2())).a_plus();
  }
  FlowEvaluator f = analytic;
  if (o.derivatives == "fd")
    f = FlowEvaluator::finite_difference([analytic](double t, ComplexPoint z) { return analytic(t, z).G; },
                                         analytic.label() + " (finite differences)");
  GridSpec grid = GridSpec::default_for(a_plus);
  grid.re_min = o.re_min;
  if (o.re_max > 0.0) grid.re_max = o.re_max;
  grid.im_min = o.im_min;
  grid.im_max = o.im_max;
  grid.n_re = o.n_re;
  grid.n_im = o.n_im;
  auto res = residual_grid(f, p, o.t, grid);
  if (!o.out.empty()) write_output(o.out + ".csv", residual_grid_csv(res, prov.comments()));
  json s = prov.header();
  s["flow"] = f.label();
  s["t"] = o.t;
  s["points"] = res.rows.size();
  s["max_abs_residual"] = res.max_abs;
  if (f.mode() == DerivativeMode::finite_difference) s["fd_steps"] = json{{"h_z", f.h_z()}, {"h_t", f.h_t(o.t)}};
  int code = gate(s, res.max_abs, o.tolerance);
  emit_summary(s, o.out.empty() ? "" : o.out + ".summary.json", out);
  return code;
}

struct InvertOpts {
  double rho = 0.5, sigma = 1.0, tolerance = 0.0;
  std::size_t points = 200;
  std::string out;
};

int cmd_invert(const InvertOpts& o, const Provenance& prov, std::ostream& out) {
  MPParams p(o.rho, o.sigma);
  auto grid = support_grid(p, o.points);
  auto inv = stieltjes_invert([&p](ComplexPoint z) { return mp_cauchy(p, z); }, grid);
  auto exact = [&p](double x) { return mp_density(p, x); };
  const double l1 = l1_on_grid(grid, inv.density, exact);
  if (!o.out.empty()) {
    std::string csv;
    for (const auto& c : prov.comments()) csv += "# " + c + "\n";
    csv += "x,density,exact,converged\n";
    for (std::size_t i = 0; i < inv.x.size(); ++i)
      csv += fmt::format("{},{},{},{}\n", render(inv.x[i]), render(inv.density[i]), render(exact(inv.x[i])),
                         inv.converged[i] ? 1 : 0);
    write_output(o.out + ".csv", csv);
  }
  json s = prov.header();
  s["l1"] = l1;
  s["unconverged"] = inv.unconverged();
  int code = gate(s, l1, o.tolerance);
  emit_summary(s, o.out.empty() ? "" : o.out + ".summary.json", out);
  return code;
}

int cmd_selftest(std::vector<std::string> ids, bool all, std::ostream& out) {
  if (all || ids.empty()) ids = acceptance::criterion_ids();
  int failed = 0;
  for (const auto& id : ids) {
    auto r = acceptance::run(id);
    out << acceptance::format_line(r) << "\n" << std::flush;
    if (!r.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

// --config FILE: key=value lines become --key=value flags right after the subcommand, so flags
// given on the command line (which come later) take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> injected;
  for (std::size_t i = 0; i < args.size();) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw DomainError("parse_error", "--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
      continue;
    }
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw DomainError("parse_error", fmt::format("config line '{}' is not key=value", line));
      const std::string value = trim(line.substr(eq + 1));
      // An empty value leaves the option at its default.
      if (!value.empty()) injected.push_back("--" + trim(line.substr(0, eq)) + "=" + value);
    }
  }
  std::size_t at = !args.empty() && args[0].rfind("-", 0) != 0 ? 1 : 0;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return args;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wishart eigenvalue flows and their rectangular free limits", "rect-flow"};
  app.set_version_flag("--version", std::string(RECTFLOW_VERSION));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::function<int()> action;
  std::vector<std::unique_ptr<Recorder>> recorders;
  auto sub = [&](const std::string& name, const std::string& desc) {
    auto* s = app.add_subcommand(name, desc);
    s->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    recorders.push_back(std::make_unique<Recorder>(s));
    return std::pair{s, recorders.back().get()};
  };

  PathOpts sim, orc;
  {
    auto [s, r] = sub("simulate", "simulate the eigenvalue SDE system");
    add_path_options(*r, sim, true);
    s->callback([&, r = r] { action = [&, r] { return cmd_simulate(sim, Provenance{"simulate", r}, out); }; });
  }
  {
    auto [s, r] = sub("oracle", "exact matrix-level OU simulation (beta2 = 1)");
    add_path_options(*r, orc, false);
    s->callback([&, r = r] { action = [&, r] { return cmd_oracle(orc, Provenance{"oracle", r}, out); }; });
  }
  StationaryOpts st;
  {
    auto [s, r] = sub("stationary", "draw from the stationary law of the matrix process");
    st.model.add(*r);
    r->add("seed", st.seed, "base seed (required)")->required();
    r->add("replicas", st.replicas, "independent draws");
    r->add("K", st.K, "moments reported");
    r->add("tolerance", st.tolerance, "exit 1 when the largest KS exceeds this (0 disables)");
    r->add("out", st.out, "output prefix");
    s->callback([&, r = r] { action = [&, r] { return cmd_stationary(st, Provenance{"stationary", r}, out); }; });
  }
  ConvolveOpts cv;
  {
    auto [s, r] = sub("convolve", "rectangular free convolution of two squared-singular-value laws");
    r->add("alpha", cv.alpha, "rectangular ratio in [0,1]");
    r->add("a", cv.a, "first law: delta0, const:c, mp:sigma, file:path");
    r->add("b", cv.b, "second law");
    r->add("K", cv.K, "number of cumulants and moments");
    r->add("out", cv.out, "write the JSON report here as well");
    s->callback([&, r = r] { action = [&, r] { return cmd_convolve(cv, Provenance{"convolve", r}, out); }; });
  }
  PredictOpts pr;
  {
    auto [s, r] = sub("predict", "moments of the limit law at time t");
    pr.flow.add(*r);
    r->add("init", pr.init, "initial law of the eigenvalues");
    r->add("t", pr.t, "time");
    r->add("K", pr.K, "moments of the eigenvalue law");
    r->add("out", pr.out, "write the JSON report here as well");
    s->callback([&, r = r] { action = [&, r] { return cmd_predict(pr, Provenance{"predict", r}, out); }; });
  }
  MomentsOpts mo;
  {
    auto [s, r] = sub("moments", "integrate the moment hierarchy and compare with closed forms");
    mo.flow.add(*r);
    r->add("init", mo.init, "initial law of the eigenvalues");
    r->add("K", mo.K, "moments integrated");
    r->add("T", mo.T, "final time");
    r->add("dt", mo.dt, "RK4 step");
    r->add("record-every", mo.record_every, "recording interval; 0 records every step");
    r->add("tolerance", mo.tolerance, "exit 1 when the closed-form discrepancy exceeds this (0 disables)");
    r->add("out", mo.out, "output prefix for the trajectory CSV");
    s->callback([&, r = r] { action = [&, r] { return cmd_moments(mo, Provenance{"moments", r}, out); }; });
  }
  BurgersOpts bg;
  {
    auto [s, r] = sub("burgers", "residual of the Burgers equation on a grid");
    bg.flow.add(*r);
    r->add("flow", bg.kind, "mp or stationary")->check(CLI::IsMember({"mp", "stationary"}));
    r->add("derivatives", bg.derivatives, "analytic or fd")->check(CLI::IsMember({"analytic", "fd"}));
    r->add("sigma0", bg.sigma0, "initial MP scale");
    r->add("scale", bg.scale, "multiplies sigma(t); values other than 1 give a non-solution");
    r->add("t", bg.t, "time");
    r->add("re-min", bg.re_min, "grid: smallest Re z");
    r->add("re-max", bg.re_max, "grid: largest Re z; 0 selects a_plus + 2");
    r->add("im-min", bg.im_min, "grid: smallest Im z");
    r->add("im-max", bg.im_max, "grid: largest Im z");
    r->add("n-re", bg.n_re, "grid points along Re z");
    r->add("n-im", bg.n_im, "grid points along Im z");
    r->add("tolerance", bg.tolerance, "exit 1 when the max residual exceeds this (0 disables)");
    r->add("out", bg.out, "output prefix for the residual CSV");
    s->callback([&, r = r] { action = [&, r] { return cmd_burgers(bg, Provenance{"burgers", r}, out); }; });
  }
  InvertOpts iv;
  {
    auto [s, r] = sub("invert", "recover the MP density from its Cauchy transform");
    r->add("rho", iv.rho, "MP shape in (0,1]");
    r->add("sigma", iv.sigma, "MP scale");
    r->add("points", iv.points, "cell-centred grid points over the support");
    r->add("tolerance", iv.tolerance, "exit 1 when the L1 error exceeds this (0 disables)");
    r->add("out", iv.out, "output prefix for the density CSV");
    s->callback([&, r = r] { action = [&, r] { return cmd_invert(iv, Provenance{"invert", r}, out); }; });
  }
  MPMomentsOpts mm;
  {
    auto [s, r] = sub("mp-moments", "moments of the MP law by quadrature");
    r->add("rho", mm.rho, "MP shape in (0,1]");
    r->add("sigma", mm.sigma, "MP scale");
    r->add("K", mm.K, "number of moments");
    r->add("out", mm.out, "write the JSON report here as well");
    s->callback([&, r = r] { action = [&, r] { return cmd_mp_moments(mm, Provenance{"mp-moments", r}, out); }; });
  }
  std::vector<std::string> criteria;
  bool all = false;
  {
    auto* s = app.add_subcommand("selftest", "run acceptance criteria");
    s->add_option("--criterion", criteria, "criterion id A1..A10 (repeatable)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    s->add_flag("--all", all, "run every criterion");
    s->callback([&] { action = [&] { return cmd_selftest(criteria, all, out); }; });
  }

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    return action();
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    print_error(err, "usage", e.what());
    return 2;
  } catch (const DomainError& e) {
    print_error(err, e.code(), e.what());
    return 2;
  } catch (const NumericalError& e) {
    print_error(err, e.code(), e.what());
    return 3;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 3;
  }
}

}  // namespace rectflow::cli
