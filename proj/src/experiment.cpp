#include "snowlink/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "snowlink/errors.hpp"
#include "snowlink/json_io.hpp"
#include "snowlink/rng.hpp"

namespace snowlink {

void ExperimentConfig::validate() const {
  population.validate();
  if (replicates < 1) fail(ErrorKind::ConfigError, "replicates must be >= 1");
  if (methods.empty()) fail(ErrorKind::ConfigError, "at least one method is required");
  if (workers < 1) fail(ErrorKind::ConfigError, "workers must be >= 1");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::ConfigError, "level must be in (0, 1)");
  if (fit.starts < 1) fail(ErrorKind::ConfigError, "fit.starts must be >= 1");
}

ExperimentConfig experiment_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::ConfigError, "experiment config must be an object");
  ExperimentConfig cfg;
  try {
    if (doc.contains("schema_version") && doc.at("schema_version").get<int>() != kSchemaVersion) {
      fail(ErrorKind::ConfigError, "unsupported schema_version");
    }
    cfg.population = population_from_json(doc.at("population"));
    cfg.replicates = doc.value("replicates", 1);
    if (doc.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : doc.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    cfg.master_seed = doc.value("master_seed", std::uint64_t{0});
    cfg.workers = doc.value("workers", 1);
    cfg.level = doc.value("level", 0.95);
    cfg.variance_source = parse_variance_source(doc.value("variance_source", std::string("analytic")));
    if (doc.contains("fit")) {
      const auto& f = doc.at("fit");
      cfg.fit.score_tolerance = f.value("score_tolerance", cfg.fit.score_tolerance);
      cfg.fit.max_iterations = f.value("max_iterations", cfg.fit.max_iterations);
      cfg.fit.tau_tolerance = f.value("tau_tolerance", cfg.fit.tau_tolerance);
      cfg.fit.max_sweeps = f.value("max_sweeps", cfg.fit.max_sweeps);
      cfg.fit.starts = f.value("starts", cfg.fit.starts);
    }
    if (doc.contains("outputs")) {
      const auto& o = doc.at("outputs");
      cfg.outputs.dir = o.value("dir", cfg.outputs.dir.string());
      cfg.outputs.summary = o.value("summary", cfg.outputs.summary);
      cfg.outputs.replicates_csv = o.value("replicates_csv", cfg.outputs.replicates_csv);
      cfg.outputs.digest = o.value("digest", cfg.outputs.digest);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("experiment config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    fail(ErrorKind::ConfigError, e.detail());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_from_json(read_json_file(path));
}

ReplicateRecord run_replicate(const ExperimentConfig& config, int index) {
  ReplicateRecord rec;
  rec.index = index;
  rec.seed = child_seed(config.master_seed, static_cast<std::uint64_t>(index));
  auto sim = draw_sample(config.population, rec.seed);
  rec.truth = std::move(sim.truth);
  const auto model1 = make_model(config.population.model1);
  const auto model2 = make_model(config.population.model2);
  for (Method method : config.methods) {
    MethodOutcome out;
    out.method = method;
    try {
      out.estimate = fit_total(sim.data, *model1, *model2, method, config.fit);
      out.variance = variance_report(out.estimate, sim.data, *model1, *model2, config.variance_source, config.level);
      out.ok = true;
    } catch (const Error& e) {
      out.ok = false;
      out.error = e.what();
    }
    rec.outcomes.push_back(std::move(out));
  }
  return rec;
}

namespace {

struct Sample {
  double estimate;
  double truth;
  double variance;  // asymptotic variance of the estimate at the true scale
  bool hit;
};

TargetSummary summarize(const std::string& name, const std::vector<Sample>& xs, bool ratio) {
  TargetSummary s;
  s.target = name;
  s.count = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  const double k = static_cast<double>(xs.size());
  double sum = 0, sum_ratio = 0, sum_err = 0, sum_asd = 0, hits = 0;
  for (const auto& x : xs) {
    sum += x.estimate;
    if (ratio) sum_ratio += x.estimate / x.truth;
    sum_err += x.estimate - x.truth;
    sum_asd += std::sqrt(x.variance);
    hits += x.hit ? 1.0 : 0.0;
  }
  s.mean = sum / k;
  if (ratio) s.mean_ratio = sum_ratio / k;
  s.bias = sum_err / k;
  s.mean_asymptotic_sd = sum_asd / k;
  s.coverage = hits / k;
  double ss = 0;
  for (const auto& x : xs) ss += (x.estimate - x.truth - s.bias) * (x.estimate - x.truth - s.bias);
  s.empirical_sd = xs.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
  s.sd_ratio = s.mean_asymptotic_sd > 0 ? s.empirical_sd / s.mean_asymptotic_sd : 0.0;

  std::vector<double> z;
  for (const auto& x : xs) {
    if (x.variance > 0) z.push_back((x.estimate - x.truth) / std::sqrt(x.variance));
  }
  if (z.size() >= 2) {
    const double kz = static_cast<double>(z.size());
    double mz = 0;
    for (double v : z) mz += v;
    mz /= kz;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : z) {
      const double d = v - mz;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= kz;
    m3 /= kz;
    m4 /= kz;
    if (m2 > 0) {
      s.skewness = m3 / std::pow(m2, 1.5);
      s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    std::sort(z.begin(), z.end());
    const boost::math::normal_distribution<double> std_normal;
    double d = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double cdf = boost::math::cdf(std_normal, z[i]);
      d = std::max({d, std::abs(static_cast<double>(i + 1) / kz - cdf), std::abs(cdf - static_cast<double>(i) / kz)});
    }
    s.ks_statistic = d;
  }
  return s;
}

std::string failure_kind(const std::string& message) {
  const auto pos = message.find(':');
  return pos == std::string::npos ? message : message.substr(0, pos);
}

MethodSummary aggregate(const std::vector<ReplicateRecord>& records, std::size_t slot, Method method,
                        double level) {
  MethodSummary ms;
  ms.method = method;
  const double z = normal_quantile(0.5 + level / 2.0);
  std::vector<Sample> t1, t2, t;
  std::vector<std::vector<Sample>> th1, th2;
  for (const auto& rec : records) {
    const auto& out = rec.outcomes[slot];
    if (!out.ok) {
      ++ms.failures;
      ++ms.failure_kinds[failure_kind(out.error)];
      continue;
    }
    ++ms.successes;
    const auto& e = out.estimate;
    const auto& v = out.variance;
    const auto& tr = rec.truth;
    t1.push_back({static_cast<double>(e.u1.tau.floored), static_cast<double>(tr.tau1),
                  static_cast<double>(tr.tau1) * v.sigma1_sq, v.tau1.contains(static_cast<double>(tr.tau1))});
    t2.push_back({static_cast<double>(e.u2.tau.floored), static_cast<double>(tr.tau2),
                  static_cast<double>(tr.tau2) * v.sigma2_sq, v.tau2.contains(static_cast<double>(tr.tau2))});
    t.push_back({static_cast<double>(e.tau), static_cast<double>(tr.tau),
                 static_cast<double>(tr.tau1) * v.sigma1_sq + static_cast<double>(tr.tau2) * v.sigma2_sq,
                 v.tau.contains(static_cast<double>(tr.tau))});
    auto push_theta = [&](std::vector<std::vector<Sample>>& dest, const LinkParams& est, const LinkParams& truth,
                          const std::vector<double>& var, double scale_est, double scale_true) {
      dest.resize(est.size());
      for (std::size_t j = 0; j < est.size(); ++j) {
        // reported variance is on the estimated-size scale; restate at the true size
        const double vj = scale_true > 0 ? var[j] * scale_est / scale_true : var[j];
        const double half = z * std::sqrt(var[j]);
        dest[j].push_back({est[j], truth[j], vj, std::abs(est[j] - truth[j]) <= half});
      }
    };
    push_theta(th1, e.u1.theta, tr.theta1, v.var_theta1, static_cast<double>(e.u1.tau.floored),
               static_cast<double>(tr.tau1));
    push_theta(th2, e.u2.theta, tr.theta2, v.var_theta2, static_cast<double>(e.u2.tau.floored),
               static_cast<double>(tr.tau2));
  }
  ms.targets.push_back(summarize("tau1", t1, true));
  ms.targets.push_back(summarize("tau2", t2, true));
  ms.targets.push_back(summarize("tau", t, true));
  for (std::size_t j = 0; j < th1.size(); ++j) ms.targets.push_back(summarize("theta1[" + std::to_string(j) + "]", th1[j], false));
  for (std::size_t j = 0; j < th2.size(); ++j) ms.targets.push_back(summarize("theta2[" + std::to_string(j) + "]", th2[j], false));
  return ms;
}

}  // namespace

const TargetSummary& MonteCarloSummary::target(Method method, const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method != method) continue;
    for (const auto& t : m.targets) {
      if (t.target == name) return t;
    }
  }
  fail(ErrorKind::DomainError, "no summary for target " + name);
}

MonteCarloSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<ReplicateRecord> records(static_cast<std::size_t>(config.replicates));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < config.replicates; i = next++) records[static_cast<std::size_t>(i)] = run_replicate(config, i);
  };
  const int threads = std::min(config.workers, config.replicates);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  }

  MonteCarloSummary summary;
  summary.replicates = config.replicates;
  summary.master_seed = config.master_seed;
  summary.level = config.level;
  summary.variance_source = std::string(to_string(config.variance_source));
  for (std::size_t slot = 0; slot < config.methods.size(); ++slot) {
    summary.methods.push_back(aggregate(records, slot, config.methods[slot], config.level));
  }
  summary.records = std::move(records);
  return summary;
}

json summary_to_json(const MonteCarloSummary& s) {
  json methods = json::array();
  for (const auto& m : s.methods) {
    json targets = json::array();
    for (const auto& t : m.targets) {
      json jt{{"target", t.target},
              {"count", t.count},
              {"mean", t.mean},
              {"bias", t.bias},
              {"empirical_sd", t.empirical_sd},
              {"mean_asymptotic_sd", t.mean_asymptotic_sd},
              {"sd_ratio", t.sd_ratio},
              {"coverage", t.coverage},
              {"skewness", t.skewness},
              {"excess_kurtosis", t.excess_kurtosis},
              {"ks_statistic", t.ks_statistic}};
      if (t.mean_ratio) jt["mean_ratio"] = *t.mean_ratio;
      targets.push_back(std::move(jt));
    }
    methods.push_back({{"method", std::string(to_string(m.method))},
                       {"successes", m.successes},
                       {"failures", m.failures},
                       {"failure_kinds", m.failure_kinds},
                       {"targets", targets}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"replicates", s.replicates},
              {"master_seed", s.master_seed},
              {"level", s.level},
              {"variance_source", s.variance_source},
              {"methods", methods}};
}

MonteCarloSummary summary_from_json(const json& doc) {
  MonteCarloSummary s;
  try {
    if (doc.at("schema_version").get<int>() != kSchemaVersion) fail(ErrorKind::ParseError, "unsupported schema_version");
    s.replicates = doc.at("replicates").get<int>();
    s.master_seed = doc.at("master_seed").get<std::uint64_t>();
    s.level = doc.at("level").get<double>();
    s.variance_source = doc.at("variance_source").get<std::string>();
    for (const auto& jm : doc.at("methods")) {
      MethodSummary m;
      m.method = parse_method(jm.at("method").get<std::string>());
      m.successes = jm.at("successes").get<int>();
      m.failures = jm.at("failures").get<int>();
      m.failure_kinds = jm.at("failure_kinds").get<std::map<std::string, int>>();
      for (const auto& jt : jm.at("targets")) {
        TargetSummary t;
        t.target = jt.at("target").get<std::string>();
        t.count = jt.at("count").get<int>();
        t.mean = jt.at("mean").get<double>();
        if (jt.contains("mean_ratio")) t.mean_ratio = jt.at("mean_ratio").get<double>();
        t.bias = jt.at("bias").get<double>();
        t.empirical_sd = jt.at("empirical_sd").get<double>();
        t.mean_asymptotic_sd = jt.at("mean_asymptotic_sd").get<double>();
        t.sd_ratio = jt.at("sd_ratio").get<double>();
        t.coverage = jt.at("coverage").get<double>();
        t.skewness = jt.at("skewness").get<double>();
        t.excess_kurtosis = jt.at("excess_kurtosis").get<double>();
        t.ks_statistic = jt.at("ks_statistic").get<double>();
        m.targets.push_back(std::move(t));
      }
      s.methods.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("summary: ") + e.what());
  }
  return s;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string joined(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    out += num(xs[i]);
  }
  return out;
}

std::string quoted(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

constexpr const char* kCsvColumns[] = {
    "replicate", "seed",      "method",    "status",     "tau1_true", "tau2_true",  "tau_true",   "tau1_hat",
    "tau2_hat",  "tau_hat",   "tau1_real", "tau2_real",  "sigma1_sq", "sigma2_sq",  "var_tau1",   "var_tau2",
    "var_tau",   "tau1_lower", "tau1_upper", "tau2_lower", "tau2_upper", "tau_lower", "tau_upper", "hit_tau1",
    "hit_tau2",  "hit_tau",   "theta1_hat", "theta2_hat", "iterations", "sweeps",    "error"};

}  // namespace

std::string replicates_csv_header() {
  std::string out;
  for (const char* c : kCsvColumns) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string replicates_csv(const MonteCarloSummary& s) {
  std::ostringstream os;
  os << replicates_csv_header() << '\n';
  for (const auto& rec : s.records) {
    for (const auto& o : rec.outcomes) {
      const auto& e = o.estimate;
      const auto& v = o.variance;
      const auto& t = rec.truth;
      os << rec.index << ',' << rec.seed << ',' << to_string(o.method) << ',' << (o.ok ? "ok" : "failed") << ','
         << t.tau1 << ',' << t.tau2 << ',' << t.tau << ',';
      if (o.ok) {
        os << e.u1.tau.floored << ',' << e.u2.tau.floored << ',' << e.tau << ',' << num(e.u1.tau.real) << ','
           << num(e.u2.tau.real) << ',' << num(v.sigma1_sq) << ',' << num(v.sigma2_sq) << ',' << num(v.var_tau1)
           << ',' << num(v.var_tau2) << ',' << num(v.var_tau) << ',' << num(v.tau1.lower) << ','
           << num(v.tau1.upper) << ',' << num(v.tau2.lower) << ',' << num(v.tau2.upper) << ',' << num(v.tau.lower)
           << ',' << num(v.tau.upper) << ',' << v.tau1.contains(static_cast<double>(t.tau1)) << ','
           << v.tau2.contains(static_cast<double>(t.tau2)) << ',' << v.tau.contains(static_cast<double>(t.tau))
           << ',' << joined(e.u1.theta) << ',' << joined(e.u2.theta) << ','
           << e.u1.diagnostics.iterations + e.u2.diagnostics.iterations << ','
           << e.u1.diagnostics.sweeps + e.u2.diagnostics.sweeps << ",\n";
      } else {
        os << std::string(23, ',') << quoted(o.error) << '\n';
      }
    }
  }
  return os.str();
}

std::string digest_text(const MonteCarloSummary& s) {
  std::ostringstream os;
  os << "schema_version " << kSchemaVersion << '\n'
     << "replicates " << s.replicates << "  master_seed " << s.master_seed << "  level " << s.level
     << "  variance " << s.variance_source << "\n";
  char line[256];
  for (const auto& m : s.methods) {
    os << '\n' << to_string(m.method) << ": " << m.successes << " ok, " << m.failures << " failed";
    for (const auto& [kind, count] : m.failure_kinds) os << "  [" << kind << " x" << count << ']';
    os << '\n';
    std::snprintf(line, sizeof line, "  %-11s %12s %10s %10s %8s %8s %8s %8s %7s\n", "target", "mean", "ratio",
                  "bias", "sd_ratio", "cover", "skew", "ex.kurt", "ks");
    os << line;
    for (const auto& t : m.targets) {
      char ratio[32] = "-";
      if (t.mean_ratio) std::snprintf(ratio, sizeof ratio, "%.4f", *t.mean_ratio);
      std::snprintf(line, sizeof line, "  %-11s %12.4f %10s %10.4f %8.4f %8.4f %8.4f %8.4f %7.4f\n",
                    t.target.c_str(), t.mean, ratio, t.bias, t.sd_ratio, t.coverage, t.skewness, t.excess_kurtosis,
                    t.ks_statistic);
      os << line;
    }
  }
  return os.str();
}

void emit_reports(const MonteCarloSummary& summary, const OutputPaths& paths) {
  std::error_code ec;
  std::filesystem::create_directories(paths.dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + paths.dir.string() + ": " + ec.message());
  write_json_file(paths.dir / paths.summary, summary_to_json(summary));
  write_text_file(paths.dir / paths.replicates_csv, replicates_csv(summary));
  write_text_file(paths.dir / paths.digest, digest_text(summary));
}

}  // namespace snowlink
