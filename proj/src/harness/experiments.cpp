#include "driftlab/harness/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "driftlab/budget.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/harness/report.hpp"
#include "driftlab/learners.hpp"
#include "driftlab/processes.hpp"
#include "driftlab/risk.hpp"
#include "driftlab/rng.hpp"

namespace driftlab::harness {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string short_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct MeanSe {
  double mean = kNaN;
  double se = kNaN;
  std::size_t n = 0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  out.n = v.size();
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) {
    out.se = 0.0;
    return out;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return out;
}

/// Per-(variant, T) averages over replicates, in first-seen run order.
struct ConfigMean {
  std::string variant;
  int T = 0;
  double exo = 0.0;
  double feedback = 0.0;
  MeanSe gap;
  double d_bar = 0.0;
  double kappa_bar = 0.0;
  std::size_t diverged = 0;
};

std::vector<ConfigMean> aggregate(const std::vector<RunResult>& runs) {
  std::vector<ConfigMean> out;
  std::map<std::pair<std::string, int>, std::size_t> index;
  std::vector<std::vector<double>> gaps, ds, ks;
  for (const auto& r : runs) {
    const auto key = std::make_pair(r.variant, r.T);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back(ConfigMean{r.variant, r.T, r.exo_setting, r.feedback_setting, {}, 0.0, 0.0, 0});
      gaps.emplace_back();
      ds.emplace_back();
      ks.emplace_back();
    }
    const std::size_t i = it->second;
    if (r.diverged) {
      ++out[i].diverged;
      continue;
    }
    gaps[i].push_back(r.gap);
    ds[i].push_back(r.sum_d / r.T);
    ks[i].push_back(r.sum_kappa / r.T);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].gap = mean_se(gaps[i]);
    out[i].d_bar = mean_se(ds[i]).mean;
    out[i].kappa_bar = mean_se(ks[i]).mean;
  }
  return out;
}

json config_means_json(const std::vector<ConfigMean>& cm, double alpha) {
  json arr = json::array();
  for (const auto& c : cm) {
    arr.push_back({{"variant", c.variant},
                   {"T", c.T},
                   {"exo", c.exo},
                   {"feedback", c.feedback},
                   {"n", c.gap.n},
                   {"diverged", c.diverged},
                   {"mean_gap", c.gap.mean},
                   {"se_gap", c.gap.se},
                   {"d_bar", c.d_bar},
                   {"kappa_bar", c.kappa_bar},
                   {"budget_rate", c.d_bar + alpha * c.kappa_bar}});
  }
  return arr;
}

json fit_json(const std::vector<std::string>& labels, const OlsFit& fit) {
  json coef = json::object();
  for (std::size_t i = 0; i < labels.size(); ++i) coef[labels[i]] = fit.coef(static_cast<Eigen::Index>(i));
  return {{"coefficients", coef}, {"r2", fit.r2}};
}

void set_budgets(std::vector<RunResult>& runs, double alpha) {
  for (auto& r : runs) r.c_t = r.sum_d + alpha * r.sum_kappa;
}

std::string run_id(ExperimentId id, const std::string& variant, int T, std::uint64_t seed) {
  return to_string(id) + "-" + variant + "-T" + std::to_string(T) + "-s" + std::to_string(seed);
}

json base_summary(const ExperimentConfig& cfg, double alpha, const json& columns) {
  return {{"experiment", to_string(cfg.experiment)},
          {"config", config_to_json(cfg)},
          {"alpha", alpha},
          {"columns", columns}};
}

}  // namespace

std::uint64_t replicate_key(ExperimentId id, std::uint64_t seed) {
  return mix64(mix64(seed) ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(id) + 1)));
}

std::string drift_variant(double exo, double feedback) {
  return "exo" + short_number(exo) + "_fb" + short_number(feedback);
}

Eigen::MatrixXd log_spaced_covariance(int dim, double condition_number) {
  if (dim < 1 || !(condition_number >= 1.0)) {
    throw std::invalid_argument("log_spaced_covariance: need dim >= 1, condition_number >= 1");
  }
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) {
    const double frac = dim == 1 ? 0.0 : static_cast<double>(i) / (dim - 1);
    v(i) = std::pow(condition_number, -frac);
  }
  return v.asDiagonal();
}

RunResult run_linear(const GaussianLocationFamily& fam, const LinearRunParams& params,
                     std::uint64_t master_seed, ExperimentId id) {
  if (params.T < 1) throw std::invalid_argument("run_linear: T must be >= 1");
  const auto key = replicate_key(id, params.seed);
  RngStream obs = RngStream::derive(master_seed, key, StreamPurpose::observation);
  RngStream drift = RngStream::derive(master_seed, key, StreamPurpose::drift);

  const Eigen::Index d = fam.dim();
  const LinearGaussianEnv env = LinearGaussianEnv::identity_gains(fam, ParamPoint::zero(d));
  const MetricTensor& g = fam.metric();
  ParamPoint theta = env.theta0();
  OnlineMeanEstimator learner(d);

  auto unit = [&](const Eigen::VectorXd& z) {
    const TangentVector v(z);
    const double n = fisher_norm(g, v);
    return n > 0.0 ? (1.0 / n) * v : TangentVector::zero(d);
  };
  const TangentVector fixed_dir = unit(drift.normal_vector(d));

  double emp = 0.0, pop = 0.0, sum_d = 0.0, sum_k = 0.0;
  for (int t = 0; t < params.T; ++t) {
    const Eigen::VectorXd x = sample_observation(env, theta, obs);
    emp += (x - learner.mean().coords).squaredNorm();
    pop += population_risk_gaussian_mean(fam, theta, learner.mean());
    learner.observe(x);

    TangentVector eta = TangentVector::zero(d);
    if (params.exo_rate > 0.0) {
      eta = params.exo_rate * (params.persistent_exo ? fixed_dir : unit(drift.normal_vector(d)));
    }
    TangentVector u = TangentVector::zero(d);
    if (params.feedback_rate > 0.0) u = params.feedback_rate * unit((theta - learner.mean()).components);

    const DriftRecord rec = drift_decompose_linear(env, u, eta);
    sum_d += rec.d;
    sum_k += rec.kappa;
    theta = env_step_linear(env, theta, u, eta);
  }

  RunResult r;
  r.seed = params.seed;
  r.T = params.T;
  r.sum_d = sum_d;
  r.sum_kappa = sum_k;
  r.empirical_risk = emp / params.T;
  r.population_risk = pop / params.T;
  r.gap = gap(r.empirical_risk, r.population_risk);
  r.aux1 = r.exo_setting = params.exo_rate;
  r.aux2 = r.feedback_setting = params.feedback_rate;
  return r;
}

ExperimentOutput run_exp1(const ExperimentConfig& cfg) {
  cfg.validate();
  const GaussianLocationFamily fam(cfg.sigma_matrix());
  struct Variant {
    std::string name;
    double exo, feedback;
  };
  const std::vector<Variant> variants = {{"stationary", 0.0, 0.0},
                                         {"exogenous", cfg.drift_rate, 0.0},
                                         {"feedback", 0.0, cfg.drift_rate}};
  struct Job {
    const Variant* v;
    int T;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& v : variants)
    for (int T : cfg.horizons)
      for (auto s : cfg.seeds) jobs.push_back({&v, T, s});

  ExperimentOutput out;
  out.experiment = cfg.experiment;
  out.runs.resize(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    RunResult r = run_linear(fam, {j.T, j.v->exo, j.v->feedback, true, j.seed}, cfg.seed,
                             cfg.experiment);
    r.variant = j.v->name;
    r.run_id = run_id(cfg.experiment, r.variant, j.T, j.seed);
    out.runs[i] = std::move(r);
  });
  const double alpha = 1.0;
  set_budgets(out.runs, alpha);

  const auto cm = aggregate(out.runs);
  json vj = json::object();
  for (const auto& v : variants) {
    std::vector<double> Ts, gaps, ses;
    for (const auto& c : cm) {
      if (c.variant != v.name) continue;
      Ts.push_back(c.T);
      gaps.push_back(c.gap.mean);
      ses.push_back(c.gap.se);
    }
    vj[v.name] = {{"horizons", Ts},
                  {"mean_gap", gaps},
                  {"se_gap", ses},
                  {"loglog_slope", log_log_slope(Ts, gaps)},
                  {"floor_ratio", gaps.back() / gaps.front()}};
  }
  out.summary = base_summary(cfg, alpha,
                             {{"aux1", "per-step exogenous Fisher drift"},
                              {"aux2", "per-step endogenous Fisher drift"},
                              {"c_t", "sum_d + sum_kappa (alpha fixed at 1)"}});
  out.summary["variants"] = vj;
  out.summary["stationary_slope"] = vj["stationary"]["loglog_slope"];
  out.summary["stationary_ratio"] = vj["stationary"]["floor_ratio"];
  out.summary["drift_floor_ratio"] = vj["exogenous"]["floor_ratio"];
  out.summary["feedback_floor_ratio"] = vj["feedback"]["floor_ratio"];
  out.summary["config_means"] = config_means_json(cm, alpha);
  return out;
}

namespace {

/// Calibration design over config means: [1, (T^{-1/2}), d_bar, kappa_bar].
/// The T^{-1/2} column is dropped when only one horizon is present.
LabeledDesign drift_design(const std::vector<ConfigMean>& cm) {
  std::vector<int> Ts;
  for (const auto& c : cm) Ts.push_back(c.T);
  std::sort(Ts.begin(), Ts.end());
  const bool multi = std::unique(Ts.begin(), Ts.end()) - Ts.begin() > 1;
  LabeledDesign des;
  des.labels = {"intercept"};
  if (multi) des.labels.push_back("inv_sqrt_T");
  des.labels.push_back("d_bar");
  des.labels.push_back("kappa_bar");
  des.X.resize(static_cast<Eigen::Index>(cm.size()), static_cast<Eigen::Index>(des.labels.size()));
  for (std::size_t i = 0; i < cm.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::Index c = 0;
    des.X(r, c++) = 1.0;
    if (multi) des.X(r, c++) = 1.0 / std::sqrt(static_cast<double>(cm[i].T));
    des.X(r, c++) = cm[i].d_bar;
    des.X(r, c++) = cm[i].kappa_bar;
  }
  return des;
}

Eigen::VectorXd mean_gaps(const std::vector<ConfigMean>& cm) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(cm.size()));
  for (std::size_t i = 0; i < cm.size(); ++i) y(static_cast<Eigen::Index>(i)) = cm[i].gap.mean;
  return y;
}

std::vector<double> budget_rates(const std::vector<ConfigMean>& cm, double alpha) {
  std::vector<double> x;
  for (const auto& c : cm) x.push_back(c.d_bar + alpha * c.kappa_bar);
  return x;
}

}  // namespace

ExperimentOutput run_exp2(const ExperimentConfig& cfg) {
  cfg.validate();
  const GaussianLocationFamily fam(cfg.sigma_matrix());
  struct Job {
    double exo, fb;
    int T;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int T : cfg.horizons)
    for (double a : cfg.exo_amplitudes)
      for (double g : cfg.feedback_gains)
        for (auto s : cfg.seeds) jobs.push_back({a, g, T, s});

  ExperimentOutput out;
  out.experiment = cfg.experiment;
  out.runs.resize(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    RunResult r = run_linear(fam, {j.T, j.exo, j.fb, cfg.persistent_exo, j.seed}, cfg.seed,
                             cfg.experiment);
    r.variant = drift_variant(j.exo, j.fb);
    r.run_id = run_id(cfg.experiment, r.variant, j.T, j.seed);
    out.runs[i] = std::move(r);
  });

  const auto cm = aggregate(out.runs);
  const LabeledDesign des = drift_design(cm);
  const Eigen::VectorXd y = mean_gaps(cm);
  const Calibration cal = calibrate_alpha(des, y, "d_bar", "kappa_bar");
  set_budgets(out.runs, cal.alpha);

  const auto rates = budget_rates(cm, cal.alpha);
  std::vector<double> ys(y.data(), y.data() + y.size()), Ts;
  for (const auto& c : cm) Ts.push_back(c.T);
  const OlsFit collapse = collapse_fit(ys, rates, Ts);

  RngStream perm = RngStream::derive(cfg.seed, 0, StreamPurpose::permutation);
  double r2_sum = 0.0, r2_max = 0.0;
  std::vector<double> shuffled = ys;
  for (int p = 0; p < cfg.permutations; ++p) {
    shuffled = ys;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
      std::swap(shuffled[i], shuffled[perm.below(i + 1)]);
    }
    const double r2 = collapse_fit(shuffled, rates, Ts).r2;
    r2_sum += r2;
    r2_max = std::max(r2_max, r2);
  }

  out.summary = base_summary(cfg, cal.alpha,
                             {{"aux1", "per-step exogenous Fisher drift"},
                              {"aux2", "per-step endogenous Fisher drift"},
                              {"c_t", "sum_d + alpha * sum_kappa"}});
  out.summary["full_fit"] = fit_json(des.labels, cal.fit);
  const bool single_T = std::all_of(Ts.begin(), Ts.end(), [&](double t) { return t == Ts.front(); });
  out.summary["collapse"] = {
      {"regressors", single_T ? "intercept, C_T/T" : "intercept, T^-1/2, C_T/T"},
      {"coefficients", std::vector<double>(collapse.coef.data(), collapse.coef.data() + collapse.coef.size())},
      {"r2", collapse.r2}};
  out.summary["collapse_r2"] = collapse.r2;
  out.summary["permutation_null"] = {{"permutations", cfg.permutations},
                                     {"mean_r2", r2_sum / cfg.permutations},
                                     {"max_r2", r2_max}};
  out.summary["config_means"] = config_means_json(cm, cal.alpha);
  return out;
}

ExperimentOutput run_exp3(const ExperimentConfig& cfg) {
  cfg.validate();
  const Eigen::MatrixXd sigma = cfg.sigma.size() != 0
                                    ? cfg.sigma
                                    : log_spaced_covariance(cfg.dimension, cfg.condition_number);
  const GaussianLocationFamily fam(sigma);
  const int n = cfg.num_inits;
  const std::uint64_t base = cfg.seeds.front();

  ExperimentOutput out;
  out.experiment = cfg.experiment;
  out.runs.resize(static_cast<std::size_t>(2 * n));
  parallel_for(static_cast<std::size_t>(n), cfg.workers, [&](std::size_t i) {
    const std::uint64_t seed = base + i;
    RngStream init = RngStream::derive(cfg.seed, replicate_key(cfg.experiment, seed),
                                       StreamPurpose::initialization);
    const ParamPoint theta0(init.normal_vector(fam.dim()));
    const QuadOptState s0(theta0, fam, cfg.rho, cfg.target_ratio);
    const std::pair<DescentMethod, const char*> methods[] = {{DescentMethod::euclidean, "euclidean"},
                                                             {DescentMethod::natural, "natural"}};
    for (std::size_t m = 0; m < 2; ++m) {
      const auto res = run_matched_descent(s0, methods[m].first, cfg.max_steps);
      RunResult r;
      r.variant = methods[m].second;
      r.seed = seed;
      r.T = res.steps;
      r.run_id = to_string(cfg.experiment) + "-" + r.variant + "-s" + std::to_string(seed);
      r.sum_d = res.fisher_length;
      r.sum_kappa = 0.0;
      r.c_t = res.fisher_length;
      r.empirical_risk = r.population_risk = r.gap = kNaN;
      r.aux1 = res.steps;
      r.aux2 = res.final_ratio;
      out.runs[2 * i + m] = std::move(r);
    }
  });

  std::vector<double> len_e, len_n, steps_e, steps_n, diff_len, diff_steps;
  int natural_shorter = 0;
  for (int i = 0; i < n; ++i) {
    const auto& e = out.runs[static_cast<std::size_t>(2 * i)];
    const auto& nat = out.runs[static_cast<std::size_t>(2 * i + 1)];
    len_e.push_back(e.sum_d);
    len_n.push_back(nat.sum_d);
    steps_e.push_back(e.aux1);
    steps_n.push_back(nat.aux1);
    diff_len.push_back(e.sum_d - nat.sum_d);
    diff_steps.push_back(e.aux1 - nat.aux1);
    if (nat.sum_d < e.sum_d) ++natural_shorter;
  }
  auto ms = [](const std::vector<double>& v) {
    const auto r = mean_se(v);
    return json{{"mean", r.mean}, {"se", r.se}};
  };
  const double ratio = mean_se(len_e).mean / mean_se(len_n).mean;
  out.summary = base_summary(cfg, 0.0,
                             {{"sum_d", "cumulative Fisher path length"},
                              {"T", "steps to reach the target ratio"},
                              {"aux1", "steps to reach the target ratio"},
                              {"aux2", "final objective ratio J_T / J_0"},
                              {"empirical_risk", "not applicable"},
                              {"population_risk", "not applicable"},
                              {"gap", "not applicable"}});
  json sig = json::array();
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) sig.push_back(sigma(i, i));
  out.summary["sigma_diagonal"] = sig;
  out.summary["table"] = {
      {"euclidean", {{"fisher_length", ms(len_e)}, {"steps", ms(steps_e)}}},
      {"natural", {{"fisher_length", ms(len_n)}, {"steps", ms(steps_n)}}},
      {"paired_difference",
       {{"fisher_length", ms(diff_len)}, {"steps", ms(diff_steps)}}}};
  out.summary["fisher_length_ratio"] = ratio;
  out.summary["natural_shorter_fraction"] = static_cast<double>(natural_shorter) / n;
  out.summary["euclidean_closed_form_steps"] = euclidean_step_count(cfg.rho, cfg.target_ratio);
  return out;
}

RunResult run_teacher_student(const ExperimentConfig& cfg, const TeacherRunParams& params) {
  if (params.T < 1) throw std::invalid_argument("run_teacher_student: T must be >= 1");
  const auto key = replicate_key(ExperimentId::exp4, params.seed);
  auto stream = [&](StreamPurpose p) { return RngStream::derive(cfg.seed, key, p); };

  RngStream feat_rng = stream(StreamPurpose::feature_map);
  RngStream env_rng = stream(StreamPurpose::environment);
  RngStream init_rng = stream(StreamPurpose::learner_init);
  RngStream obs = stream(StreamPurpose::observation);
  RngStream pop_rng = stream(StreamPurpose::population);
  RngStream probe_rng = stream(StreamPurpose::probe);
  RngStream drift_rng = stream(StreamPurpose::drift);

  const RandomFeatureMap features =
      RandomFeatureMap::sample(cfg.input_dim, cfg.feature_dim, cfg.feature_scale, feat_rng);
  const double m = cfg.feature_dim;
  TeacherEnv env(features,
                 ParamPoint(env_rng.normal_vector(cfg.feature_dim) * (cfg.teacher_scale / std::sqrt(m))),
                 cfg.noise_sd, cfg.probe_size);
  TwoLayerNet net =
      TwoLayerNet::sample(cfg.input_dim, cfg.hidden_width, cfg.output_init_scale, init_rng);

  const BudgetManager exo_mgr(params.exo_total / params.T);
  const BudgetManager endo_mgr(params.feedback_total / params.T);
  const bool drifting = params.exo_total > 0.0 || params.feedback_total > 0.0;
  const TangentVector fixed_dir(drift_rng.normal_vector(cfg.feature_dim));
  const TangentVector no_dir = TangentVector::zero(cfg.feature_dim);

  // The teacher Fisher metric does not depend on theta, so one probe batch per
  // run serves both the metric and the disagreement direction.
  const Eigen::MatrixXd probe = env.sample_inputs(cfg.probe_size, probe_rng);
  const Eigen::MatrixXd probe_phi = features.batch(probe);
  const MetricTensor G = teacher_fisher(env, probe);

  RunResult r;
  r.seed = params.seed;
  r.T = params.T;
  r.exo_setting = params.exo_total;
  r.feedback_setting = params.feedback_total;
  r.aux1 = population_risk_mc(env, net, cfg.final_population_batch, pop_rng);

  double emp = 0.0, pop = 0.0, sum_d = 0.0, sum_k = 0.0, current = 0.0;
  try {
    for (int t = 0; t < params.T; ++t) {
      if (t % cfg.refresh_interval == 0) {
        current = population_risk_mc(env, net, cfg.population_batch, pop_rng);
      }
      const auto [x, y] = env.sample(obs);
      const double resid = net_forward(net, x) - y;
      const double loss = resid * resid;
      if (!std::isfinite(loss)) throw Divergence("non-finite loss at step " + std::to_string(t));
      emp += loss;
      pop += current;
      net = net_sgd_step(net, x, y, cfg.learning_rate);

      if (drifting) {
        const TangentVector endo_dir =
            params.feedback_total > 0.0 ? disagreement_direction(net, env, probe, probe_phi, G)
                                      : no_dir;
        const TangentVector exo_dir =
            cfg.persistent_exo ? fixed_dir : TangentVector(drift_rng.normal_vector(cfg.feature_dim));
        const TeacherStep step = teacher_drift_step(env, exo_mgr, endo_mgr, exo_dir, endo_dir, G);
        env.set_theta(step.theta);
        sum_d += step.drift.d;
        sum_k += step.drift.kappa;
      }
    }
    r.aux2 = population_risk_mc(env, net, cfg.final_population_batch, pop_rng);
    r.empirical_risk = emp / params.T;
    r.population_risk = pop / params.T;
    r.gap = gap(r.empirical_risk, r.population_risk);
    if (!std::isfinite(r.aux2)) throw Divergence("non-finite final population risk");
  } catch (const Divergence&) {
    r.diverged = true;
    r.empirical_risk = r.population_risk = r.gap = r.aux2 = kNaN;
  }
  r.sum_d = sum_d;
  r.sum_kappa = sum_k;
  return r;
}

ExperimentOutput run_exp4(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Job {
    double exo, fb;
    int T;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int T : cfg.horizons)
    for (double a : cfg.exo_amplitudes)
      for (double g : cfg.feedback_gains)
        for (auto s : cfg.seeds) jobs.push_back({a, g, T, s});

  ExperimentOutput out;
  out.experiment = cfg.experiment;
  out.runs.resize(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    RunResult r = run_teacher_student(cfg, {j.T, j.exo, j.fb, j.seed});
    r.variant = drift_variant(j.exo, j.fb);
    r.run_id = run_id(cfg.experiment, r.variant, j.T, j.seed);
    out.runs[i] = std::move(r);
  });

  const int heldout = cfg.heldout_horizon();
  const auto cm_all = aggregate(out.runs);
  std::vector<ConfigMean> cm_cal, cm_held;
  for (const auto& c : cm_all) {
    if (c.gap.n == 0) continue;
    (c.T == heldout ? cm_held : cm_cal).push_back(c);
  }
  std::vector<ConfigMean> cm_fit = cm_cal;
  cm_fit.insert(cm_fit.end(), cm_held.begin(), cm_held.end());

  const LabeledDesign des = drift_design(cm_cal);
  const Calibration cal = calibrate_alpha(des, mean_gaps(cm_cal), "d_bar", "kappa_bar");
  set_budgets(out.runs, cal.alpha);

  std::vector<double> Ts, gaps, d_rates, k_rates;
  for (const auto& c : cm_fit) {
    Ts.push_back(c.T);
    gaps.push_back(c.gap.mean);
    d_rates.push_back(c.d_bar);
    k_rates.push_back(c.kappa_bar);
  }
  const auto rates = budget_rates(cm_fit, cal.alpha);
  const AblationResult abl = ablation_compare(gaps, d_rates, k_rates, rates, Ts);

  std::vector<double> held_rates = budget_rates(cm_held, cal.alpha), held_gaps, held_Ts;
  for (const auto& c : cm_held) {
    held_gaps.push_back(c.gap.mean);
    held_Ts.push_back(c.T);
  }
  json held = nullptr;
  if (held_gaps.size() >= 3) {
    const OlsFit f = collapse_fit(held_gaps, held_rates, held_Ts);
    held = {{"T", heldout}, {"intercept", f.coef(0)}, {"slope", f.coef(1)}, {"r2", f.r2}};
  }

  json stationary = nullptr;
  {
    std::vector<double> sT, sg;
    for (const auto& c : cm_fit) {
      if (c.exo == 0.0 && c.feedback == 0.0) {
        sT.push_back(c.T);
        sg.push_back(c.gap.mean);
      }
    }
    if (sT.size() >= 2) {
      std::vector<std::size_t> order(sT.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sT[a] < sT[b]; });
      std::vector<double> oT, og;
      for (auto k : order) {
        oT.push_back(sT[k]);
        og.push_back(sg[k]);
      }
      stationary = {{"horizons", oT}, {"mean_gap", og}, {"loglog_slope", log_log_slope(oT, og)}};
    }
  }

  std::size_t finished = 0, improved = 0;
  json diverged = json::array();
  for (const auto& r : out.runs) {
    if (r.diverged) {
      diverged.push_back(r.run_id);
      continue;
    }
    ++finished;
    if (r.aux2 < r.aux1) ++improved;
  }

  out.summary = base_summary(cfg, cal.alpha,
                             {{"aux1", "population MSE at initialization"},
                              {"aux2", "population MSE after the final step"},
                              {"c_t", "sum_d + alpha * sum_kappa"},
                              {"diverged_rows", "risk columns are nan"}});
  out.summary["heldout_horizon"] = heldout;
  out.summary["calibration"] = fit_json(des.labels, cal.fit);
  out.summary["ablation"] = {{"regressors", "intercept, T^-1/2, C_T/T"},
                             {"r2_full", abl.r2_full},
                             {"r2_no_budget", abl.r2_no_budget},
                             {"r2_no_variance", abl.r2_no_variance},
                             {"r2_decomposed", abl.r2_decomposed}};
  out.summary["heldout_collapse"] = held;
  out.summary["stationary"] = stationary;
  out.summary["training_progress"] = {
      {"finished_runs", finished},
      {"improved_runs", improved},
      {"fraction_improved", finished ? static_cast<double>(improved) / finished : kNaN}};
  out.summary["diverged_runs"] = diverged;
  out.summary["config_means"] = config_means_json(cm_all, cal.alpha);
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentId::exp1: return run_exp1(cfg);
    case ExperimentId::exp2: return run_exp2(cfg);
    case ExperimentId::exp3: return run_exp3(cfg);
    case ExperimentId::exp4: return run_exp4(cfg);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace driftlab::harness
