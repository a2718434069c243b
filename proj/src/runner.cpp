#include "lsvi/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lsvi/data.hpp"
#include "lsvi/gaussian.hpp"
#include "lsvi/targets.hpp"

namespace lsvi {

namespace {

std::unique_ptr<Family> make_family(const RunConfig& cfg) {
  const int d = static_cast<int>(*cfg.family_block.get_int("d"));
  if (cfg.family == "full_cov") return std::make_unique<FullCovGaussian>(d);
  if (cfg.family == "mean_field") return std::make_unique<MeanFieldGaussian>(d);
  if (cfg.family == "bernoulli") return std::make_unique<BernoulliProduct>(d);
  const Eigen::VectorXd lo = *cfg.family_block.get_vector("box_lo");
  const Eigen::VectorXd hi = *cfg.family_block.get_vector("box_hi");
  if (lo.size() != d || hi.size() != d)
    throw ConfigError("family: box_lo/box_hi must have length d");
  return std::make_unique<TruncatedMeanField>(lo, hi);
}

Eigen::VectorXd logistic_prior_variances(const ConfigNode& t, int d, bool has_intercept) {
  const double pv = t.get_number("prior_var").value_or(25.0);
  const double ipv = t.get_number("intercept_prior_var").value_or(400.0);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(d, pv);
  if (has_intercept) out[0] = ipv;
  return out;
}

Dataset logistic_dataset(const ConfigNode& t, std::uint64_t seed) {
  Dataset ds;
  if (const auto csv = t.get("csv")) {
    LabelCoding coding;
    coding.negative = t.get_number("neg").value_or(0.0);
    coding.positive = t.get_number("pos").value_or(1.0);
    ds = load_csv(*csv, t.get("label").value_or("y"), coding);
  } else {
    const auto n = t.get_int("synth_n");
    const auto d = t.get_int("synth_d");
    if (!n || !d) throw ConfigError("target logistic: need `csv` or `synth_n`+`synth_d`");
    RngStream stream(seed, 0x64617461u);
    ds = synth_logistic(static_cast<int>(*n), static_cast<int>(*d), stream);
  }
  if (t.get_bool("preprocess").value_or(true)) ds = preprocess_logistic(ds);
  return ds;
}

std::unique_ptr<Target> make_run_target(const RunConfig& cfg) {
  const std::string kind = *cfg.target.get("kind");
  if (kind == "gaussian") {
    const auto mu = cfg.target.get_vector("mu");
    const auto var = cfg.target.get_vector("var");
    if (!mu || !var || mu->size() != var->size())
      throw ConfigError("target gaussian: need matching `mu` and `var` vectors");
    if (!(var->array() > 0.0).all())
      throw ConfigError("target gaussian: `var` must be positive");
    const Eigen::VectorXd m = *mu;
    const Eigen::VectorXd v = *var;
    const int d = static_cast<int>(m.size());
    auto fn = [m, v](const Eigen::Ref<const Eigen::VectorXd>& x) {
      return -0.5 * ((x - m).array().square() / v.array()).sum();
    };
    return std::make_unique<FunctionTarget<decltype(fn)>>(d, fn);
  }
  if (kind == "logistic" || kind == "logistic_subsampled") {
    Dataset ds = logistic_dataset(cfg.target, cfg.seed);
    const int d = static_cast<int>(ds.x.cols());
    const bool has_intercept = (ds.x.col(0).array() == 1.0).all();
    const Eigen::VectorXd pv = logistic_prior_variances(cfg.target, d, has_intercept);
    if (kind == "logistic")
      return std::make_unique<LogisticTarget>(ds.x, ds.y, pv);
    const auto batch = cfg.target.get_int("batch");
    if (!batch) throw ConfigError("target logistic_subsampled: missing key `batch`");
    return std::make_unique<SubsampledLogisticTarget>(ds.x, ds.y, pv,
                                                      static_cast<int>(*batch));
  }
  if (kind == "varsel") {
    const auto n = cfg.target.get_int("synth_n");
    const auto d = cfg.target.get_int("synth_d");
    if (!n || !d) throw ConfigError("target varsel: need `synth_n` and `synth_d`");
    const int sparsity = static_cast<int>(cfg.target.get_int("sparsity").value_or(3));
    const double noise = cfg.target.get_number("noise_std").value_or(1.0);
    RngStream stream(cfg.seed, 0x76617273u);
    VarSelInstance inst =
        synth_varsel(static_cast<int>(*n), static_cast<int>(*d), sparsity, noise, stream);
    const VarSelHyper hyper = hyperparams_from_data(inst.data.x, inst.data.y);
    return std::make_unique<VarSelTarget>(inst.data.x, inst.data.y, hyper);
  }
  if (kind == "bsl_toad" || kind == "bsl_toad_logit") {
    ToadConfig tc;
    tc.n_toads = static_cast<int>(cfg.target.get_int("toads").value_or(66));
    tc.n_days = static_cast<int>(cfg.target.get_int("days").value_or(63));
    tc.replicates = static_cast<int>(cfg.target.get_int("replicates").value_or(100));
    tc.shrinkage = cfg.target.get_number("shrinkage").value_or(0.5);
    Theta star;
    if (const auto ts = cfg.target.get_vector("theta_star")) {
      if (ts->size() != 3) throw ConfigError("target bsl: theta_star needs 3 numbers");
      star = Theta{(*ts)[0], (*ts)[1], (*ts)[2]};
    }
    const std::uint64_t obs_seed =
        static_cast<std::uint64_t>(cfg.target.get_int("obs_seed").value_or(20240101));
    RngStream obs_stream(obs_seed, 0x6f627331u);
    if (kind == "bsl_toad")
      return std::make_unique<BslToadTarget>(
          BslToadTarget::from_simulation(tc, star, obs_stream));
    return std::make_unique<BslToadLogitTarget>(
        BslToadLogitTarget::from_simulation(tc, star, obs_stream));
  }
  throw ConfigError("target: unknown kind `" + kind + "`");
}

Eigen::VectorXd make_eta0(const RunConfig& cfg, const Family& family) {
  const int d = family.dim();
  if (cfg.family == "full_cov") {
    const Eigen::VectorXd mu =
        cfg.init.get_vector("mu").value_or(Eigen::VectorXd::Zero(d));
    const double scale = cfg.init.get_number("sigma_scale").value_or(1.0);
    Eigen::VectorXd var =
        cfg.init.get_vector("var").value_or(Eigen::VectorXd::Constant(d, scale));
    if (mu.size() != d || var.size() != d)
      throw ConfigError("init: mu/var must have length d");
    const auto& fam = static_cast<const FullCovGaussian&>(family);
    return fam.eta_from_mean_cov(mu, var.asDiagonal());
  }
  if (cfg.family == "mean_field" || cfg.family == "truncated_mf") {
    const Eigen::VectorXd mu =
        cfg.init.get_vector("mu").value_or(Eigen::VectorXd::Zero(d));
    const Eigen::VectorXd sigma2 =
        cfg.init.get_vector("sigma2").value_or(Eigen::VectorXd::Ones(d));
    if (mu.size() != d || sigma2.size() != d)
      throw ConfigError("init: mu/sigma2 must have length d");
    Eigen::VectorXd canonical(2 * d);
    canonical.head(d) = mu;
    canonical.tail(d) = sigma2;
    return family.from_canonical(canonical);
  }
  const Eigen::VectorXd q =
      cfg.init.get_vector("q").value_or(Eigen::VectorXd::Constant(d, 0.5));
  if (q.size() != d) throw ConfigError("init: q must have length d");
  return family.from_canonical(q);
}

StepsizePolicy make_policy(const RunConfig& cfg) {
  const std::string mode = cfg.stepsize.get("mode").value_or("fixed");
  StepsizePolicy policy =
      mode == "fixed"
          ? StepsizePolicy::fixed(cfg.stepsize.get_number("epsilon").value_or(1.0))
          : StepsizePolicy::linear(cfg.stepsize.get_number("l").value_or(1.0),
                                   cfg.stepsize.get_number("alpha").value_or(1.0));
  if (const auto u = cfg.stepsize.get_number("u")) {
    if (std::isfinite(*u)) policy = StepsizePolicy::with_variance_control(*u, policy);
  }
  if (const auto mh = cfg.stepsize.get_int("max_halvings"))
    policy.max_halvings = static_cast<int>(*mh);
  policy.validate();
  return policy;
}

}  // namespace

Experiment build_experiment(const RunConfig& cfg) {
  Experiment exp;
  exp.family = make_family(cfg);
  exp.target = make_run_target(cfg);
  if (exp.target->dim() != exp.family->dim())
    throw ConfigError("target dimension " + std::to_string(exp.target->dim()) +
                      " does not match family dimension " +
                      std::to_string(exp.family->dim()));
  exp.eta0 = make_eta0(cfg, *exp.family);
  exp.policy = make_policy(cfg);
  exp.options.kl_every = cfg.kl_every;
  exp.options.kl_mode = cfg.kl_mode == "fresh"  ? KlMode::Fresh
                        : cfg.kl_mode == "reuse" ? KlMode::Reuse
                                                 : KlMode::Off;
  return exp;
}

RunResult execute_run(const RunConfig& cfg) {
  Experiment exp = build_experiment(cfg);
  return execute_run(cfg, exp);
}

RunResult execute_run(const RunConfig& cfg, Experiment& exp) {
  RngStream stream(cfg.seed, 0x6c737669u);
  if (cfg.algorithm == "generic")
    return run_generic(*exp.family, *exp.target, exp.eta0, cfg.n, cfg.t, exp.policy, stream,
                       exp.options);
  if (cfg.algorithm == "fc") {
    const auto& fam = static_cast<const FullCovGaussian&>(*exp.family);
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    fam.mean_cov(exp.eta0, mu, sigma);
    return run_fc(*exp.target, mu, sigma, cfg.n, cfg.t, exp.policy, stream, exp.options);
  }
  const auto& fam = static_cast<const MeanFieldGaussian&>(*exp.family);
  Eigen::VectorXd mu, sigma2;
  fam.mean_var(exp.eta0, mu, sigma2);
  return run_mf(*exp.target, mu, sigma2, cfg.n, cfg.t, exp.policy, stream, exp.options);
}

int command_validate(const std::string& config_path) {
  try {
    const ConfigDoc doc = parse_config_file(config_path);
    const ValidationReport report = validate_config(doc);
    if (!report.ok()) {
      std::cerr << report.to_string();
      return 2;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}

int command_run(const std::string& config_path) {
  RunConfig cfg;
  try {
    const ConfigDoc doc = parse_config_file(config_path);
    const ValidationReport report = validate_config(doc, &cfg);
    if (!report.ok()) {
      std::cerr << report.to_string();
      return 2;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  try {
    const auto started = std::chrono::steady_clock::now();
    Experiment exp = build_experiment(cfg);
    const RunResult result = execute_run(cfg, exp);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::filesystem::create_directories(cfg.out_dir);
    {
      std::ofstream out(cfg.out_dir + "/trace.csv");
      out << result.trace.to_csv();
    }
    {
      std::ofstream out(cfg.out_dir + "/final.params");
      out << canonical_to_record(*exp.family, exp.family->to_canonical(result.eta)) << '\n';
    }
    {
      std::ofstream out(cfg.out_dir + "/meta");
      out << "version: lsvi " << kVersion << '\n';
      out << "seed: " << cfg.seed << '\n';
      out << "algorithm: " << cfg.algorithm << '\n';
      out << "family: " << cfg.family << '\n';
      out << "n: " << cfg.n << '\n';
      out << "t: " << cfg.t << '\n';
      out << "wall_time_s: " << wall << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 3;
  }
}

int command_targets() {
  std::cout << describe_targets();
  return 0;
}

}  // namespace lsvi
