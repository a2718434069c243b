#include "lsvi/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lsvi/errors.hpp"

namespace lsvi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
  const auto pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

}  // namespace

std::optional<std::string> ConfigNode::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

std::optional<double> ConfigNode::get_number(const std::string& key) const {
  const auto raw = get(key);
  if (!raw) return std::nullopt;
  if (*raw == "inf" || *raw == "infinity") return HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(raw->c_str(), &end);
  if (end == raw->c_str() || *end != '\0')
    throw ConfigError("key `" + key + "`: `" + *raw + "` is not a number");
  return v;
}

std::optional<std::int64_t> ConfigNode::get_int(const std::string& key) const {
  const auto v = get_number(key);
  if (!v) return std::nullopt;
  if (*v != std::floor(*v))
    throw ConfigError("key `" + key + "`: expected an integer");
  return static_cast<std::int64_t>(*v);
}

std::optional<bool> ConfigNode::get_bool(const std::string& key) const {
  const auto raw = get(key);
  if (!raw) return std::nullopt;
  if (*raw == "true" || *raw == "1" || *raw == "yes") return true;
  if (*raw == "false" || *raw == "0" || *raw == "no") return false;
  throw ConfigError("key `" + key + "`: `" + *raw + "` is not a boolean");
}

std::optional<Eigen::VectorXd> ConfigNode::get_vector(const std::string& key) const {
  const auto raw = get(key);
  if (!raw) return std::nullopt;
  std::istringstream is(*raw);
  std::vector<double> vals;
  std::string tok;
  while (is >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw ConfigError("key `" + key + "`: `" + tok + "` is not a number");
    vals.push_back(v);
  }
  if (vals.empty()) throw ConfigError("key `" + key + "`: empty vector");
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
}

const ConfigNode* ConfigDoc::block(const std::string& name) const {
  const auto it = blocks.find(name);
  return it == blocks.end() ? nullptr : &it->second;
}

ConfigDoc parse_config_text(const std::string& text) {
  ConfigDoc doc;
  std::istringstream is(text);
  std::string line;
  ConfigNode* current = &doc.top;
  std::string open_block;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s == "}") {
      if (open_block.empty())
        throw ParseError("config line " + std::to_string(lineno) + ": stray `}`");
      open_block.clear();
      current = &doc.top;
      continue;
    }
    if (s.size() > 1 && s.back() == '{') {
      if (!open_block.empty())
        throw ParseError("config line " + std::to_string(lineno) + ": nested blocks");
      open_block = trim(s.substr(0, s.size() - 1));
      if (open_block.empty())
        throw ParseError("config line " + std::to_string(lineno) + ": unnamed block");
      current = &doc.blocks[open_block];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected `key = value`");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError("config line " + std::to_string(lineno) + ": empty key or value");
    current->values[key] = value;
  }
  if (!open_block.empty()) throw ParseError("config: unterminated block `" + open_block + "`");
  return doc;
}

ConfigDoc parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string ValidationReport::to_string() const {
  std::string out;
  for (const auto& e : errors) {
    out += e;
    out += '\n';
  }
  return out;
}

const std::vector<std::string>& known_targets() {
  static const std::vector<std::string> names = {
      "gaussian", "logistic", "logistic_subsampled", "varsel", "bsl_toad", "bsl_toad_logit"};
  return names;
}

std::string describe_targets() {
  std::string out;
  out += "gaussian             in-family Gaussian log-density; keys: mu, var (diagonal)\n";
  out += "logistic             Bayesian logistic regression; keys: csv+label (+neg,pos)\n";
  out += "                     or synth_n+synth_d; prior_var, intercept_prior_var,\n";
  out += "                     preprocess (default true)\n";
  out += "logistic_subsampled  same keys plus batch (minibatch size)\n";
  out += "varsel               variable-selection marginal posterior; keys: synth_n,\n";
  out += "                     synth_d, sparsity, noise_std (hyperparameters from data)\n";
  out += "bsl_toad             synthetic likelihood, toad displacements; keys: toads,\n";
  out += "                     days, replicates, theta_star (3 numbers), obs_seed\n";
  out += "bsl_toad_logit       same model on logit-transformed coordinates\n";
  return out;
}

ValidationReport validate_config(const ConfigDoc& doc, RunConfig* out) {
  ValidationReport report;
  RunConfig cfg;
  auto fail = [&](const std::string& msg) { report.errors.push_back(msg); };

  try {
    const auto alg = doc.top.get("algorithm");
    if (!alg)
      fail("missing key `algorithm` (generic | mf | fc)");
    else if (*alg != "generic" && *alg != "mf" && *alg != "fc")
      fail("algorithm: unknown value `" + *alg + "` (generic | mf | fc)");
    else
      cfg.algorithm = *alg;

    const auto n = doc.top.get_int("n");
    if (!n)
      fail("missing key `n` (samples per iteration)");
    else if (*n < 1)
      fail("n: must be >= 1");
    else
      cfg.n = *n;

    const auto t = doc.top.get_int("t");
    if (!t)
      fail("missing key `t` (iterations)");
    else if (*t < 1)
      fail("t: must be >= 1");
    else
      cfg.t = *t;

    const auto seed = doc.top.get_int("seed");
    if (!seed)
      fail("missing key `seed`");
    else
      cfg.seed = static_cast<std::uint64_t>(*seed);

    const auto outdir = doc.top.get("out");
    if (!outdir)
      fail("missing key `out` (output directory)");
    else
      cfg.out_dir = *outdir;

    if (const auto kl = doc.top.get("kl")) {
      if (*kl != "fresh" && *kl != "reuse" && *kl != "off")
        fail("kl: unknown value `" + *kl + "` (fresh | reuse | off)");
      else
        cfg.kl_mode = *kl;
    }
    if (const auto every = doc.top.get_int("kl_every")) {
      if (*every < 1)
        fail("kl_every: must be >= 1");
      else
        cfg.kl_every = static_cast<int>(*every);
    }

    const ConfigNode* fam = doc.block("family");
    if (!fam) {
      fail("missing block `family { kind = ...; d = ... }`");
    } else {
      cfg.family_block = *fam;
      const auto kind = fam->get("kind");
      if (!kind)
        fail("family: missing key `kind`");
      else if (*kind != "full_cov" && *kind != "mean_field" && *kind != "truncated_mf" &&
               *kind != "bernoulli")
        fail("family: unknown kind `" + *kind +
             "` (full_cov | mean_field | truncated_mf | bernoulli)");
      else
        cfg.family = *kind;
      const auto d = fam->get_int("d");
      if (!d || *d < 1) fail("family: missing or invalid key `d`");
      if (cfg.family == "truncated_mf") {
        if (!fam->get_vector("box_lo") || !fam->get_vector("box_hi"))
          fail("family: truncated_mf needs `box_lo` and `box_hi` vectors");
      }
    }

    if (!cfg.algorithm.empty() && !cfg.family.empty()) {
      if (cfg.algorithm == "mf" && cfg.family != "mean_field")
        fail("algorithm `mf` requires family `mean_field`, got family `" + cfg.family + "`");
      if (cfg.algorithm == "fc" && cfg.family != "full_cov")
        fail("algorithm `fc` requires family `full_cov`, got family `" + cfg.family + "`");
    }

    const ConfigNode* target = doc.block("target");
    if (!target) {
      fail("missing block `target { kind = ... }`");
    } else {
      cfg.target = *target;
      const auto kind = target->get("kind");
      bool known = false;
      if (kind)
        for (const auto& name : known_targets()) known = known || name == *kind;
      if (!kind) {
        fail("target: missing key `kind`");
      } else if (!known) {
        std::string list;
        for (const auto& name : known_targets()) list += " " + name;
        fail("target: unknown kind `" + *kind + "`; available:" + list);
      }
    }

    const ConfigNode* step = doc.block("stepsize");
    if (!step) {
      fail("missing block `stepsize { mode = ... }`");
    } else {
      cfg.stepsize = *step;
      const auto mode = step->get("mode");
      if (!mode)
        fail("stepsize: missing key `mode` (fixed | linear)");
      else if (*mode != "fixed" && *mode != "linear")
        fail("stepsize: unknown mode `" + *mode + "` (fixed | linear)");
      if (mode && *mode == "fixed" && !step->has("epsilon"))
        fail("stepsize: fixed mode needs key `epsilon`");
      if (mode && *mode == "linear" && !step->has("l"))
        fail("stepsize: linear mode needs key `l` (and optional `alpha`)");
    }

    if (const ConfigNode* init = doc.block("init")) cfg.init = *init;
  } catch (const ConfigError& e) {
    fail(e.what());
  } catch (const ParseError& e) {
    fail(e.what());
  }

  if (out && report.ok()) *out = cfg;
  return report;
}

}  // namespace lsvi
