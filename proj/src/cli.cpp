#include "eio/cli.hpp"

#include "eio/datagen.hpp"
#include "eio/estimator.hpp"
#include "eio/harness.hpp"
#include "eio/io.hpp"
#include "eio/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

namespace eio {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> x;
  std::optional<int> replicates;
};

void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!obj.is_object())
    throw InvalidInputError("config section '" + where + "' must be a JSON object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw InvalidInputError("unknown config key '" + item.key() + "' in " + where);
}

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  Json cfg;
  try {
    cfg = Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInputError(std::string("config parse error: ") + e.what());
  }
  if (!cfg.is_object()) throw InvalidInputError("config root must be a JSON object");
  return cfg;
}

template <typename T>
T get_or(const Json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInputError("config key '" + key + "' has the wrong type");
  }
}

SignalPenalty parse_signal_penalty(const Json& j) {
  reject_unknown_keys(j, {"kind", "g2", "g2_diag", "w2", "beta", "j_keep"},
                      "penalty.signal");
  const std::string kind = get_or<std::string>(j, "kind", "none");
  if (kind == "none") return SignalPenalty::none();
  if (kind == "ridge") return SignalPenalty::ridge(get_or<double>(j, "g2", 1.0));
  if (kind == "diagonal") {
    const auto vals = get_or<std::vector<double>>(j, "g2_diag", {});
    if (vals.empty()) throw InvalidInputError("diagonal signal penalty needs g2_diag");
    VectorXd g2(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) g2(static_cast<Eigen::Index>(i)) = vals[i];
    return SignalPenalty::diagonal(g2);
  }
  if (kind == "roughness")
    return SignalPenalty::roughness(get_or<double>(j, "w2", 1.0),
                                    get_or<double>(j, "beta", 1.0));
  if (kind == "truncation") return SignalPenalty::truncation(get_or<int>(j, "j_keep", 1));
  throw InvalidInputError("unknown signal penalty kind '" + kind + "'");
}

OperatorPenalty parse_operator_penalty(const Json& j) {
  reject_unknown_keys(j, {"kind", "k2", "k2_rows", "m_keep"}, "penalty.operator");
  const std::string kind = get_or<std::string>(j, "kind", "none");
  if (kind == "none") return OperatorPenalty::none();
  if (kind == "row_scalar") {
    const auto vals = get_or<std::vector<double>>(j, "k2_rows", {});
    if (vals.empty()) throw InvalidInputError("row_scalar operator penalty needs k2_rows");
    VectorXd k2(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) k2(static_cast<Eigen::Index>(i)) = vals[i];
    return OperatorPenalty::row_scalar(k2);
  }
  if (kind == "row_truncation")
    return OperatorPenalty::row_truncation(get_or<int>(j, "m_keep", 1));
  if (kind == "elementwise")
    throw InvalidInputError("elementwise operator penalty is not configurable from JSON; "
                            "use row_scalar or row_truncation");
  throw InvalidInputError("unknown operator penalty kind '" + kind + "'");
}

PenaltyConfig parse_penalty(const Json& cfg) {
  PenaltyConfig pen = PenaltyConfig::zero();
  if (!cfg.contains("penalty")) return pen;
  const Json& j = cfg.at("penalty");
  reject_unknown_keys(j, {"signal", "operator"}, "penalty");
  if (j.contains("signal")) pen.signal = parse_signal_penalty(j.at("signal"));
  if (j.contains("operator")) pen.op = parse_operator_penalty(j.at("operator"));
  return pen;
}

Json penalty_echo(const Json& cfg) {
  return cfg.contains("penalty") ? cfg.at("penalty")
                                 : Json{{"signal", {{"kind", "none"}}},
                                        {"operator", {{"kind", "none"}}}};
}

DirectModelSpec parse_direct_model(const Json& j, const CommonFlags& flags) {
  reject_unknown_keys(j,
                      {"p", "q", "s", "beta", "c_w", "n1", "mu2", "sigma_omega",
                       "sigma_u", "delta0", "g0", "seed"},
                      "model");
  DirectModelSpec spec;
  spec.p = get_or<int>(j, "p", spec.p);
  spec.q = get_or<int>(j, "q", spec.q);
  spec.s = get_or<double>(j, "s", spec.s);
  spec.beta = get_or<double>(j, "beta", spec.beta);
  spec.c_w = get_or<double>(j, "c_w", spec.c_w);
  spec.n1 = get_or<double>(j, "n1", spec.n1);
  spec.mu2 = get_or<double>(j, "mu2", spec.mu2);
  spec.sigma_omega = get_or<double>(j, "sigma_omega", spec.sigma_omega);
  spec.sigma_u = get_or<double>(j, "sigma_u", spec.sigma_u);
  spec.delta0 = get_or<double>(j, "delta0", spec.delta0);
  spec.g0 = get_or<double>(j, "g0", spec.g0);
  spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
  if (flags.seed) spec.seed = *flags.seed;
  return spec;
}

Json model_echo(const DirectModelSpec& spec) {
  return Json{{"p", spec.p},
              {"q", spec.q},
              {"s", spec.s},
              {"beta", spec.beta},
              {"c_w", spec.c_w},
              {"n1", spec.n1},
              {"mu2", spec.mu2},
              {"sigma_omega", spec.sigma_omega},
              {"sigma_u", spec.sigma_u},
              {"delta0", spec.delta0},
              {"g0", spec.g0},
              {"seed", spec.seed}};
}

Json vector_json(const VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i)));
  return rows;
}

void write_json(const fs::path& path, const Json& j) {
  write_text(path.string(), j.dump(2) + "\n");
}

int cmd_simulate(const CommonFlags& flags) {
  Json cfg = load_config(flags.config_path);
  reject_unknown_keys(cfg, {"generator", "model"}, "config");
  const std::string generator = get_or<std::string>(cfg, "generator", "direct");
  if (generator != "direct")
    throw InvalidInputError("simulate supports generator 'direct' (got '" + generator +
                            "')");
  const DirectModelSpec spec =
      parse_direct_model(cfg.contains("model") ? cfg.at("model") : Json::object(), flags);
  const Instance inst = gen_direct(spec);

  const fs::path out(flags.out_dir);
  fs::create_directories(out);
  write_csv((out / "Z.csv").string(), inst.obs.z_obs);
  write_csv((out / "A_hat.csv").string(), inst.obs.a_hat);
  const Json echo{{"generator", "direct"}, {"model", model_echo(spec)}};
  write_json(out / "meta.json", Json{{"p", spec.p},
                                     {"q", spec.q},
                                     {"mu2", spec.mu2},
                                     {"seed", spec.seed},
                                     {"generator", "direct"},
                                     {"effective_config", echo}});
  write_json(out / "truth.json",
             Json{{"theta_star", vector_json(inst.truth.theta_star)},
                  {"a_star", matrix_json(inst.truth.a_star)},
                  {"n_eff", inst.region.n_eff},
                  {"radius", inst.region.radius}});
  return 0;
}

int cmd_estimate(const CommonFlags& flags) {
  Json cfg = load_config(flags.config_path);
  reject_unknown_keys(cfg, {"instance_dir", "z_path", "a_hat_path", "mu2", "penalty"},
                      "config");
  std::string z_path = get_or<std::string>(cfg, "z_path", "");
  std::string a_path = get_or<std::string>(cfg, "a_hat_path", "");
  double mu2 = get_or<double>(cfg, "mu2", 0.0);
  if (cfg.contains("instance_dir")) {
    const fs::path dir(cfg.at("instance_dir").get<std::string>());
    if (z_path.empty()) z_path = (dir / "Z.csv").string();
    if (a_path.empty()) a_path = (dir / "A_hat.csv").string();
    if (mu2 == 0.0) {
      const Json meta = Json::parse(read_text((dir / "meta.json").string()));
      mu2 = meta.at("mu2").get<double>();
    }
  }
  if (z_path.empty() || a_path.empty())
    throw InvalidInputError("estimate needs instance_dir or z_path + a_hat_path");
  if (mu2 <= 0) throw InvalidInputError("estimate needs a positive mu2");

  Observation obs;
  obs.z_obs = read_csv_vector(z_path);
  obs.a_hat = read_csv_matrix(a_path);
  obs.mu2 = mu2;
  if (obs.a_hat.rows() != obs.z_obs.size())
    throw InvalidInputError("dimension mismatch: Z has " +
                            std::to_string(obs.z_obs.size()) + " rows but A_hat has " +
                            std::to_string(obs.a_hat.rows()));
  const PenaltyConfig pen = parse_penalty(cfg);
  const FitResult fit = maximize(obs, pen);

  const fs::path out(flags.out_dir);
  fs::create_directories(out);
  Json report{{"theta", vector_json(fit.param.theta)},
              {"z", vector_json(fit.param.z)},
              {"objective", fit.objective},
              {"grad_norm", fit.grad_norm},
              {"iters", fit.iters},
              {"converged", fit.converged},
              {"effective_config",
               Json{{"z_path", z_path},
                    {"a_hat_path", a_path},
                    {"mu2", mu2},
                    {"penalty", penalty_echo(cfg)}}}};
  if (fit.region) {
    report["region"] = Json{{"d_theta_norm", fit.region->d_theta_norm},
                            {"z_norm", fit.region->z_norm},
                            {"op_frobenius", fit.region->op_frobenius},
                            {"pass", fit.region->pass}};
  }
  write_json(out / "fit.json", report);
  return 0;
}

Json study_json(const StudyReport& rep) {
  Json j{{"study", rep.study},
         {"replicates", rep.replicates},
         {"converged", rep.converged},
         {"excluded", rep.excluded},
         {"coverage", rep.coverage},
         {"target", rep.target},
         {"applicable", rep.applicable},
         {"pass", rep.pass}};
  if (rep.study == "risk") {
    j["mc_risk"] = rep.mc_risk;
    j["benchmark_risk"] = rep.benchmark_risk;
    j["risk_ratio"] = rep.risk_ratio;
    j["r_q"] = rep.r_q;
    j["alpha_q"] = rep.alpha_q;
    j["interval"] = Json::array({rep.interval_lo, rep.interval_hi});
  }
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

std::string records_csv(const StudyReport& rep) {
  std::string out;
  for (const auto& r : rep.records) {
    out += std::to_string(r.id);
    out += ',';
    out += r.converged ? '1' : '0';
    char buf[80];
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,", r.observed, r.bound,
                  r.benchmark);
    out += buf;
    out += r.pass ? '1' : '0';
    out += '\n';
  }
  return out;
}

int cmd_verify(const CommonFlags& flags) {
  Json cfg = load_config(flags.config_path);
  reject_unknown_keys(cfg, {"studies", "model", "penalty", "replicates", "x", "jobs"},
                      "config");
  StudyConfig study = StudyConfig::reference();
  if (cfg.contains("model"))
    study.model = parse_direct_model(cfg.at("model"), flags);
  else if (flags.seed)
    study.model.seed = *flags.seed;
  if (cfg.contains("penalty")) study.penalty = parse_penalty(cfg);
  study.replicates = get_or<int>(cfg, "replicates", study.replicates);
  study.x = get_or<double>(cfg, "x", study.x);
  study.jobs = get_or<int>(cfg, "jobs", study.jobs);
  if (flags.replicates) study.replicates = *flags.replicates;
  if (flags.x) study.x = *flags.x;
  if (flags.jobs) study.jobs = *flags.jobs;
  if (study.replicates < 1) throw InvalidInputError("replicate count must be >= 1");

  std::vector<std::string> studies =
      get_or<std::vector<std::string>>(cfg, "studies", {"fisher", "wilks", "risk"});

  const fs::path out(flags.out_dir);
  fs::create_directories(out);
  Json report;
  report["effective_config"] =
      Json{{"model", model_echo(study.model)},
           {"penalty", penalty_echo(cfg)},
           {"replicates", study.replicates},
           {"x", study.x},
           {"studies", studies}};
  std::string status = "ok";
  Json results = Json::array();
  for (const auto& name : studies) {
    try {
      StudyReport rep;
      if (name == "fisher") {
        rep = run_fisher_study(study);
      } else if (name == "wilks") {
        rep = run_wilks_study(study);
      } else if (name == "risk") {
        rep = run_risk_study(study);
      } else {
        throw InvalidInputError("unknown study '" + name + "'");
      }
      results.push_back(study_json(rep));
      write_text((out / (name + "_replicates.csv")).string(), records_csv(rep));
    } catch (const InvalidInputError& e) {
      // Applicability violations are a verdict, not a failure.
      const std::string msg = e.what();
      if (msg.find("slack") == std::string::npos) throw;
      status = "inapplicable";
      results.push_back(Json{{"study", name},
                             {"applicable", false},
                             {"pass", false},
                             {"note", msg}});
    }
  }
  report["status"] = status;
  report["studies"] = results;
  write_json(out / "verify.json", report);
  return 0;
}

std::string rate_svg(const RateReport& rep) {
  const double w = 480, h = 320, ml = 60, mb = 40, mt = 20, mr = 20;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& pt : rep.points) {
    if (pt.converged == 0 || pt.mean_risk <= 0) continue;
    const double x = std::log10(pt.n1), y = std::log10(pt.mean_risk);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mb - mt); };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" "
                    "height=\"320\" viewBox=\"0 0 480 320\">\n";
  svg += "<rect width=\"480\" height=\"320\" fill=\"white\"/>\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                ml, h - mb, w - mr, h - mb);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                ml, mt, ml, h - mb);
  svg += buf;
  std::string poly = "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" "
                     "points=\"";
  for (const auto& pt : rep.points) {
    if (pt.converged == 0 || pt.mean_risk <= 0) continue;
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(std::log10(pt.n1)),
                  py(std::log10(pt.mean_risk)));
    poly += buf;
  }
  poly += "\"/>\n";
  svg += poly;
  for (const auto& pt : rep.points) {
    if (pt.converged == 0 || pt.mean_risk <= 0) continue;
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"steelblue\"/>\n",
                  px(std::log10(pt.n1)), py(std::log10(pt.mean_risk)));
    svg += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\">log10 N1</text>\n",
                (ml + w - mr) / 2 - 30, h - 10);
  svg += buf;
  std::snprintf(
      buf, sizeof(buf),
      "<text x=\"14\" y=\"%.1f\" font-size=\"12\" transform=\"rotate(-90 14 %.1f)\">"
      "log10 risk</text>\n",
      (mt + h - mb) / 2 + 30, (mt + h - mb) / 2 + 30);
  svg += buf;
  if (rep.slope_defined) {
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\">slope %.3f "
                  "(predicted %.3f)</text>\n",
                  ml + 10, mt + 16, rep.slope, rep.predicted_exponent);
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

int cmd_rate_study(const CommonFlags& flags) {
  Json cfg = load_config(flags.config_path);
  reject_unknown_keys(cfg,
                      {"s", "beta", "c_w", "n1_grid", "replicates", "p", "q", "mu2",
                       "sigma_omega", "sigma_u", "rho", "seed", "jobs", "svg"},
                      "config");
  RateStudyConfig rc;
  rc.s = get_or<double>(cfg, "s", rc.s);
  rc.beta = get_or<double>(cfg, "beta", rc.beta);
  rc.c_w = get_or<double>(cfg, "c_w", rc.c_w);
  rc.n1_grid = get_or<std::vector<double>>(cfg, "n1_grid", rc.n1_grid);
  rc.replicates = get_or<int>(cfg, "replicates", rc.replicates);
  rc.p = get_or<int>(cfg, "p", rc.p);
  rc.q = get_or<int>(cfg, "q", rc.q);
  rc.mu2 = get_or<double>(cfg, "mu2", rc.mu2);
  rc.sigma_omega = get_or<double>(cfg, "sigma_omega", rc.sigma_omega);
  rc.sigma_u = get_or<double>(cfg, "sigma_u", rc.sigma_u);
  rc.rho = get_or<double>(cfg, "rho", rc.rho);
  rc.seed = get_or<std::uint64_t>(cfg, "seed", rc.seed);
  rc.jobs = get_or<int>(cfg, "jobs", rc.jobs);
  const bool emit_svg = get_or<bool>(cfg, "svg", true);
  if (flags.seed) rc.seed = *flags.seed;
  if (flags.jobs) rc.jobs = *flags.jobs;
  if (flags.replicates) rc.replicates = *flags.replicates;

  const RateReport rep = run_rate_study(rc);

  const fs::path out(flags.out_dir);
  fs::create_directories(out);
  Json points = Json::array();
  std::string csv;
  for (const auto& pt : rep.points) {
    points.push_back(Json{{"n1", pt.n1},
                          {"j", pt.j},
                          {"m", pt.m},
                          {"mean_risk", pt.mean_risk},
                          {"se", pt.se},
                          {"converged", pt.converged},
                          {"excluded", pt.excluded}});
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g,%d,%d,%.17g,%.17g,%d,%d\n", pt.n1, pt.j, pt.m,
                  pt.mean_risk, pt.se, pt.converged, pt.excluded);
    csv += buf;
  }
  Json report{{"points", points},
              {"predicted_exponent", rep.predicted_exponent},
              {"effective_config",
               Json{{"s", rc.s},
                    {"beta", rc.beta},
                    {"c_w", rc.c_w},
                    {"n1_grid", rc.n1_grid},
                    {"replicates", rc.replicates},
                    {"p", rc.p},
                    {"q", rc.q},
                    {"mu2", rc.mu2},
                    {"sigma_omega", rc.sigma_omega},
                    {"sigma_u", rc.sigma_u},
                    {"rho", rc.rho},
                    {"seed", rc.seed}}}};
  if (rep.slope_defined) {
    report["slope"] = rep.slope;
    report["pass"] = rep.pass;
    if (rep.ci_defined)
      report["slope_se"] = rep.slope_se;
    else
      report["slope_se"] = nullptr;
  } else {
    report["slope"] = nullptr;
    report["note"] = "slope undefined: need at least two grid points with positive risk";
  }
  write_json(out / "rate.json", report);
  write_text((out / "rate.csv").string(), csv);
  if (emit_svg) write_text((out / "rate.svg").string(), rate_svg(rep));
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"error-in-operator estimation toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON config file");
    sub->add_option("--out", flags.out_dir, "output directory");
    sub->add_option("--seed", flags.seed, "seed override");
    sub->add_option("--jobs", flags.jobs, "parallel worker count");
    sub->add_option("--x", flags.x, "confidence parameter");
    sub->add_option("--replicates", flags.replicates, "replicate count override");
  };
  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic instance");
  CLI::App* est = app.add_subcommand("estimate", "fit an instance from files");
  CLI::App* ver = app.add_subcommand("verify", "run bound-verification studies");
  CLI::App* rate = app.add_subcommand("rate-study", "risk-rate study over a grid");
  for (CLI::App* sub : {sim, est, ver, rate}) add_common(sub);

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(flags);
    if (est->parsed()) return cmd_estimate(flags);
    if (ver->parsed()) return cmd_verify(flags);
    if (rate->parsed()) return cmd_rate_study(flags);
    return 2;
  } catch (const InvalidInputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InfeasibleParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 1;
  }
}

}  // namespace eio
