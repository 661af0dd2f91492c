// coneglm: fit generalized linear models under holistic constraints by
// mixed-integer conic optimization. Subcommands: fit, seq, agg, fair-sweep.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coneglm/coneglm.hpp"

namespace {

using namespace coneglm;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSolverLimit = 3;

struct CommonArgs {
  std::string data_path;
  std::string formula_text;
  std::string family = "gaussian";
  std::string link;
  std::string constraints_path;
  double big_m = 100.0;
  std::string scaler = "auto";
  std::string backend = "auto";
  std::string format = "text";
  bool dry_run = false;
  std::string out_path;

  void add_to(CLI::App* cmd, bool with_model = true) {
    cmd->add_option("--data", data_path, "CSV input file")->required();
    if (with_model) {
      cmd->add_option("--formula", formula_text, "model formula")->required();
      cmd->add_option("--family", family, "gaussian | binomial | poisson");
      cmd->add_option("--link", link,
                      "identity | log | logit | probit | sqrt");
      cmd->add_option("--constraints", constraints_path,
                      "constraint list (JSON file)");
      cmd->add_option("--big-m", big_m, "big-M bound on scaled coefficients");
      cmd->add_option("--scaler", scaler,
                      "auto | center_standardization | center_minmax | "
                      "standardization | minmax | off");
      cmd->add_option("--backend", backend, "conic backend name or 'auto'");
      cmd->add_flag("--dry-run", dry_run,
                    "export the optimization problem instead of solving");
    }
    cmd->add_option("--format", format, "text | json");
    cmd->add_option("--out", out_path, "output file (default stdout)");
  }

  std::string default_link() const {
    if (family == "gaussian") return "identity";
    if (family == "binomial") return "logit";
    if (family == "poisson") return "log";
    return "identity";
  }
};

std::ostream& open_out(const CommonArgs& args, std::ofstream& file) {
  if (args.out_path.empty()) return std::cout;
  file.open(args.out_path);
  if (!file) throw InputError("cannot open '" + args.out_path + "' for writing");
  return file;
}

std::string backend_name(const CommonArgs& args) {
  if (const char* env = std::getenv("CONEGLM_BACKEND"); env && *env)
    return env;
  return args.backend;
}

std::vector<ConstraintSpec> load_constraints(const CommonArgs& args,
                                             const DataTable& table) {
  if (args.constraints_path.empty()) return {};
  std::ifstream in(args.constraints_path);
  if (!in) throw InputError("cannot open '" + args.constraints_path + "'");
  nlohmann::json j;
  in >> j;
  auto specs = constraints_from_json(j);
  // resolve fairness sensitive columns against the data table
  for (auto& spec : specs) {
    if (auto* f = std::get_if<FairnessCovariance>(&spec)) {
      f->W.resize(static_cast<Index>(table.n_rows),
                  static_cast<Index>(f->sensitive.size()));
      for (size_t k = 0; k < f->sensitive.size(); ++k) {
        const DataColumn& c = table.column(f->sensitive[k]);
        if (!c.is_numeric)
          throw InputError("sensitive column '" + f->sensitive[k] +
                           "' must be numeric 0/1");
        for (size_t i = 0; i < c.num.size(); ++i)
          f->W(static_cast<Index>(i), static_cast<Index>(k)) = c.num[i];
      }
    }
  }
  return specs;
}

FitOptions make_options(const CommonArgs& args) {
  FitOptions opt;
  opt.big_m = args.big_m;
  opt.scaler = parse_scaler(args.scaler);
  opt.backend = backend_name(args);
  return opt;
}

int exit_code_for(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return kExitOk;
    case SolveStatus::infeasible: return kExitInfeasible;
    default: return kExitSolverLimit;
  }
}

GlmModel load_model(const CommonArgs& args, const DataTable& table) {
  const Formula formula = parse_formula(args.formula_text);
  const ModelData md = build_model_matrix(formula, table);
  const std::string link = args.link.empty() ? args.default_link() : args.link;
  return make_glm_model(md, FamilyLink::parse(args.family, link));
}

int run_fit(const CommonArgs& args) {
  const DataTable table = read_csv(args.data_path);
  const GlmModel model = load_model(args, table);
  const auto specs = load_constraints(args, table);
  const FitOptions opt = make_options(args);

  std::ofstream file;
  std::ostream& out = open_out(args, file);
  if (args.dry_run) {
    out << to_json(hglm_dry_run(model, specs, opt)).dump(1) << "\n";
    return kExitOk;
  }
  const FitResult fit = hglm_fit(model, specs, opt);
  if (args.format == "json") out << fit_to_json(fit).dump(1) << "\n";
  else out << fit_report(fit);
  if (!fit.ok())
    std::cerr << "coneglm: solver: status=" << solve_status_name(fit.status)
              << "\n";
  return exit_code_for(fit.status);
}

int run_seq(const CommonArgs& args, const std::string& k_text) {
  const DataTable table = read_csv(args.data_path);
  const GlmModel model = load_model(args, table);
  const auto specs = load_constraints(args, table);
  const FitOptions opt = make_options(args);

  std::vector<Index> ks;
  if (!k_text.empty()) {
    std::istringstream is(k_text);
    std::string tok;
    while (std::getline(is, tok, ',')) ks.push_back(std::stol(tok));
  }
  const auto rows = hglm_seq(model, specs, ks, opt);

  std::ofstream file;
  std::ostream& out = open_out(args, file);
  if (args.format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json r;
      r["k_max"] = row.k_max;
      if (row.error.empty()) r["fit"] = fit_to_json(row.fit);
      else r["error"] = row.error;
      j.push_back(std::move(r));
    }
    out << j.dump(1) << "\n";
  } else {
    out << sequence_report(rows);
  }
  for (const auto& row : rows)
    if (!row.error.empty() || !row.fit.ok()) return kExitSolverLimit;
  return kExitOk;
}

int run_agg(const CommonArgs& args) {
  const DataTable table = read_csv(args.data_path);
  const Formula formula = parse_formula(args.formula_text);
  const DataTable agg = agg_binomial(formula, table);
  std::ofstream file;
  std::ostream& out = open_out(args, file);
  write_csv(agg, out);
  return kExitOk;
}

// trapezoidal AUC via the rank statistic (ties get average ranks)
double rank_auc(const Vector& score, const Vector& label) {
  const Index n = score.size();
  std::vector<Index> idx(n);
  for (Index i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](Index a, Index b) { return score[a] < score[b]; });
  Vector rank(n);
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && score[idx[j + 1]] == score[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  double n1 = 0, rank_sum = 0;
  for (Index k = 0; k < n; ++k) {
    if (label[k] > 0.5) {
      n1 += 1;
      rank_sum += rank[k];
    }
  }
  const double n0 = static_cast<double>(n) - n1;
  if (n1 == 0 || n0 == 0) return kNaN;
  return (rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n0);
}

int run_fair_sweep(const CommonArgs& args, const std::string& sensitive_text,
                   const std::string& alphas_text, double threshold) {
  const DataTable table = read_csv(args.data_path);
  CommonArgs margs = args;
  if (margs.family == "gaussian") margs.family = "binomial";
  const GlmModel model = load_model(margs, table);
  if (model.family_link().family() != Family::binomial)
    throw InputError("fair-sweep requires a binomial model");
  const FitOptions opt = make_options(margs);

  std::vector<std::string> sensitive;
  {
    std::istringstream is(sensitive_text);
    std::string tok;
    while (std::getline(is, tok, ',')) sensitive.push_back(tok);
  }
  if (sensitive.empty()) throw InputError("fair-sweep needs --sensitive");
  std::vector<double> alphas;
  {
    std::istringstream is(alphas_text);
    std::string tok;
    while (std::getline(is, tok, ',')) alphas.push_back(std::stod(tok));
  }
  if (alphas.empty()) alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (double a : alphas)
    if (a < 0.0 || a > 1.0) throw InputError("alpha grid must lie in [0, 1]");

  Matrix W(model.n(), static_cast<Index>(sensitive.size()));
  for (size_t k = 0; k < sensitive.size(); ++k) {
    const DataColumn& c = table.column(sensitive[k]);
    if (!c.is_numeric)
      throw InputError("sensitive column '" + sensitive[k] + "' must be 0/1");
    for (size_t i = 0; i < c.num.size(); ++i)
      W(static_cast<Index>(i), static_cast<Index>(k)) = c.num[i];
  }

  // s_k = |cov(w^(k), X beta_hat)| from the unconstrained fit
  const auto specs = load_constraints(margs, table);
  const FitResult base = hglm_fit(model, specs, opt);
  if (!base.ok()) {
    std::cerr << "coneglm: solver: unconstrained fit failed, status="
              << solve_status_name(base.status) << "\n";
    return exit_code_for(base.status);
  }
  const Vector eta_hat = model.X() * base.coefficients;
  Vector s(W.cols());
  const double n = static_cast<double>(model.n());
  for (Index k = 0; k < W.cols(); ++k) {
    const double wbar = W.col(k).mean();
    const double ebar = eta_hat.mean();
    s[k] = std::abs(((W.col(k).array() - wbar) * (eta_hat.array() - ebar)).sum() /
                    (n - 1.0));
  }

  std::vector<int> w0(model.n());
  for (Index i = 0; i < model.n(); ++i) w0[i] = W(i, 0) > 0.5 ? 1 : 0;

  std::ofstream file;
  std::ostream& out = open_out(args, file);
  nlohmann::json jrows = nlohmann::json::array();
  if (args.format != "json")
    out << "alpha        DI  accuracy       AUC    status\n";
  int worst = kExitOk;
  for (double alpha : alphas) {
    FairnessCovariance fc;
    fc.sensitive = sensitive;
    fc.W = W;
    for (Index k = 0; k < s.size(); ++k) fc.c.push_back(alpha * s[k]);
    auto sweep_specs = specs;
    sweep_specs.push_back(fc);
    const FitResult fit = hglm_fit(model, sweep_specs, opt);
    double di = kNaN, acc = kNaN, auc = kNaN;
    if (fit.ok()) {
      const Vector mu = fitted_means(model, fit.coefficients);
      std::vector<int> yhat(model.n());
      double correct = 0;
      for (Index i = 0; i < model.n(); ++i) {
        yhat[i] = mu[i] > threshold ? 1 : 0;
        correct += (yhat[i] == (model.y()[i] > 0.5 ? 1 : 0));
      }
      acc = correct / n;
      di = disparate_impact(yhat, w0);
      auc = rank_auc(mu, model.y());
    } else {
      worst = std::max(worst, exit_code_for(fit.status));
    }
    if (args.format == "json") {
      nlohmann::json r;
      r["alpha"] = alpha;
      r["DI"] = std::isnan(di) ? nlohmann::json(nullptr) : nlohmann::json(di);
      r["accuracy"] = std::isnan(acc) ? nlohmann::json(nullptr) : nlohmann::json(acc);
      r["AUC"] = std::isnan(auc) ? nlohmann::json(nullptr) : nlohmann::json(auc);
      r["status"] = solve_status_name(fit.status);
      jrows.push_back(std::move(r));
    } else {
      std::ostringstream line;
      line << std::fixed << std::setprecision(2) << std::setw(5) << alpha;
      line.unsetf(std::ios_base::floatfield);
      line << std::setprecision(6) << std::setw(10) << di << std::setw(10)
           << acc << std::setw(10) << auc << "    "
           << solve_status_name(fit.status) << "\n";
      out << line.str();
    }
  }
  if (args.format == "json") out << jrows.dump(1) << "\n";
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained GLM fitting via mixed-integer conic optimization"};
  app.require_subcommand(1);

  CommonArgs fit_args, seq_args, agg_args, fair_args;
  std::string k_text, sensitive_text, alphas_text;
  double threshold = 0.5;

  auto* fit_cmd = app.add_subcommand("fit", "fit one constrained GLM");
  fit_args.add_to(fit_cmd);

  auto* seq_cmd = app.add_subcommand("seq", "fit a k_max sequence of models");
  seq_args.add_to(seq_cmd);
  seq_cmd->add_option("--k", k_text, "comma list of k_max values (default 1..p)");

  auto* agg_cmd = app.add_subcommand("agg", "aggregate duplicated binomial rows");
  agg_args.add_to(agg_cmd, false);
  agg_cmd->add_option("--formula", agg_args.formula_text, "aggregation formula")
      ->required();

  auto* fair_cmd =
      app.add_subcommand("fair-sweep", "fairness-accuracy trade-off sweep");
  fair_args.family = "binomial";
  fair_args.add_to(fair_cmd);
  fair_cmd->add_option("--sensitive", sensitive_text,
                       "comma list of binary sensitive columns")
      ->required();
  fair_cmd->add_option("--alphas", alphas_text,
                       "comma list of alpha values in [0, 1]");
  fair_cmd->add_option("--threshold", threshold,
                       "classification cut-off (default 0.5)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed()) return run_fit(fit_args);
    if (seq_cmd->parsed()) return run_seq(seq_args, k_text);
    if (agg_cmd->parsed()) return run_agg(agg_args);
    if (fair_cmd->parsed())
      return run_fair_sweep(fair_args, sensitive_text, alphas_text, threshold);
  } catch (const InputError& e) {
    std::cerr << "coneglm: input-error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "coneglm: input-error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
