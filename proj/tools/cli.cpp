#include "cli.hpp"

#include "svb/distributions.hpp"
#include "svb/engine.hpp"
#include "svb/errors.hpp"
#include "svb/grid_oracle.hpp"
#include "svb/io.hpp"
#include "svb/posterior.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace svb::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

constexpr const char* kVersion = SVB_VERSION;

/// Failure to parse an input file; reported with its own exit code.
class InputParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PriorOptions {
  double mean = 0.0;
  double variance = 100.0;

  [[nodiscard]] PriorSpec spec() const { return PriorSpec::isotropic(2, mean, variance); }
};

struct GenerateOptions {
  std::string model = "gaussian";
  double mu = 1.0;
  double variance = 4.0;
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::string out;
};

struct FitOptions {
  std::string data;
  std::string model = "gaussian";
  std::string out_dir;
  std::size_t epochs = 400;
  std::string batch_size = "full";
  std::size_t mc_samples = 1;
  double lr = AdamConfig{}.learning_rate;
  std::uint64_t seed = 0;
  bool no_correlation = false;
  bool shuffle = false;
  std::size_t final_fe_samples = 1000;
  PriorOptions prior;
};

struct GridOptions {
  std::string data;
  std::string model = "gaussian";
  std::string out_dir;
  std::vector<double> mu_range{GridSpec{}.mu.lo, GridSpec{}.mu.hi};
  std::vector<double> logvar_range{GridSpec{}.log_var.lo, GridSpec{}.log_var.hi};
  std::size_t resolution = 201;
  bool no_prior = false;
  PriorOptions prior;
};

struct CompareOptions {
  std::string fit;
  std::string grid;
  std::string out;
};

struct FigureOptions {
  int id = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
};

std::string num(double x) { return io::format_double(x); }

Dataset load_data(const std::string& path) {
  const std::string text = io::read_text(path);
  try {
    return io::data_from_csv(text);
  } catch (const std::invalid_argument& e) {
    throw InputParseError("'" + path + "': " + e.what());
  }
}

json load_json(const std::string& path) {
  try {
    return io::read_json(path);
  } catch (const std::invalid_argument& e) {
    throw InputParseError(e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

json manifest(const std::string& subcommand, json config, json inputs,
              std::vector<std::string> outputs, std::uint64_t seed,
              std::vector<std::string> argv) {
  json m;
  m["tool"] = "svb";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  m["seed"] = seed;
  m["argv"] = std::move(argv);
  return m;
}

std::size_t parse_batch_size(const std::string& text) {
  if (text == "full") return 0;
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || value == 0 || text.front() == '-') {
    throw std::invalid_argument("--batch-size must be 'full' or a positive integer, got '" +
                                text + "'");
  }
  return static_cast<std::size_t>(value);
}

TrainConfig train_config(const FitOptions& o) {
  TrainConfig config;
  config.epochs = o.epochs;
  config.batch_size = parse_batch_size(o.batch_size);
  config.mc_samples = o.mc_samples;
  config.adam.learning_rate = o.lr;
  config.seed = o.seed;
  config.correlation_enabled = !o.no_correlation;
  config.final_fe_samples = o.final_fe_samples;
  config.shuffle = o.shuffle;
  config.validate();
  return config;
}

GridSpec grid_spec(const GridOptions& o) {
  GridSpec spec;
  spec.mu = AxisRange{o.mu_range.at(0), o.mu_range.at(1), o.resolution};
  spec.log_var = AxisRange{o.logvar_range.at(0), o.logvar_range.at(1), o.resolution};
  spec.include_prior = !o.no_prior;
  spec.validate();
  return spec;
}

// generate ------------------------------------------------------------------

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  if (!(o.variance > 0.0) || !std::isfinite(o.variance)) {
    throw std::invalid_argument("--variance must be > 0");
  }
  if (o.n < 1) throw std::invalid_argument("--n must be >= 1");
  const ModelKind kind = parse_model_kind(o.model);
  const Dataset data = sample_data(kind, NaturalParams{o.mu, 1.0 / o.variance}, o.n, o.seed);
  const fs::path path(o.out);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  io::write_text(path, io::data_to_csv(data));
  const std::string manifest_path = o.out + ".manifest.json";
  json config = {{"model", std::string(to_string(kind))},
                 {"mu", o.mu},
                 {"variance", o.variance},
                 {"n", o.n}};
  io::write_json(manifest_path,
                 manifest("generate", std::move(config), json::object(), {o.out}, o.seed,
                          {"svb", "generate", "--model", std::string(to_string(kind)), "--mu",
                           num(o.mu), "--variance", num(o.variance), "--n", std::to_string(o.n),
                           "--seed", std::to_string(o.seed), "--out", o.out}));
  out << "wrote " << o.n << " samples to " << o.out << '\n';
  return kOk;
}

// fit -----------------------------------------------------------------------

std::vector<std::string> fit_argv(const FitOptions& o, const TrainConfig& c) {
  std::vector<std::string> argv{"svb",        "fit",
                                "--data",     o.data,
                                "--model",    o.model,
                                "--epochs",   std::to_string(c.epochs),
                                "--batch-size", o.batch_size,
                                "--mc-samples", std::to_string(c.mc_samples),
                                "--lr",       num(c.adam.learning_rate),
                                "--seed",     std::to_string(c.seed),
                                "--prior-mean", num(o.prior.mean),
                                "--prior-var", num(o.prior.variance),
                                "--final-fe-samples", std::to_string(c.final_fe_samples),
                                "--out-dir",  o.out_dir};
  if (!c.correlation_enabled) argv.emplace_back("--no-correlation");
  if (c.shuffle) argv.emplace_back("--shuffle");
  return argv;
}

int cmd_fit(FitOptions o, std::ostream& out) {
  const ModelKind kind = parse_model_kind(o.model);
  o.model = std::string(to_string(kind));
  const TrainConfig config = train_config(o);
  const PriorSpec prior = o.prior.spec();
  const Dataset data = load_data(o.data);
  const FitResult result = fit(kind, data, prior, config);

  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  io::write_json(dir / "fit.json", io::fit_to_json(result));
  io::write_text(dir / "trace.csv", io::trace_to_csv(result.trace));
  json cfg = io::config_to_json(config);
  cfg["model"] = o.model;
  cfg["prior_mean"] = o.prior.mean;
  cfg["prior_var"] = o.prior.variance;
  io::write_json(dir / "manifest.json",
                 manifest("fit", std::move(cfg), {{"data", o.data}},
                          {(dir / "fit.json").string(), (dir / "trace.csv").string()}, config.seed,
                          fit_argv(o, config)));

  const PosteriorSummary& p = result.posterior;
  out << "posterior mean (mu, logvar) = (" << num(p.mean[0]) << ", " << num(p.mean[1])
      << "), rho = " << num(p.rho) << ", F = " << num(result.final_free_energy.mean) << " +/- "
      << num(result.final_free_energy.se) << '\n';
  return kOk;
}

// grid ----------------------------------------------------------------------

int cmd_grid(GridOptions o, std::ostream& out) {
  const ModelKind kind = parse_model_kind(o.model);
  o.model = std::string(to_string(kind));
  const GridSpec spec = grid_spec(o);
  const Dataset data = load_data(o.data);
  const GridResult grid = grid_posterior(kind, data, o.prior.spec(), spec);

  const fs::path dir(o.out_dir);
  ensure_dir(dir);
  io::write_text(dir / "grid.csv", io::grid_to_csv(grid));
  io::write_json(dir / "grid_summary.json", io::grid_summary_to_json(grid, spec));

  std::vector<std::string> argv{"svb",          "grid",
                                "--data",       o.data,
                                "--model",      o.model,
                                "--mu-range",   num(spec.mu.lo),
                                num(spec.mu.hi), "--logvar-range",
                                num(spec.log_var.lo), num(spec.log_var.hi),
                                "--resolution", std::to_string(o.resolution),
                                "--prior-mean", num(o.prior.mean),
                                "--prior-var",  num(o.prior.variance),
                                "--out-dir",    o.out_dir};
  if (o.no_prior) argv.emplace_back("--no-prior");
  json cfg = {{"model", o.model},
              {"mu_range", {spec.mu.lo, spec.mu.hi}},
              {"logvar_range", {spec.log_var.lo, spec.log_var.hi}},
              {"resolution", o.resolution},
              {"include_prior", spec.include_prior},
              {"prior_mean", o.prior.mean},
              {"prior_var", o.prior.variance}};
  io::write_json(dir / "manifest.json",
                 manifest("grid", std::move(cfg), {{"data", o.data}},
                          {(dir / "grid.csv").string(), (dir / "grid_summary.json").string()}, 0,
                          std::move(argv)));
  out << "grid means (mu, logvar) = (" << num(grid.mean[0]) << ", " << num(grid.mean[1])
      << "), rho = " << num(grid.rho) << '\n';
  return kOk;
}

// compare -------------------------------------------------------------------

int cmd_compare(const CompareOptions& o, std::ostream& out) {
  const json fit_doc = load_json(o.fit);
  const json grid_doc = load_json(o.grid);
  MomentSummary fit_moments;
  MomentSummary grid_moments;
  try {
    fit_moments = io::moments_from_fit(fit_doc);
    grid_moments = io::moments_from_grid_summary(grid_doc);
  } catch (const json::exception& e) {
    throw InputParseError(std::string("incompatible compare inputs: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputParseError(std::string("incompatible compare inputs: ") + e.what());
  }
  const ComparisonReport report = compare(grid_moments, fit_moments);
  out << io::comparison_table(report);
  if (!o.out.empty()) {
    const fs::path path(o.out);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    io::write_json(path, io::comparison_to_json(report));
    io::write_json(o.out + ".manifest.json",
                   manifest("compare", json::object(), {{"fit", o.fit}, {"grid", o.grid}},
                            {o.out}, 0,
                            {"svb", "compare", "--fit", o.fit, "--grid", o.grid, "--out", o.out}));
  }
  return kOk;
}

// figure --------------------------------------------------------------------

struct FigurePlan {
  ModelKind model;
  std::size_t batch_size;  // 0 = full
  bool traces;             // F-trace figure rather than posterior panels
};

FigurePlan figure_plan(int id) {
  switch (id) {
    case 1:
      return {ModelKind::Gaussian, 0, false};
    case 2:
      return {ModelKind::Gaussian, 0, true};
    case 3:
      return {ModelKind::Gaussian, 10, false};
    case 4:
      return {ModelKind::Gaussian, 10, true};
    case 5:
      return {ModelKind::FoldedNormal, 0, false};
    case 6:
      return {ModelKind::FoldedNormal, 10, false};
    default:
      throw std::invalid_argument("figure id must be 1-6");
  }
}

std::string histogram_csv(const Dataset& data, std::size_t bins) {
  const auto [lo_it, hi_it] = std::minmax_element(data.values.begin(), data.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double y : data.values) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>((y - lo) / width));
    ++counts[b];
  }
  std::string csv = "bin_lo,bin_hi,density\n";
  const double n = static_cast<double>(data.size());
  for (std::size_t b = 0; b < bins; ++b) {
    const double a = lo + width * static_cast<double>(b);
    csv += num(a) + ',' + num(a + width) + ',' +
           num(static_cast<double>(counts[b]) / (n * width)) + '\n';
  }
  return csv;
}

std::string true_pdf_csv(ModelKind kind, const NaturalParams& params, const Dataset& data) {
  const auto [lo_it, hi_it] = std::minmax_element(data.values.begin(), data.values.end());
  const double lo = kind == ModelKind::FoldedNormal ? 0.0 : *lo_it - 1.0;
  const double hi = *hi_it + 1.0;
  constexpr int kPoints = 200;
  std::string csv = "y,pdf\n";
  for (int i = 0; i < kPoints; ++i) {
    const double y = lo + (hi - lo) * i / (kPoints - 1);
    csv += num(y) + ',' + num(pdf(kind, y, params)) + '\n';
  }
  return csv;
}

std::string density_panel_csv(const GridResult& density) {
  std::string csv = "mu,logvar,variance,mass\n";
  for (Eigen::Index i = 0; i < density.mu_axis.size(); ++i) {
    for (Eigen::Index j = 0; j < density.log_var_axis.size(); ++j) {
      const double lv = density.log_var_axis[j];
      csv += num(density.mu_axis[i]) + ',' + num(lv) + ',' + num(std::exp(lv)) + ',' +
             num(density.mass(i, j)) + '\n';
    }
  }
  return csv;
}

/// The fitted MVN evaluated analytically on the grid nodes, normalised like the grid.
GridResult svb_density(const GridResult& grid, const PosteriorSummary& posterior) {
  Eigen::MatrixXd log_density(grid.mu_axis.size(), grid.log_var_axis.size());
  Eigen::VectorXd theta(2);
  for (Eigen::Index i = 0; i < grid.mu_axis.size(); ++i) {
    for (Eigen::Index j = 0; j < grid.log_var_axis.size(); ++j) {
      theta << grid.mu_axis[i], grid.log_var_axis[j];
      log_density(i, j) = mvn_log_pdf(theta, posterior.mean, posterior.covariance);
    }
  }
  return normalise_grid(grid.mu_axis, grid.log_var_axis, log_density);
}

int cmd_figure(const FigureOptions& o, std::ostream& out) {
  const FigurePlan plan = figure_plan(o.id);
  const fs::path dir(o.out_dir);
  ensure_dir(dir);

  const NaturalParams truth{1.0, 0.25};
  const Dataset data = sample_data(plan.model, truth, 100, o.seed);
  const PriorSpec prior = PriorSpec::isotropic(2, 0.0, 100.0);
  std::vector<std::string> outputs;
  const auto emit_text = [&](const std::string& name, const std::string& content) {
    io::write_text(dir / name, content);
    outputs.push_back((dir / name).string());
  };
  const auto emit_json = [&](const std::string& name, const json& doc) {
    io::write_json(dir / name, doc);
    outputs.push_back((dir / name).string());
  };

  emit_text("data.csv", io::data_to_csv(data));

  FitResult fits[2];
  const char* tags[2] = {"nocorr", "corr"};
  for (int k = 0; k < 2; ++k) {
    TrainConfig config;
    config.seed = o.seed;
    config.batch_size = plan.batch_size;
    config.correlation_enabled = k == 1;
    fits[k] = fit(plan.model, data, prior, config);
  }

  if (plan.traces) {
    for (int k = 0; k < 2; ++k) {
      emit_text(std::string("trace_") + tags[k] + ".csv", io::trace_to_csv(fits[k].trace));
    }
  } else {
    GridSpec spec;
    spec.include_prior = false;
    const GridResult grid = grid_posterior(plan.model, data, std::nullopt, spec);
    emit_text("panel_a_histogram.csv", histogram_csv(data, 20));
    emit_text("panel_a_true_pdf.csv", true_pdf_csv(plan.model, truth, data));
    emit_text("panel_b_grid.csv", density_panel_csv(grid));
    emit_json("grid_summary.json", io::grid_summary_to_json(grid, spec));
    const char* panels[2] = {"panel_c_svb.csv", "panel_d_svb.csv"};
    for (int k = 0; k < 2; ++k) {
      emit_text(panels[k], density_panel_csv(svb_density(grid, fits[k].posterior)));
      emit_json(std::string("fit_") + tags[k] + ".json",
                io::posterior_to_json(fits[k].posterior));
      emit_json(std::string("comparison_") + tags[k] + ".json",
                io::comparison_to_json(compare(grid, fits[k])));
    }
  }

  json cfg = {{"figure", o.id},
              {"model", std::string(to_string(plan.model))},
              {"mu", truth.mu},
              {"variance", 1.0 / truth.beta},
              {"n", data.size()},
              {"train", io::config_to_json(fits[0].config)}};
  cfg["train"].erase("correlation_enabled");
  cfg["train"]["variants"] = {"nocorr", "corr"};
  io::write_json(dir / "manifest.json",
                 manifest("figure", std::move(cfg), json::object(), outputs, o.seed,
                          {"svb", "figure", std::to_string(o.id), "--seed",
                           std::to_string(o.seed), "--out-dir", o.out_dir}));
  out << "figure " << o.id << ": wrote " << outputs.size() << " files to " << o.out_dir << '\n';
  return kOk;
}

void add_prior_flags(CLI::App* cmd, PriorOptions& prior) {
  cmd->add_option("--prior-mean", prior.mean, "Prior mean for every parameter")
      ->capture_default_str();
  cmd->add_option("--prior-var", prior.variance, "Prior variance for every parameter")
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic variational Bayes with a brute-force grid oracle", "svb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Sample a synthetic dataset");
  generate->add_option("--model", gen.model, "gaussian | folded")->capture_default_str();
  generate->add_option("--mu", gen.mu, "Generating mean")->capture_default_str();
  generate->add_option("--variance", gen.variance, "Generating variance (1/beta)")
      ->capture_default_str();
  generate->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  generate->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  generate->add_option("--out", gen.out, "Output CSV path")->required();

  FitOptions fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the MVN approximate posterior by sVB");
  fit_cmd->add_option("--data", fit_opts.data, "Data CSV (header y)")->required();
  fit_cmd->add_option("--model", fit_opts.model, "gaussian | folded")->capture_default_str();
  fit_cmd->add_option("--epochs", fit_opts.epochs)->capture_default_str();
  fit_cmd->add_option("--batch-size", fit_opts.batch_size, "'full' or a batch size")
      ->capture_default_str();
  fit_cmd->add_option("--mc-samples", fit_opts.mc_samples, "Samples L per step")
      ->capture_default_str();
  fit_cmd->add_option("--lr", fit_opts.lr, "Adam learning rate")->capture_default_str();
  fit_cmd->add_option("--seed", fit_opts.seed)->capture_default_str();
  fit_cmd->add_flag("--no-correlation", fit_opts.no_correlation, "Diagonal posterior");
  fit_cmd->add_flag("--shuffle", fit_opts.shuffle, "Shuffle data every epoch");
  fit_cmd->add_option("--final-fe-samples", fit_opts.final_fe_samples)->capture_default_str();
  fit_cmd->add_option("--out-dir", fit_opts.out_dir)->required();
  add_prior_flags(fit_cmd, fit_opts.prior);

  GridOptions grid_opts;
  auto* grid_cmd = app.add_subcommand("grid", "Brute-force grid posterior");
  grid_cmd->add_option("--data", grid_opts.data, "Data CSV (header y)")->required();
  grid_cmd->add_option("--model", grid_opts.model, "gaussian | folded")->capture_default_str();
  grid_cmd->add_option("--mu-range", grid_opts.mu_range, "lo hi")->expected(2);
  grid_cmd->add_option("--logvar-range", grid_opts.logvar_range, "lo hi")->expected(2);
  grid_cmd->add_option("--resolution", grid_opts.resolution, "Nodes per axis")
      ->capture_default_str();
  grid_cmd->add_flag("--no-prior", grid_opts.no_prior, "Likelihood only");
  grid_cmd->add_option("--out-dir", grid_opts.out_dir)->required();
  add_prior_flags(grid_cmd, grid_opts.prior);

  CompareOptions cmp;
  auto* compare_cmd = app.add_subcommand("compare", "Compare a fit against a grid summary");
  compare_cmd->add_option("--fit", cmp.fit, "fit.json")->required();
  compare_cmd->add_option("--grid", cmp.grid, "grid_summary.json")->required();
  compare_cmd->add_option("--out", cmp.out, "Comparison JSON path");

  FigureOptions fig;
  auto* figure = app.add_subcommand("figure", "Plot-ready data for figures 1-6");
  figure->add_option("id", fig.id, "Figure id")->required()->check(CLI::Range(1, 6));
  figure->add_option("--seed", fig.seed)->capture_default_str();
  figure->add_option("--out-dir", fig.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out);
    if (fit_cmd->parsed()) return cmd_fit(fit_opts, out);
    if (grid_cmd->parsed()) return cmd_grid(grid_opts, out);
    if (compare_cmd->parsed()) return cmd_compare(cmp, out);
    if (figure->parsed()) return cmd_figure(fig, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const InputParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace svb::cli
