#include "svb/io.hpp"

#include "svb/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace svb::io {
namespace {

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vector_from(const json& arr, const char* what) {
  if (!arr.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json(const std::filesystem::path& path, const json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string data_to_csv(const Dataset& data) {
  std::string out = "y\n";
  for (double y : data.values) {
    out += format_double(y);
    out += '\n';
  }
  return out;
}

Dataset data_from_csv(std::string_view text) {
  Dataset data;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "y") {
        throw std::invalid_argument("data CSV line 1: expected header 'y', got '" +
                                    std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc{} || ptr != line.data() + line.size() || !std::isfinite(value)) {
      throw std::invalid_argument("data CSV line " + std::to_string(line_no) +
                                  ": cannot parse '" + std::string(line) + "'");
    }
    data.values.push_back(value);
  }
  if (!header_seen) throw std::invalid_argument("data CSV is empty");
  if (data.empty()) throw std::invalid_argument("data CSV has no rows");
  return data;
}

json posterior_to_json(const PosteriorSummary& posterior) {
  json out;
  out["m"] = vector_json(posterior.mean);
  out["C"] = matrix_json(posterior.covariance);
  out["rho"] = posterior.rho;
  out["correlation_enabled"] = posterior.correlation_enabled;
  return out;
}

PosteriorSummary posterior_from_json(const json& doc) {
  PosteriorSummary s;
  s.mean = vector_from(doc.at("m"), "m");
  const json& c = doc.at("C");
  const auto p = static_cast<Eigen::Index>(c.size());
  if (p != s.mean.size()) throw std::invalid_argument("posterior C does not match m");
  s.covariance.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::VectorXd row = vector_from(c[static_cast<std::size_t>(i)], "C row");
    if (row.size() != p) throw std::invalid_argument("posterior C must be square");
    s.covariance.row(i) = row.transpose();
  }
  s.rho = doc.at("rho").get<double>();
  s.correlation_enabled = doc.at("correlation_enabled").get<bool>();
  return s;
}

std::string trace_to_csv(const FreeEnergyTrace& trace) {
  std::string out = "epoch,step,F,kl,mc_loglik\n";
  for (const TraceRecord& r : trace) {
    out += std::to_string(r.epoch) + ',' + std::to_string(r.step) + ',' +
           format_double(r.free_energy) + ',' + format_double(r.kl) + ',' +
           format_double(r.mc_loglik) + '\n';
  }
  return out;
}

json config_to_json(const TrainConfig& config) {
  json out;
  out["epochs"] = config.epochs;
  if (config.batch_size == 0) {
    out["batch_size"] = "full";
  } else {
    out["batch_size"] = config.batch_size;
  }
  out["mc_samples"] = config.mc_samples;
  out["learning_rate"] = config.adam.learning_rate;
  out["beta1"] = config.adam.beta1;
  out["beta2"] = config.adam.beta2;
  out["eps_hat"] = config.adam.eps_hat;
  out["seed"] = config.seed;
  out["correlation_enabled"] = config.correlation_enabled;
  out["final_fe_samples"] = config.final_fe_samples;
  out["shuffle"] = config.shuffle;
  if (config.init) {
    out["init"] = {{"m", vector_json(config.init->m)},
                   {"v", vector_json(config.init->v)},
                   {"u", vector_json(config.init->u)}};
  } else {
    out["init"] = nullptr;
  }
  return out;
}

json fit_to_json(const FitResult& fit) {
  json out;
  out["model"] = std::string(to_string(fit.model));
  out["posterior"] = posterior_to_json(fit.posterior);
  out["hyper_parameters"] = {{"m", vector_json(fit.params.m)},
                             {"v", vector_json(fit.params.v)},
                             {"u", vector_json(fit.params.u)}};
  out["final_free_energy"] = {{"mean", fit.final_free_energy.mean},
                              {"se", fit.final_free_energy.se},
                              {"samples", fit.final_free_energy.samples}};
  out["steps"] = fit.steps;
  out["config"] = config_to_json(fit.config);
  json trace = json::array();
  for (const TraceRecord& r : fit.trace) {
    trace.push_back({{"epoch", r.epoch},
                     {"step", r.step},
                     {"F", r.free_energy},
                     {"kl", r.kl},
                     {"mc_loglik", r.mc_loglik}});
  }
  out["trace"] = std::move(trace);
  return out;
}

std::string grid_to_csv(const GridResult& grid) {
  std::string out = "mu,logvar,mass\n";
  for (Eigen::Index i = 0; i < grid.mu_axis.size(); ++i) {
    for (Eigen::Index j = 0; j < grid.log_var_axis.size(); ++j) {
      out += format_double(grid.mu_axis[i]) + ',' + format_double(grid.log_var_axis[j]) + ',' +
             format_double(grid.mass(i, j)) + '\n';
    }
  }
  return out;
}

json grid_summary_to_json(const GridResult& grid, const GridSpec& spec) {
  json out;
  out["means"] = vector_json(grid.mean);
  out["variances"] = vector_json(grid.variance);
  out["map"] = vector_json(grid.map);
  out["rho"] = grid.rho;
  out["covariance"] = grid.covariance;
  out["grid"] = {{"mu", {spec.mu.lo, spec.mu.hi, spec.mu.resolution}},
                 {"logvar", {spec.log_var.lo, spec.log_var.hi, spec.log_var.resolution}},
                 {"include_prior", spec.include_prior}};
  return out;
}

MomentSummary moments_from_grid_summary(const json& doc) {
  MomentSummary s;
  s.mean = vector_from(doc.at("means"), "means");
  s.variance = vector_from(doc.at("variances"), "variances");
  s.rho = doc.at("rho").get<double>();
  return s;
}

MomentSummary moments_from_fit(const json& doc) {
  // A grid summary is accepted as the candidate too, so a grid can be
  // compared with itself or with another grid.
  if (doc.contains("means")) return moments_from_grid_summary(doc);
  return moments(posterior_from_json(doc.at("posterior")));
}

json comparison_to_json(const ComparisonReport& report) {
  json out;
  out["mean_abs_diff"] = vector_json(report.mean_abs_diff);
  out["variance_ratio_error"] = vector_json(report.variance_ratio_error);
  out["rho_reference"] = report.rho_reference;
  out["rho_candidate"] = report.rho_candidate;
  out["rho_abs_diff"] = report.rho_abs_diff;
  out["rho_sign_agrees"] = report.rho_sign_agrees;
  return out;
}

std::string comparison_table(const ComparisonReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "parameter" << std::setw(24) << "|mean diff|"
      << "|var ratio - 1|\n";
  const char* names[] = {"mu", "logvar"};
  for (Eigen::Index i = 0; i < report.mean_abs_diff.size(); ++i) {
    const std::string name = i < 2 ? names[i] : "theta" + std::to_string(i);
    out << std::setw(12) << name << std::setw(24) << format_double(report.mean_abs_diff[i])
        << format_double(report.variance_ratio_error[i]) << '\n';
  }
  out << "rho reference " << format_double(report.rho_reference) << ", candidate "
      << format_double(report.rho_candidate) << ", |diff| "
      << format_double(report.rho_abs_diff) << ", sign "
      << (report.rho_sign_agrees ? "agrees" : "differs") << '\n';
  return out.str();
}

}  // namespace svb::io
