#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dmt/runner.hpp"

namespace dmt {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failure on '" + path + "'");
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

nlohmann::json summary_to_json(const RunSummary& s) {
  return {{"final_loss", s.final_loss},
          {"final_grad_norm_sq", s.final_grad_norm_sq},
          {"running_avg_grad_norm_sq", s.running_avg_grad_norm_sq},
          {"steady_state_floor", s.steady_state_floor}};
}

nlohmann::json result_to_json(const RunResult& r) {
  nlohmann::json j;
  j["name"] = r.config.name;
  j["algorithm"] = std::string(algorithm_name(r.resolved.algorithm));
  j["eta"] = r.resolved.eta;
  j["lambda"] = r.resolved.lambda;
  j["beta"] = r.resolved.beta;
  j["T"] = r.config.T;
  j["eval_every"] = r.config.eval_every;
  j["agents"] = r.config.n_agents;
  j["topology"] = to_string(r.config.topology);
  j["weights"] = to_string(r.config.weights);
  j["partition"] = to_string(r.config.partition_mode);
  j["schedule"] = r.config.schedule == Schedule::Fixed ? "fixed" : "corollary1";
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.guard.checks) checks.push_back({{"condition", c.name}, {"value", c.value}, {"limit", c.limit}, {"ok", c.ok}});
  j["parameter_guard"] = checks;
  j["warnings"] = r.guard.warnings;
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.runs) {
    auto entry = summary_to_json(s.summary);
    entry["seed"] = s.seed;
    seeds.push_back(entry);
  }
  j["seeds"] = seeds;
  const SeedStat loss = final_loss_stat(r.runs);
  const SeedStat floor = floor_stat(r.runs);
  j["final_loss_mean"] = loss.mean;
  j["final_loss_stderr"] = loss.std_error;
  j["floor_mean"] = floor.mean;
  j["floor_stderr"] = floor.std_error;
  if (!r.mean_records.empty()) j["seed_mean"] = summary_to_json(summarize(r.mean_records));
  return j;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<IterationRecord<double>>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.t << ',' << fmt17(r.loss) << ',' << fmt17(r.grad_norm_sq) << ',' << fmt17(r.consensus_err) << ','
        << fmt17(r.tracking_err) << ',' << fmt17(r.avg_mom_err) << ',' << fmt17(r.mom_est_err) << ','
        << fmt17(r.heterogeneity) << '\n';
  }
}

void emit_csv(const std::vector<IterationRecord<double>>& records, const std::string& path) {
  auto out = open_out(path);
  write_csv(out, records);
  finish(out, path);
}

std::vector<IterationRecord<double>> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError(1, "unexpected CSV header");
  std::vector<IterationRecord<double>> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw ParseError(lineno, "expected 8 columns");
    IterationRecord<double> r;
    try {
      r.t = std::stol(cells[0]);
      double* fields[] = {&r.loss, &r.grad_norm_sq, &r.consensus_err, &r.tracking_err,
                          &r.avg_mom_err, &r.mom_est_err, &r.heterogeneity};
      for (std::size_t k = 0; k < 7; ++k) *fields[k] = std::stod(cells[k + 1]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "non-numeric CSV cell");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<IterationRecord<double>> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_csv(in);
}

void write_plot_script(std::ostream& out, const std::vector<PlotSeries>& series, const std::string& image_path) {
  detail::require(!series.empty(), "plot script: at least one CSV required");
  out << "# gnuplot script; run with: gnuplot <this file>\n"
      << "set datafile separator \",\"\n"
      << "set terminal pngcairo size 1400,520\n"
      << "set output " << quoted(image_path) << "\n"
      << "set logscale y\n"
      << "set format y \"%.0e\"\n"
      << "set xlabel \"iteration t\"\n"
      << "set key top right\n"
      << "set multiplot layout 1,2\n";
  auto plot = [&](const char* title, const char* ylabel, int column) {
    out << "set title " << quoted(title) << "\n"
        << "set ylabel " << quoted(ylabel) << "\n"
        << "plot ";
    for (std::size_t k = 0; k < series.size(); ++k) {
      if (k > 0) out << ", \\\n     ";
      out << quoted(series[k].csv_path) << " using 1:" << column << " skip 1 with lines lw 2 title "
          << quoted(series[k].title);
    }
    out << "\n";
  };
  plot("training loss", "F(x_bar)", 2);
  plot("squared gradient norm", "||grad F(x_bar)||^2", 3);
  out << "unset multiplot\n";
}

void emit_plot_script(const std::vector<PlotSeries>& series, const std::string& out_path) {
  auto out = open_out(out_path);
  // image lands next to the script; the script is meant to be run from its own directory
  std::string image = out_path.substr(out_path.rfind('/') == std::string::npos ? 0 : out_path.rfind('/') + 1);
  if (const auto dot = image.rfind('.'); dot != std::string::npos) image.resize(dot);
  write_plot_script(out, series, image + ".png");
  finish(out, out_path);
}

void emit_plot_script(const std::vector<std::string>& csv_paths, const std::string& out_path) {
  std::vector<PlotSeries> series;
  for (const auto& p : csv_paths) {
    std::string title = p;
    if (const auto slash = title.rfind('/'); slash != std::string::npos) title = title.substr(slash + 1);
    if (const auto dot = title.rfind('.'); dot != std::string::npos) title.resize(dot);
    series.push_back({p, title});
  }
  emit_plot_script(series, out_path);
}

std::string summary_json(const RunResult& result) { return result_to_json(result).dump(2) + "\n"; }

std::string comparison_json(const std::vector<ComparisonEntry>& entries) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    auto item = result_to_json(e.result);
    item["label"] = e.label;
    j.push_back(item);
  }
  return j.dump(2) + "\n";
}

}  // namespace dmt
