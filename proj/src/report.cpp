#include "nco/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace nco {

namespace {
std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

double optimality_ratio(bool maximize, double objective, double optimal) {
  return maximize ? optimal / objective : objective / optimal;
}

void EvalReport::finalize() {
  mean_objective = 0.0;
  double opt_sum = 0.0, ratio_sum = 0.0;
  size_t opt_n = 0, ratio_n = 0;
  sorted_ratios.clear();
  for (const auto& r : rows) {
    mean_objective += r.objective;
    if (r.optimal) {
      opt_sum += *r.optimal;
      ++opt_n;
    }
    if (r.ratio) {
      ratio_sum += *r.ratio;
      ++ratio_n;
      sorted_ratios.push_back(*r.ratio);
    }
  }
  if (!rows.empty()) mean_objective /= static_cast<double>(rows.size());
  mean_optimal = opt_n == rows.size() && opt_n > 0 ? std::optional(opt_sum / opt_n) : std::nullopt;
  mean_ratio = ratio_n == rows.size() && ratio_n > 0 ? std::optional(ratio_sum / ratio_n) : std::nullopt;
  std::sort(sorted_ratios.begin(), sorted_ratios.end());
}

void write_text_file(const std::string& path, const std::string& content) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc | std::ios::binary);
    if (!f) throw DataError("write_text_file: cannot open " + tmp);
    f << content;
  }
  std::filesystem::rename(tmp, path);
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
  std::ostringstream os;
  os << "# nco " << kCodeVersion << " config=" << report.config_hash << "\n";
  os << "instance_id,strategy,budget,best_objective,optimal_objective,ratio,wallclock_ms\n";
  for (const auto& r : report.rows) {
    os << r.instance_id << ',' << r.strategy << ',' << r.budget << ',' << fmt17(r.objective) << ',';
    if (r.optimal) os << fmt17(*r.optimal);
    os << ',';
    if (r.ratio) os << fmt17(*r.ratio);
    char buf[32];
    std::snprintf(buf, sizeof buf, ",%.3f\n", r.wall_ms);
    os << buf;
  }
  write_text_file(path, os.str());
}

void write_sorted_ratios_csv(const std::string& path, const EvalReport& report) {
  std::ostringstream os;
  os << "# nco " << kCodeVersion << " config=" << report.config_hash << "\n";
  os << "rank,ratio\n";
  for (size_t i = 0; i < report.sorted_ratios.size(); ++i)
    os << i << ',' << fmt17(report.sorted_ratios[i]) << "\n";
  write_text_file(path, os.str());
}

void write_aggregate_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j{{"schema_version", 1},
                   {"code_version", kCodeVersion},
                   {"config", report.config_hash},
                   {"count", report.rows.size()},
                   {"mean_objective", report.mean_objective}};
  if (report.mean_optimal) j["mean_optimal"] = *report.mean_optimal;
  if (report.mean_ratio) j["mean_ratio"] = *report.mean_ratio;
  write_text_file(path, j.dump(2) + "\n");
}

void write_trace_csv(const std::string& path, int instance_id, const std::string& strategy,
                     const SearchTrace& trace, const std::string& config_hash) {
  std::ostringstream os;
  os << "# nco " << kCodeVersion << " config=" << config_hash << "\n";
  os << "instance_id,strategy,candidates,best_objective,wallclock_ms\n";
  for (const auto& p : trace.points) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", p.wall_ms);
    os << instance_id << ',' << strategy << ',' << p.candidates << ','
       << fmt17(p.best_objective) << ',' << buf << "\n";
  }
  write_text_file(path, os.str());
}

std::string render_tour_svg(const TspInstance& inst, const std::vector<int>& tour) {
  double len = tour_length(inst, tour);  // also validates sizes
  const int px = 520, margin = 20, box = px - 2 * margin;
  auto sx = [&](double x) { return margin + x * box; };
  auto sy = [&](double y) { return margin + (1.0 - y) * box; };
  char buf[128];
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px + 28
     << "\" viewBox=\"0 0 " << px << " " << px + 28 << "\">\n";
  os << "  <rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << box << "\" height=\""
     << box << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  os << "  <polygon fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < tour.size(); ++i) {
    const auto& p = inst.points[static_cast<size_t>(tour[i])];
    std::snprintf(buf, sizeof buf, "%s%.4f,%.4f", i ? " " : "", sx(p[0]), sy(p[1]));
    os << buf;
  }
  os << "\"/>\n";
  for (const auto& p : inst.points) {
    std::snprintf(buf, sizeof buf,
                  "  <circle cx=\"%.4f\" cy=\"%.4f\" r=\"3\" fill=\"#d62728\"/>\n", sx(p[0]),
                  sy(p[1]));
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "  <text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"14\">n=%d "
                "length=%.6f</text>\n",
                margin, px + 18, inst.size(), len);
  os << buf;
  os << "</svg>\n";
  return os.str();
}

}  // namespace nco
