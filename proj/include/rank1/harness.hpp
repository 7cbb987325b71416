#pragma once

// Experiment runner behind the command-line tool. An experiment is one
// JSON document:
//
//   {
//     "experiment": "weak-limit",
//     "schedule": {...} | "schedule_file": "path.json",
//     "params": {...},
//     "seed": 0,
//     "output": {"report": "report.json", "plot": "plot.csv"}
//   }
//
// Reports are deterministic: items are assembled in index order and the
// wall-clock field is only written on request.

#include <optional>
#include <string>
#include <vector>

#include "rank1/serialize.hpp"

namespace rank1 {

inline constexpr const char* kReportSchema = "rank1-report/1";
inline constexpr const char* kVersion = "1.0.0";

const std::vector<std::string>& experiment_kinds();

struct ExperimentSpec {
  std::string kind;
  Json schedule;  // resolved schedule document
  Json params = Json::object();
  std::uint64_t seed = 0;
  std::string report_path = "report.json";
  std::optional<std::string> plot_path;
  Json source;  // the document as given, echoed into the report

  // Validates and resolves schedule_file relative to base_dir.
  static ExperimentSpec from_json(const Json& doc, const std::string& base_dir = ".");
  static ExperimentSpec load(const std::string& path);
};

struct PlotData {
  std::string comment;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  Json doc;
  bool passed = false;
  std::optional<PlotData> plot;
};

Report run(const ExperimentSpec& spec, bool timing = false);

// CSV: '# ' comment lines, a header row, one row per sequence index.
void export_plotdata(const PlotData& data, const std::string& path);
std::string plot_csv(const PlotData& data);

// Full CLI flow: run, write report (and plot data) under out_dir, return
// the exit status (0 pass, 1 threshold failure, 2 error).
int run_to_files(const ExperimentSpec& spec, const std::string& out_dir, bool timing, std::string* message = nullptr);

}  // namespace rank1
