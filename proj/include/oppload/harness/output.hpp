#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oppload/harness/suite.hpp"

namespace oppload::harness {

/// File name and content, written together or not at all.
using OutputFile = std::pair<std::string, std::string>;
using OutputSet = std::vector<OutputFile>;

std::string report_json(const ExperimentReport& report);
std::string reports_json(const std::vector<ExperimentReport>& reports);
/// Throws std::runtime_error on malformed input.
std::vector<ExperimentReport> parse_reports(std::string_view json);

/// manifest.csv, reports.json, phases.csv, summary.csv, final_states.csv and
/// one load matrix per (scenario, clients, strategy).
OutputSet suite_tables(const std::vector<SuiteRun>& runs);
OutputSet report_tables(const std::vector<ExperimentReport>& reports);

/// Long-format tables for plotting.
OutputSet plot_tables(const std::vector<ExperimentReport>& reports);

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes every file to a temporary name first, then renames them into
/// place. Nothing is left behind when any write fails.
void write_outputs(const std::filesystem::path& dir, const OutputSet& files);

std::vector<ExperimentReport> load_reports(const std::filesystem::path& dir);

}  // namespace oppload::harness
