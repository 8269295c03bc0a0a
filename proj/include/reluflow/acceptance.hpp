#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace reluflow {

struct AcceptanceOptions {
  std::string filter;   // substring of criterion names; empty runs all
  bool fast = false;    // hidden-neuron experiments at lr 1e-4 instead of 1e-5
  bool inject_fault = false;  // perturbs the golden eigenvalue table
  std::filesystem::path artifact_dir;  // empty: no artifacts
};

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;

  bool all_passed() const;
  nlohmann::json to_json() const;
};

std::vector<std::string> acceptance_criteria();

/// Runs the selected criteria; an exception inside a criterion fails it.
AcceptanceReport run_acceptance(const AcceptanceOptions& options = {});

}  // namespace reluflow
