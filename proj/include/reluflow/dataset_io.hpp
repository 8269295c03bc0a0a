#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "reluflow/model.hpp"

namespace reluflow {

/// {"X": [[...], ...], "y": [...]}
nlohmann::json dataset_to_json(const Dataset<double>& ds);
Dataset<double> dataset_from_json(const nlohmann::json& j);

Dataset<double> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset<double>& ds);

nlohmann::json vector_to_json(const Vec<double>& v);
Vec<double> vector_from_json(const nlohmann::json& j);

}  // namespace reluflow
