#include "reluflow/dataset_io.hpp"

#include <fstream>

namespace reluflow {

using nlohmann::json;

json vector_to_json(const Vec<double>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec<double> vector_from_json(const json& j) {
  if (!j.is_array()) throw DomainError("expected a JSON array of numbers");
  Vec<double> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DomainError("expected a JSON array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json dataset_to_json(const Dataset<double>& ds) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < ds.n(); ++i) rows.push_back(vector_to_json(ds.X.row(i).transpose()));
  return json{{"X", rows}, {"y", vector_to_json(ds.y)}};
}

Dataset<double> dataset_from_json(const json& j) {
  if (!j.is_object() || !j.contains("X") || !j.contains("y")) {
    throw DomainError("dataset JSON must be an object with keys \"X\" and \"y\"");
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "X" && key != "y") throw DomainError("dataset JSON: unknown key \"" + key + "\"");
  }
  const json& rows = j.at("X");
  if (!rows.is_array() || rows.empty()) throw DomainError("dataset JSON: \"X\" must be a non-empty array");
  const std::size_t d = rows[0].is_array() ? rows[0].size() : 0;
  Mat<double> x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Vec<double> row = vector_from_json(rows[i]);
    if (static_cast<std::size_t>(row.size()) != d) throw DimensionError("dataset JSON: ragged rows in \"X\"");
    x.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return Dataset<double>(std::move(x), vector_from_json(j.at("y")));
}

Dataset<double> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open dataset file " + path.string());
  return dataset_from_json(json::parse(in));
}

void write_dataset(const std::filesystem::path& path, const Dataset<double>& ds) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write dataset file " + path.string());
  out << dataset_to_json(ds).dump(2) << '\n';
}

}  // namespace reluflow
