#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "psar/container.hpp"
#include "psar/sar_model.hpp"

namespace psar {

void to_json(nlohmann::json& j, const CircularGeometryParams& p);
void from_json(const nlohmann::json& j, CircularGeometryParams& p);
void to_json(nlohmann::json& j, const GridParams& p);
void from_json(const nlohmann::json& j, GridParams& p);
void to_json(nlohmann::json& j, const RectangleLimits& p);
void from_json(const nlohmann::json& j, RectangleLimits& p);

/// Named dataset splits sharing one geometry and grid ("train", "test_10dB", ...).
struct DatasetFile {
  std::vector<std::pair<std::string, Dataset>> splits;

  const Dataset& split(const std::string& name) const;
  const Dataset* find(const std::string& name) const;
};

Container to_container(const DatasetFile& file);
DatasetFile dataset_from_container(const Container& c);

void write_dataset(const std::filesystem::path& path, const DatasetFile& file);
DatasetFile read_dataset(const std::filesystem::path& path);

}  // namespace psar
