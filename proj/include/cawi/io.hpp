#pragma once

#include "cawi/copula.hpp"
#include "cawi/init.hpp"
#include "cawi/rdnn.hpp"

#include <json.hpp>

#include <filesystem>

namespace cawi {

using Json = nlohmann::json;

/// {"family", "d", "theta"?, "nu"?, "R"? (row-major), "diagnostics"}
Json copula_to_json(const CopulaModel& model);
CopulaModel copula_from_json(const Json& j);

/// {"d", "h", "W" (row-major d x h), "b", "provenance"}
Json weight_init_to_json(const WeightInit& init);
WeightInit weight_init_from_json(const Json& j);

Json arch_to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const Json& j);

Json trained_model_to_json(const TrainedModel& model);
TrainedModel trained_model_from_json(const Json& j);

Json matrix_to_json(const Matrix& m);  // row-major nested arrays
Matrix matrix_from_json(const Json& j);

/// Writes j.dump(2) plus a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cawi
