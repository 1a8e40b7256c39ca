#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hmmforget/model.hpp"

namespace hmmforget {

// Model document: {"name": optional string, "transition": K x K, "emission": K x M}.
// Malformed JSON raises ConfigParseError carrying line and column; structural or
// stochastic problems raise the corresponding ModelValidationError subclass.
HmmModel parse_model_json(std::string_view text);
HmmModel load_model(const std::filesystem::path& path);

std::string model_to_json(const HmmModel& model);

// K x K nonnegative matrix stored as a JSON array of arrays, either bare or under a
// "loss" key.
Matrix parse_matrix_json(std::string_view text, std::string_view key);
Matrix load_matrix(const std::filesystem::path& path, std::string_view key);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace hmmforget
