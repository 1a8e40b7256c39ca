#include "hmmforget/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hmmforget/errors.hpp"

namespace hmmforget {

namespace {

using nlohmann::json;

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // byte is 1-based and points one past the offending character.
    std::size_t line = 1, column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream msg;
    msg << "JSON parse error at line " << line << ", column " << column << ": " << e.what();
    throw ConfigParseError(msg.str());
  }
}

Matrix to_matrix(const json& node, const char* field) {
  if (!node.is_array() || node.empty()) {
    throw ConfigParseError(std::string("field '") + field + "' must be a nonempty array of rows");
  }
  const std::size_t rows = node.size();
  const std::size_t cols = node[0].is_array() ? node[0].size() : 0;
  if (cols == 0) {
    throw ConfigParseError(std::string("field '") + field + "' rows must be nonempty arrays");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = node[i];
    if (!row.is_array() || row.size() != cols) {
      throw ConfigParseError(std::string("field '") + field + "' is ragged at row " +
                             std::to_string(i));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!row[j].is_number()) {
        throw ConfigParseError(std::string("field '") + field + "' has a non-numeric entry at (" +
                               std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j].get<double>();
    }
  }
  return m;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return buf.str();
}

HmmModel parse_model_json(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_object()) throw ConfigParseError("model document must be a JSON object");
  if (!doc.contains("transition")) throw ConfigParseError("model is missing 'transition'");
  if (!doc.contains("emission")) throw ConfigParseError("model is missing 'emission'");
  std::string name;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ConfigParseError("'name' must be a string");
    name = doc["name"].get<std::string>();
  }
  return build_model(to_matrix(doc["transition"], "transition"),
                     to_matrix(doc["emission"], "emission"), std::move(name));
}

HmmModel load_model(const std::filesystem::path& path) {
  return parse_model_json(read_text_file(path));
}

std::string model_to_json(const HmmModel& model) {
  json doc;
  if (!model.name().empty()) doc["name"] = model.name();
  doc["transition"] = to_json(model.transition());
  doc["emission"] = to_json(model.emission());
  return doc.dump(2);
}

Matrix parse_matrix_json(std::string_view text, std::string_view key) {
  const json doc = parse_document(text);
  const std::string k(key);
  if (doc.is_object()) {
    if (!doc.contains(k)) throw ConfigParseError("document is missing '" + k + "'");
    return to_matrix(doc[k], k.c_str());
  }
  return to_matrix(doc, k.c_str());
}

Matrix load_matrix(const std::filesystem::path& path, std::string_view key) {
  return parse_matrix_json(read_text_file(path), key);
}

}  // namespace hmmforget
