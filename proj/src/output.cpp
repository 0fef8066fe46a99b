#include "kpzlab/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "manifest_schema.inc"

namespace kpzlab {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), width_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  row_cells(header);
}

void CsvWriter::row_cells(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::invalid_argument("CsvWriter: row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row_cells(cells);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

const json& manifest_schema() {
  static const json schema = json::parse(kManifestSchemaText);
  return schema;
}

namespace {

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

void validate_into(const json& inst, const json& schema, const json& root, const std::string& where,
                   std::vector<std::string>& errors) {
  if (schema.contains("$ref")) {
    const auto ref = schema["$ref"].get<std::string>();
    if (ref.rfind("#/", 0) != 0) {
      errors.push_back(where + ": unsupported $ref " + ref);
      return;
    }
    validate_into(inst, root.at(json::json_pointer(ref.substr(1))), root, where, errors);
    return;
  }
  if (schema.contains("type") && !type_matches(inst, schema["type"].get<std::string>())) {
    errors.push_back(where + ": expected " + schema["type"].get<std::string>());
    return;
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == inst;
    if (!found) errors.push_back(where + ": value not in enum");
  }
  if (schema.contains("minimum") && inst.is_number() && inst.get<double>() < schema["minimum"].get<double>())
    errors.push_back(where + ": below minimum");
  if (schema.contains("pattern") && inst.is_string() &&
      !std::regex_search(inst.get<std::string>(), std::regex(schema["pattern"].get<std::string>())))
    errors.push_back(where + ": does not match pattern");
  if (inst.is_object()) {
    if (schema.contains("required"))
      for (const auto& r : schema["required"])
        if (!inst.contains(r.get<std::string>())) errors.push_back(where + ": missing " + r.get<std::string>());
    const json props = schema.value("properties", json::object());
    for (const auto& [k, v] : inst.items()) {
      if (props.contains(k)) validate_into(v, props[k], root, where + "." + k, errors);
      else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false)
        errors.push_back(where + ": unexpected property " + k);
    }
  }
  if (inst.is_array() && schema.contains("items"))
    for (std::size_t i = 0; i < inst.size(); ++i)
      validate_into(inst[i], schema["items"], root, where + "[" + std::to_string(i) + "]", errors);
}

}  // namespace

std::vector<std::string> validate_schema(const json& instance, const json& schema, const std::string& where) {
  std::vector<std::string> errors;
  validate_into(instance, schema, schema, where, errors);
  return errors;
}

json Manifest::write(const fs::path& dir) const {
  json m;
  m["artifact"] = kArtifactName;
  m["version"] = kArtifactVersion;
  m["command"] = command;
  m["parameters"] = parameters;
  m["master_seed"] = master_seed;
  m["replicas"] = replicas;
  m["events"] = events;
  m["wall_clock_seconds"] = wall_clock_seconds;
  m["inputs"] = json::array();
  for (const auto& p : inputs) m["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  m["outputs"] = json::array();
  for (const auto& p : files)
    m["outputs"].push_back({{"path", fs::relative(p, dir).generic_string()}, {"sha256", sha256_file(p)}});
  if (!extra.empty()) m["extra"] = extra;
  const auto errors = validate_schema(m, manifest_schema());
  if (!errors.empty()) throw std::logic_error("manifest does not match its schema: " + errors.front());
  write_json(dir / "manifest.json", m);
  return m;
}

}  // namespace kpzlab
