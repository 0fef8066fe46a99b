#ifndef KPZLAB_OUTPUT_HPP
#define KPZLAB_OUTPUT_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace kpzlab {

inline constexpr const char* kArtifactName = "kpzlab";
inline constexpr const char* kArtifactVersion = "1.0.0";

/// 17 significant digits, "nan"/"inf" spelled out.
std::string format_double(double v);

/// CSV with a header row; numbers at 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row_cells(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t width_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Hex SHA-256 of a byte string / of a file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// JSON schema of manifest.json (draft 2020-12 subset).
const nlohmann::json& manifest_schema();

/// Validate against the subset of JSON schema used by the manifest schema:
/// type, required, properties, additionalProperties (bool), items, minimum,
/// enum. Returns the list of violations (empty when valid).
std::vector<std::string> validate_schema(const nlohmann::json& instance, const nlohmann::json& schema,
                                         const std::string& where = "$");

/// Collects the reproducibility record for one output directory.
struct Manifest {
  std::string command;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t master_seed = 0;
  nlohmann::json replicas = nlohmann::json::array();  // {point, replica, stream, events}
  std::uint64_t events = 0;
  double wall_clock_seconds = 0.0;
  std::vector<std::filesystem::path> inputs;
  nlohmann::json extra = nlohmann::json::object();

  /// Builds the JSON, digesting inputs and every regular file already in
  /// `dir` (except the manifest itself), validates it and writes manifest.json.
  nlohmann::json write(const std::filesystem::path& dir) const;
};

}  // namespace kpzlab

#endif  // KPZLAB_OUTPUT_HPP
