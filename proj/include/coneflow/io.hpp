#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace coneflow {

// 17 significant digits: lossless double round-trip for golden files
std::string format_float(double v);

std::string sha256_hex(const std::string& bytes);

// Collects artifacts for a command run and emits a manifest with per-file
// hashes. File contents are written atomically at save time; the manifest
// itself carries the wall time and is not part of the byte-identity contract.
class ArtifactWriter {
  public:
    explicit ArtifactWriter(std::filesystem::path out_dir);

    void write_text(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const nlohmann::json& j);

    // writes manifest.json; returns the manifest
    nlohmann::json finalize(const std::string& command, const std::string& config_hash,
                            std::uint64_t seed, double wall_seconds, bool pass);

    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> hashes_;  // name, sha256
};

// CSV assembly with fixed field ordering and trailing newline
class CsvBuilder {
  public:
    explicit CsvBuilder(std::vector<std::string> header);
    void row(const std::vector<std::string>& fields);
    std::string str() const { return body_; }

  private:
    std::size_t n_cols_;
    std::string body_;
};

}  // namespace coneflow
