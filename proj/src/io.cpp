#include "coneflow/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>

#include "coneflow/errors.hpp"

namespace coneflow {

std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

ArtifactWriter::ArtifactWriter(std::filesystem::path out_dir) : dir_(std::move(out_dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void ArtifactWriter::write_text(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("write failed for " + path.string());
    hashes_.emplace_back(name, sha256_hex(content));
}

void ArtifactWriter::write_json(const std::string& name, const nlohmann::json& j) {
    write_text(name, j.dump(2) + "\n");
}

nlohmann::json ArtifactWriter::finalize(const std::string& command, const std::string& config_hash,
                                        std::uint64_t seed, double wall_seconds, bool pass) {
    nlohmann::json manifest;
    manifest["command"] = command;
    manifest["config_hash"] = config_hash;
    manifest["seed"] = seed;
    manifest["version"] = "0.1.0";
    manifest["wall_seconds"] = wall_seconds;
    manifest["pass"] = pass;
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& [name, hash] : hashes_) {
        arts.push_back({{"name", name}, {"sha256", hash}});
    }
    manifest["artifacts"] = arts;
    const auto path = dir_ / "manifest.json";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write manifest at " + path.string());
    f << manifest.dump(2) << "\n";
    return manifest;
}

CsvBuilder::CsvBuilder(std::vector<std::string> header) : n_cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) body_ += ',';
        body_ += header[i];
    }
    body_ += '\n';
}

void CsvBuilder::row(const std::vector<std::string>& fields) {
    if (fields.size() != n_cols_) {
        throw IoError("csv row has " + std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(n_cols_));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) body_ += ',';
        body_ += fields[i];
    }
    body_ += '\n';
}

}  // namespace coneflow
