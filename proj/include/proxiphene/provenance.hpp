#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace proxiphene {

inline constexpr std::string_view kToolName = "proxiphene";
inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);
/// Throws proxiphene::Error (io) when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// Metadata block embedded in every output file.
struct Provenance {
    std::string step;
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, std::string> input_hashes;  // input name -> sha256
    std::uint64_t seed = 0;

    /// Hashes the file and records it under `name`.
    void add_input(const std::string& name, const std::filesystem::path& path);
    [[nodiscard]] nlohmann::json to_json() const;
    /// Single-line JSON for `# ` comment headers in CSV files.
    [[nodiscard]] std::vector<std::string> comment_lines() const;
};

/// Writes `content` to `path` (creating parent directories). Throws proxiphene::Error (io).
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace proxiphene
