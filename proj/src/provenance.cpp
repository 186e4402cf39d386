#include "proxiphene/provenance.hpp"

#include "proxiphene/error.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

namespace proxiphene {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

void Provenance::add_input(const std::string& name, const std::filesystem::path& path) {
    input_hashes[name] = sha256_file(path);
}

nlohmann::json Provenance::to_json() const {
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [name, hash] : input_hashes) inputs[name] = "sha256:" + hash;
    return {{"tool", kToolName}, {"version", kToolVersion}, {"step", step},
            {"seed", seed},      {"config", config},        {"inputs", inputs}};
}

std::vector<std::string> Provenance::comment_lines() const { return {to_json().dump()}; }

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw io_error("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw io_error("write failed: " + path.string());
}

}  // namespace proxiphene
