#include "llmceg/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "llmceg/errors.hpp"

namespace llmceg::io {

namespace {

constexpr std::string_view kModelFormat = "llmceg-model-v1";

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xFFULL) << (8 * (7 - i));
    return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string hash_lines(std::span<const std::string> lines) {
    std::string joined;
    for (const std::string& l : lines) {
        joined += l;
        joined.push_back('\n');
    }
    return sha256_hex(joined);
}

void atomic_write(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_lines(const fs::path& path, std::span<const std::string> lines) {
    std::string text;
    for (const std::string& l : lines) {
        if (l.find('\n') != std::string::npos) throw IoError("corpus line contains a newline");
        text += l;
        text.push_back('\n');
    }
    atomic_write(path, text);
}

std::vector<std::string> read_lines(const fs::path& path) {
    const std::string text = read_file(path);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

std::string encode_params(const lm::ModelParams& params) {
    std::string out(params.size() * sizeof(double), '\0');
    char* dst = out.data();
    for (double v : params.values()) {
        const std::uint64_t le = to_little_endian(std::bit_cast<std::uint64_t>(v));
        std::memcpy(dst, &le, sizeof(le));
        dst += sizeof(le);
    }
    return out;
}

std::string params_manifest(const lm::ModelParams& params) {
    const lm::ModelConfig& c = params.config();
    nlohmann::json tensors = nlohmann::json::array();
    for (const lm::ParamSlot& s : params.layout())
        tensors.push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}});
    const nlohmann::json j = {
        {"format", kModelFormat},
        {"dtype", "f64le"},
        {"count", params.size()},
        {"config",
         {{"d_model", c.d_model},
          {"n_layers", c.n_layers},
          {"n_heads", c.n_heads},
          {"context_len", c.context_len},
          {"vocab_size", c.vocab_size()},
          {"seed", c.seed}}},
        {"tensors", tensors},
    };
    return j.dump(2) + "\n";
}

std::string model_hash(const lm::ModelParams& params) {
    return sha256_hex(encode_params(params) + params_manifest(params));
}

fs::path manifest_path_for(const fs::path& bin_path) {
    fs::path p = bin_path;
    p.replace_extension(".json");
    return p;
}

std::string save_model(const fs::path& bin_path, const lm::ModelParams& params) {
    const std::string bin = encode_params(params);
    const std::string manifest = params_manifest(params);
    atomic_write(bin_path, bin);
    atomic_write(manifest_path_for(bin_path), manifest);
    return sha256_hex(bin + manifest);
}

lm::ModelParams load_model(const fs::path& bin_path) {
    const fs::path manifest_path = manifest_path_for(bin_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid model manifest " + manifest_path.string() + ": " + e.what());
    }
    if (j.value("format", "") != kModelFormat) throw IoError("unsupported model format in " + manifest_path.string());
    lm::ModelConfig cfg;
    const auto& c = j.at("config");
    cfg.d_model = c.at("d_model").get<int>();
    cfg.n_layers = c.at("n_layers").get<int>();
    cfg.n_heads = c.at("n_heads").get<int>();
    cfg.context_len = c.at("context_len").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();

    const std::string bin = read_file(bin_path);
    if (bin.size() % sizeof(double) != 0) throw IoError("model file size is not a multiple of 8: " + bin_path.string());
    std::vector<double> values(bin.size() / sizeof(double));
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t le = 0;
        std::memcpy(&le, bin.data() + i * sizeof(le), sizeof(le));
        values[i] = std::bit_cast<double>(to_little_endian(le));
    }
    return lm::ModelParams::from_values(cfg, std::move(values));
}

}  // namespace llmceg::io
