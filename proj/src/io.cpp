#include "ilab/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "ilab/errors.hpp"

namespace ilab::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string quote_csv_cell(std::string_view cell) {
    if (cell.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw DomainError("CSV header is empty");
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) text_ += ',';
        text_ += quote_csv_cell(header_[i]);
    }
    text_ += "\r\n";
}

void CsvTable::add_row(std::span<const double> values) {
    if (values.size() != header_.size()) throw DomainError("CSV row width does not match header");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) text_ += ',';
        text_ += format_double(values[i]);
    }
    text_ += "\r\n";
    ++rows_;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

EncodedHeatmap encode_heatmap(std::span<const double> values, std::size_t width, std::size_t height,
                              std::span<const std::uint8_t> mask) {
    if (width == 0 || height == 0 || values.empty()) throw DomainError("heatmap table is empty");
    if (values.size() != width * height) throw DomainError("heatmap size does not match width x height");
    if (!mask.empty() && mask.size() != values.size()) throw DomainError("mask size does not match heatmap");

    EncodedHeatmap out;
    out.scale.width = width;
    out.scale.height = height;
    auto masked = [&](std::size_t i) { return (!mask.empty() && mask[i]) || !std::isfinite(values[i]); };

    bool any = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (masked(i)) {
            ++out.scale.mask_count;
            continue;
        }
        if (!any) {
            out.scale.min = out.scale.max = values[i];
            any = true;
        } else {
            out.scale.min = std::min(out.scale.min, values[i]);
            out.scale.max = std::max(out.scale.max, values[i]);
        }
    }

    const double range = out.scale.max - out.scale.min;
    out.pixels.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (masked(i)) {
            out.pixels[i] = 0;
        } else if (!(range > 0.0)) {
            out.pixels[i] = degenerate_pixel;
        } else {
            const double s = (values[i] - out.scale.min) / range;
            out.pixels[i] = static_cast<std::uint16_t>(std::lround(std::clamp(s, 0.0, 1.0) * 65535.0));
        }
    }

    std::ostringstream header;
    header << "P5\n" << width << ' ' << height << "\n65535\n";
    out.pgm = header.str();
    out.pgm.reserve(out.pgm.size() + 2 * values.size());
    for (std::uint16_t p : out.pixels) {
        out.pgm += static_cast<char>(p >> 8);
        out.pgm += static_cast<char>(p & 0xFF);
    }
    return out;
}

std::string scale_sidecar_json(const HeatmapScale& scale) {
    nlohmann::ordered_json j;
    j["scaling"] = "linear";
    j["min"] = scale.min;
    j["max"] = scale.max;
    j["mask_count"] = scale.mask_count;
    j["width"] = scale.width;
    j["height"] = scale.height;
    j["masked_pixel"] = 0;
    j["degenerate_pixel"] = degenerate_pixel;
    return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_heatmap(std::span<const double> values, std::size_t width, std::size_t height,
                                                const std::filesystem::path& path, std::span<const std::uint8_t> mask) {
    const EncodedHeatmap enc = encode_heatmap(values, width, height, mask);
    std::filesystem::path sidecar = path;
    sidecar.replace_extension(".scale.json");
    write_file_atomic(path, enc.pgm);
    write_file_atomic(sidecar, scale_sidecar_json(enc.scale));
    return {path, sidecar};
}

}  // namespace ilab::io
