#pragma once

// Deterministic data emission: CSV tables, 16-bit PGM heatmaps with scale sidecars,
// SHA-256 content hashes and atomic file writes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ilab::io {

/// Shortest decimal string that round-trips to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

/// RFC-4180 CSV assembled in memory. Header cells carry units, e.g. "theta [rad]".
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::span<const double> values);
    void add_row(std::initializer_list<double> values) { add_row(std::span<const double>(values.begin(), values.size())); }
    std::size_t columns() const noexcept { return header_.size(); }
    std::size_t rows() const noexcept { return rows_; }
    const std::string& text() const noexcept { return text_; }

private:
    std::vector<std::string> header_;
    std::string text_;
    std::size_t rows_ = 0;
};

std::string quote_csv_cell(std::string_view cell);

/// Writes to a temporary sibling then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct HeatmapScale {
    double min = 0.0;
    double max = 0.0;
    std::size_t mask_count = 0;
    std::size_t width = 0;
    std::size_t height = 0;
};

/// Pixel value for the all-equal (degenerate range) case.
inline constexpr std::uint16_t degenerate_pixel = 32768;

/// P5 image, maxval 65535, big-endian samples, row-major. Masked cells (mask[i] != 0,
/// or non-finite values) render as 0 and are excluded from the min/max.
struct EncodedHeatmap {
    std::string pgm;
    HeatmapScale scale;
    std::vector<std::uint16_t> pixels;
};

EncodedHeatmap encode_heatmap(std::span<const double> values, std::size_t width, std::size_t height,
                              std::span<const std::uint8_t> mask = {});

std::string scale_sidecar_json(const HeatmapScale& scale);

/// Writes <path> and <stem>.scale.json next to it; returns both paths.
std::vector<std::filesystem::path> emit_heatmap(std::span<const double> values, std::size_t width, std::size_t height,
                                                const std::filesystem::path& path,
                                                std::span<const std::uint8_t> mask = {});

}  // namespace ilab::io
