#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ghostrec/error.hpp"
#include "ghostrec/grid.hpp"

namespace ghostrec {

enum class PgmDepth { bits8 = 255, bits16 = 65535 };

/// Integer levels written for an image: values divided by the image maximum,
/// clamped to [0, 1] and rounded. All zeros when the maximum is not positive.
inline std::vector<std::uint16_t> quantize(const Image& img, PgmDepth depth) {
    const double maxval = static_cast<double>(depth);
    double mx = 0.0;
    for (double v : img.flat()) {
        if (!std::isfinite(v)) throw InvalidArgument("cannot write a non-finite image");
        mx = std::max(mx, v);
    }
    std::vector<std::uint16_t> out(img.size(), 0);
    if (mx > 0.0)
        for (std::size_t i = 0; i < img.size(); ++i)
            out[i] = static_cast<std::uint16_t>(std::lround(std::clamp(img[i] / mx, 0.0, 1.0) * maxval));
    return out;
}

/// Binary PGM (P5), max-normalized. 16-bit samples are big-endian.
inline void write_pgm(const std::filesystem::path& path, const Image& img, PgmDepth depth = PgmDepth::bits16) {
    const auto levels = quantize(img, depth);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << "P5\n" << img.cols() << ' ' << img.rows() << '\n' << static_cast<int>(depth) << '\n';
    for (std::uint16_t v : levels) {
        if (depth == PgmDepth::bits8) {
            f.put(static_cast<char>(v));
        } else {
            f.put(static_cast<char>(v >> 8));
            f.put(static_cast<char>(v & 0xFF));
        }
    }
    if (!f) throw IoError("write failed for " + path.string());
}

struct PgmImage {
    Image levels;  // raw integer sample values
    int maxval = 0;

    /// Samples scaled to [0, 1].
    [[nodiscard]] Image normalized() const {
        Image out = levels;
        for (auto& v : out.flat()) v /= maxval;
        return out;
    }
};

/// Reads P5 (8 or 16 bit) and P2 PGM files.
inline PgmImage read_pgm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    auto token = [&]() {
        std::string t;
        char ch;
        while (f.get(ch)) {
            if (ch == '#') {
                std::string skip;
                std::getline(f, skip);
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!t.empty()) break;
            } else {
                t.push_back(ch);
            }
        }
        return t;
    };
    auto number = [&](const char* what) {
        const std::string t = token();
        int v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || ptr != t.data() + t.size() || v <= 0)
            throw IoError("bad PGM " + std::string(what) + " in " + path.string());
        return v;
    };
    const std::string magic = token();
    if (magic != "P5" && magic != "P2") throw IoError(path.string() + " is not a PGM file");
    const int w = number("width"), h = number("height"), maxval = number("maxval");
    if (maxval > 65535) throw IoError("PGM maxval too large in " + path.string());
    PgmImage out{Image(h, w), maxval};
    for (std::size_t i = 0; i < out.levels.size(); ++i) {
        int v;
        if (magic == "P2") {
            v = number("sample");
        } else if (maxval < 256) {
            const int c = f.get();
            if (c == EOF) throw IoError("truncated PGM " + path.string());
            v = c;
        } else {
            const int hi = f.get(), lo = f.get();
            if (hi == EOF || lo == EOF) throw IoError("truncated PGM " + path.string());
            v = (hi << 8) | lo;
        }
        out.levels[i] = v;
    }
    return out;
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Minimal CSV table with a fixed column order.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns_.size()) throw InvalidArgument("CSV row has the wrong number of cells");
        rows_.push_back(std::move(cells));
    }

    [[nodiscard]] std::string str() const {
        std::ostringstream os;
        write_line(os, columns_);
        for (const auto& r : rows_) write_line(os, r);
        return os.str();
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open " + path.string() + " for writing");
        f << str();
        if (!f) throw IoError("write failed for " + path.string());
    }

    [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }
    [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const { return rows_; }

private:
    static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
            if (!quote) {
                os << cells[i];
                continue;
            }
            os << '"';
            for (char c : cells[i]) os << (c == '"' ? "\"\"" : std::string(1, c));
            os << '"';
        }
        os << '\n';
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Splits simple CSV text (no embedded newlines) into header and rows.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cur.push_back(c);
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                cells.push_back(std::move(cur));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        cells.push_back(std::move(cur));
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace ghostrec
