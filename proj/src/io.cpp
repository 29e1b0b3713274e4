#include "disprefine/io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <system_error>

#include "disprefine/errors.hpp"

namespace disprefine {

namespace fs = std::filesystem;

namespace {

// Upper bound on decoded pixel counts; protects against absurd headers.
constexpr std::uint64_t kMaxPixels = std::uint64_t{1} << 28;

[[noreturn]] void format_error(std::string_view source, const std::string& msg) {
    std::ostringstream os;
    os << source << ": " << msg;
    throw FormatError(os.str());
}

std::uint32_t load_u32_le(const std::byte* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t load_u32_be(const std::byte* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void store_u32_le(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

void store_f32_le(std::vector<std::byte>& out, float f) { store_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

void append_text(std::vector<std::byte>& out, std::string_view s) {
    for (char c : s) out.push_back(static_cast<std::byte>(c));
}

bool is_space(std::byte b) {
    const auto c = static_cast<char>(b);
    return c == ' ' || c == '\n' || c == '\r' || c == '\t';
}

// Cursor over the ASCII PFM header.
class HeaderReader {
public:
    HeaderReader(std::span<const std::byte> bytes, std::string_view source)
        : bytes_(bytes), source_(source) {}

    std::size_t offset() const { return pos_; }

    std::string token(const char* field) {
        while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
        if (start == pos_) {
            format_error(source_, std::string("malformed header: missing ") + field +
                                      " at offset " + std::to_string(start));
        }
        std::string s(pos_ - start, '\0');
        std::memcpy(s.data(), bytes_.data() + start, s.size());
        return s;
    }

    // The header ends with exactly one whitespace byte after the scale.
    void single_separator() {
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
            format_error(source_, "malformed header: missing separator after scale at offset " +
                                      std::to_string(pos_));
        }
        ++pos_;
    }

private:
    std::span<const std::byte> bytes_;
    std::string_view source_;
    std::size_t pos_ = 0;
};

template <typename T>
T parse_number(const std::string& tok, std::string_view source, const char* field, std::size_t offset) {
    T v{};
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        format_error(source, std::string("malformed header: bad ") + field + " '" + tok +
                                 "' near offset " + std::to_string(offset));
    }
    return v;
}

}  // namespace

void validate(const CalibrationFile& calib) {
    if (!std::isfinite(calib.focal_px) || calib.focal_px <= 0.0) {
        throw DomainError("non-positive focal length");
    }
    if (!std::isfinite(calib.baseline_mm) || calib.baseline_mm <= 0.0) {
        throw DomainError("non-positive baseline");
    }
    if (!std::isfinite(calib.min_valid_disparity_px) || calib.min_valid_disparity_px < 0.0) {
        throw DomainError("negative min_valid_disparity_px");
    }
}

// ---------------------------------------------------------------------------
// PFM

ScalarMap parse_pfm(std::span<const std::byte> bytes, std::string_view source) {
    if (bytes.size() < 2) {
        format_error(source, "malformed header: file shorter than magic");
    }
    const char m0 = static_cast<char>(bytes[0]);
    const char m1 = static_cast<char>(bytes[1]);
    if (m0 == 'P' && m1 == 'F') {
        format_error(source, "unsupported channel count (PF, 3 channels) at offset 0");
    }
    if (m0 != 'P' || m1 != 'f') {
        format_error(source, "malformed header: bad magic at offset 0");
    }
    HeaderReader rd(bytes.subspan(0), source);
    const std::string magic = rd.token("magic");
    if (magic != "Pf") {
        format_error(source, "malformed header: bad magic at offset 0");
    }
    const std::size_t w_off = rd.offset();
    const int width = parse_number<int>(rd.token("width"), source, "width", w_off);
    const std::size_t h_off = rd.offset();
    const int height = parse_number<int>(rd.token("height"), source, "height", h_off);
    const std::size_t s_off = rd.offset();
    const double scale = parse_number<double>(rd.token("scale"), source, "scale", s_off);
    rd.single_separator();

    if (width <= 0 || height <= 0) {
        format_error(source, "malformed header: non-positive dimensions " + std::to_string(width) +
                                 "x" + std::to_string(height));
    }
    const std::uint64_t npix = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
    if (npix > kMaxPixels) {
        format_error(source, "malformed header: dimensions too large");
    }
    if (!std::isfinite(scale) || scale == 0.0) {
        format_error(source, "zero or non-finite scale near offset " + std::to_string(s_off));
    }
    const bool little = scale < 0.0;
    const std::size_t data_off = rd.offset();
    const std::uint64_t need = npix * 4;
    if (bytes.size() - data_off < need) {
        format_error(source, "truncated payload: expected " + std::to_string(need) +
                                 " bytes at offset " + std::to_string(data_off) + ", found " +
                                 std::to_string(bytes.size() - data_off));
    }

    ScalarMap map(width, height, 0.0, false);
    const std::byte* p = bytes.data() + data_off;
    for (int row = 0; row < height; ++row) {
        const int y = height - 1 - row;
        for (int x = 0; x < width; ++x, p += 4) {
            const std::uint32_t bits = little ? load_u32_le(p) : load_u32_be(p);
            const float f = std::bit_cast<float>(bits);
            if (std::isfinite(f)) {
                map.set(x, y, static_cast<double>(f));
            } else {
                map.values()[map.index(x, y)] = static_cast<double>(f);
            }
        }
    }
    return map;
}

std::vector<std::byte> encode_pfm(const ScalarMap& map) {
    if (map.empty()) {
        throw DomainError("write_pfm: empty map");
    }
    std::vector<std::byte> out;
    out.reserve(32 + map.size() * 4);
    append_text(out, "Pf\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) +
                         "\n-1\n");
    for (int y = map.height() - 1; y >= 0; --y) {
        for (int x = 0; x < map.width(); ++x) {
            const float f = map.valid(x, y) ? static_cast<float>(map.value(x, y))
                                            : std::numeric_limits<float>::quiet_NaN();
            store_f32_le(out, f);
        }
    }
    return out;
}

ScalarMap read_pfm(const fs::path& path) {
    const auto bytes = read_file(path);
    return parse_pfm(bytes, path.string());
}

void write_pfm(const ScalarMap& map, const fs::path& path) { write_file_atomic(path, encode_pfm(map)); }

// ---------------------------------------------------------------------------
// .flo

FlowMap parse_flo(std::span<const std::byte> bytes, std::string_view source) {
    if (bytes.size() < 12) {
        format_error(source, "size mismatch: header needs 12 bytes, found " + std::to_string(bytes.size()));
    }
    const float magic = std::bit_cast<float>(load_u32_le(bytes.data()));
    if (magic != kFloMagic) {
        format_error(source, "bad magic at offset 0");
    }
    const auto width = static_cast<std::int32_t>(load_u32_le(bytes.data() + 4));
    const auto height = static_cast<std::int32_t>(load_u32_le(bytes.data() + 8));
    if (width <= 0 || height <= 0) {
        format_error(source, "non-positive dimensions at offset 4: " + std::to_string(width) + "x" +
                                 std::to_string(height));
    }
    const std::uint64_t npix = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
    if (npix > kMaxPixels) {
        format_error(source, "dimensions too large at offset 4");
    }
    const std::uint64_t need = 12 + npix * 8;
    if (bytes.size() != need) {
        format_error(source, "size mismatch: expected " + std::to_string(need) + " bytes, found " +
                                 std::to_string(bytes.size()));
    }
    FlowMap flow(width, height, {}, false);
    const std::byte* p = bytes.data() + 12;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x, p += 8) {
            const float dx = std::bit_cast<float>(load_u32_le(p));
            const float dy = std::bit_cast<float>(load_u32_le(p + 4));
            const bool ok = std::isfinite(dx) && std::isfinite(dy) && std::fabs(dx) <= 1e9f &&
                            std::fabs(dy) <= 1e9f;
            if (ok) flow.set(x, y, {dx, dy});
        }
    }
    return flow;
}

std::vector<std::byte> encode_flo(const FlowMap& flow) {
    if (flow.size() == 0) {
        throw DomainError("write_flo: empty flow");
    }
    std::vector<std::byte> out;
    out.reserve(12 + flow.size() * 8);
    store_f32_le(out, kFloMagic);
    store_u32_le(out, static_cast<std::uint32_t>(flow.width()));
    store_u32_le(out, static_cast<std::uint32_t>(flow.height()));
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            if (flow.valid(x, y)) {
                const Vec2 v = flow.value(x, y);
                store_f32_le(out, static_cast<float>(v.x));
                store_f32_le(out, static_cast<float>(v.y));
            } else {
                store_f32_le(out, kFloUnknown);
                store_f32_le(out, kFloUnknown);
            }
        }
    }
    return out;
}

FlowMap read_flo(const fs::path& path) {
    const auto bytes = read_file(path);
    return parse_flo(bytes, path.string());
}

void write_flo(const FlowMap& flow, const fs::path& path) { write_file_atomic(path, encode_flo(flow)); }

// ---------------------------------------------------------------------------
// PNG

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

struct PngImage {
    png_image image{};
    PngImage() {
        image.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

OcclusionMask parse_mask_png(std::span<const std::byte> bytes, std::string_view source) {
    // Signature + IHDR is 33 bytes; bit depth and color type sit at offsets 24 and 25.
    if (bytes.size() < 33) {
        format_error(source, "truncated PNG header (" + std::to_string(bytes.size()) + " bytes)");
    }
    for (std::size_t i = 0; i < kPngSignature.size(); ++i) {
        if (static_cast<std::uint8_t>(bytes[i]) != kPngSignature[i]) {
            format_error(source, "bad PNG signature at offset " + std::to_string(i));
        }
    }
    if (std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
        format_error(source, "missing IHDR chunk at offset 12");
    }
    const auto bit_depth = static_cast<int>(bytes[24]);
    const auto color_type = static_cast<int>(bytes[25]);
    if (bit_depth != 8) {
        format_error(source, "unsupported bit depth " + std::to_string(bit_depth) + " at offset 24");
    }
    if (color_type != PNG_COLOR_TYPE_GRAY) {
        format_error(source, "unsupported color type " + std::to_string(color_type) + " at offset 25");
    }
    const std::uint32_t width = load_u32_be(bytes.data() + 16);
    const std::uint32_t height = load_u32_be(bytes.data() + 20);
    if (width == 0 || height == 0 ||
        static_cast<std::uint64_t>(width) * height > kMaxPixels) {
        format_error(source, "bad PNG dimensions at offset 16");
    }

    PngImage img;
    if (!png_image_begin_read_from_memory(&img.image, bytes.data(), bytes.size())) {
        format_error(source, std::string("PNG decode failed: ") + img.image.message);
    }
    img.image.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img.image));
    if (!png_image_finish_read(&img.image, nullptr, pixels.data(), 0, nullptr)) {
        format_error(source, std::string("PNG decode failed: ") + img.image.message);
    }
    const int w = static_cast<int>(img.image.width);
    const int h = static_cast<int>(img.image.height);
    ScalarMap m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            m.set(x, y, pixels[m.index(x, y)] / 255.0);
        }
    }
    return OcclusionMask(std::move(m));
}

std::vector<std::byte> encode_gray_png(std::span<const std::uint8_t> pixels, int width, int height) {
    if (width <= 0 || height <= 0 ||
        pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DomainError("encode_gray_png: pixel buffer does not match dimensions");
    }
    PngImage img;
    img.image.width = static_cast<png_uint_32>(width);
    img.image.height = static_cast<png_uint_32>(height);
    img.image.format = PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img.image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + img.image.message);
    }
    std::vector<std::byte> out(size);
    if (!png_image_write_to_memory(&img.image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + img.image.message);
    }
    out.resize(size);
    return out;
}

std::vector<std::byte> encode_mask_png(const OcclusionMask& mask) {
    const ScalarMap& m = mask.map();
    std::vector<std::uint8_t> pixels(m.size(), 0);
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.valid(x, y)) continue;
            pixels[m.index(x, y)] = static_cast<std::uint8_t>(std::floor(255.0 * m.value(x, y) + 0.5));
        }
    }
    return encode_gray_png(pixels, m.width(), m.height());
}

OcclusionMask read_mask_png(const fs::path& path) {
    const auto bytes = read_file(path);
    return parse_mask_png(bytes, path.string());
}

void write_mask_png(const OcclusionMask& mask, const fs::path& path) {
    write_file_atomic(path, encode_mask_png(mask));
}

void write_gray_png(std::span<const std::uint8_t> pixels, int width, int height, const fs::path& path) {
    write_file_atomic(path, encode_gray_png(pixels, width, height));
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

CalibrationFile parse_calibration(std::string_view text, std::string_view source) {
    std::map<std::string, double, std::less<>> values;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        const std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line.empty() || line.front() == '#') continue;

        const auto eq = line.find('=');
        const std::string where = " at line " + std::to_string(line_no);
        if (eq == std::string_view::npos) {
            format_error(source, "expected 'key = value'" + where);
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view raw = trim(line.substr(eq + 1));
        if (key != "focal_px" && key != "baseline_mm" && key != "min_valid_disparity_px") {
            format_error(source, "unknown key " + key + where);
        }
        if (values.contains(key)) {
            format_error(source, "duplicate key " + key + where);
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (raw.empty() || ec != std::errc{} || ptr != raw.data() + raw.size()) {
            format_error(source, "bad value for " + key + where);
        }
        values.emplace(key, v);
    }

    CalibrationFile calib;
    for (const char* required : {"focal_px", "baseline_mm"}) {
        if (!values.contains(required)) {
            format_error(source, std::string("missing key ") + required);
        }
    }
    calib.focal_px = values.at("focal_px");
    calib.baseline_mm = values.at("baseline_mm");
    if (auto it = values.find("min_valid_disparity_px"); it != values.end()) {
        calib.min_valid_disparity_px = it->second;
    }
    try {
        validate(calib);
    } catch (const DomainError& e) {
        format_error(source, e.what());
    }
    return calib;
}

std::string format_calibration(const CalibrationFile& calib) {
    auto shortest = [](double v) {
        std::array<char, 64> buf{};
        const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        return std::string(buf.data(), ptr);
    };
    return "focal_px = " + shortest(calib.focal_px) + "\nbaseline_mm = " + shortest(calib.baseline_mm) +
           "\nmin_valid_disparity_px = " + shortest(calib.min_valid_disparity_px) + "\n";
}

CalibrationFile read_calibration(const fs::path& path) {
    const auto bytes = read_file(path);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return parse_calibration(text, path.string());
}

void write_calibration(const CalibrationFile& calib, const fs::path& path) {
    validate(calib);
    write_text_atomic(path, format_calibration(calib));
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::byte> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    if (size < 0) {
        throw IoError(path.string() + ": cannot determine size");
    }
    in.seekg(0, std::ios::beg);
    std::vector<std::byte> bytes(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
        throw IoError(path.string() + ": read failed");
    }
    return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::byte> bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError(tmp.string() + ": cannot open for writing");
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw IoError(tmp.string() + ": write failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError(path.string() + ": rename failed");
    }
}

void write_text_atomic(const fs::path& path, std::string_view text) {
    write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

}  // namespace disprefine
