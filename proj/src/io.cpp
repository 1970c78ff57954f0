#include "retina/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace retina {

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("short write: " + path.string());
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return fnv1a64(bytes.data(), bytes.size());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

void write_pgm(const std::filesystem::path& path, std::span<const double> pixels,
               int width, int height) {
    if (static_cast<std::size_t>(width) * height != pixels.size()) {
        throw std::invalid_argument("pgm dimensions do not match pixel count");
    }
    std::ostringstream header;
    header << "P5\n" << width << " " << height << "\n255\n";
    std::vector<std::uint8_t> bytes;
    const std::string h = header.str();
    bytes.reserve(h.size() + pixels.size());
    bytes.insert(bytes.end(), h.begin(), h.end());
    for (double v : pixels) {
        const double clamped = std::clamp(v, 0.0, 255.0);
        bytes.push_back(static_cast<std::uint8_t>(std::lround(clamped)));
    }
    write_file(path, bytes);
}

std::vector<std::uint8_t> read_pgm(const std::filesystem::path& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path.string());
    }
    std::string magic;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || maxval != 255 || width <= 0 || height <= 0) {
        throw std::runtime_error("unsupported pgm file: " + path.string());
    }
    in.get();  // single whitespace after header
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
    if (!in) {
        throw std::runtime_error("truncated pgm file: " + path.string());
    }
    return pixels;
}

}  // namespace retina
