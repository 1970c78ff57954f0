#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "retina/rng.hpp"

namespace retina {

// Explicit little-endian byte composition for all binary artifacts, so the
// file formats are identical regardless of host byte order.
class ByteWriter {
public:
    void put_u8(std::uint8_t v) { bytes_.push_back(v); }

    void put_u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

    void put_string(std::string_view s) {
        put_u32(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::uint64_t content_hash() const { return fnv1a64(bytes_.data(), bytes_.size()); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t get_u8() { return take(1)[0]; }

    std::uint32_t get_u32() {
        auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    std::uint64_t get_u64() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    double get_f64() { return std::bit_cast<double>(get_u64()); }

    std::string get_string() {
        const auto n = get_u32();
        auto b = take(n);
        return std::string(b.begin(), b.end());
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> take(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw std::runtime_error("binary record truncated");
        }
        auto view = bytes_.subspan(pos_, n);
        pos_ += n;
        return view;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

// 8-bit binary PGM (P5). Values are clamped to [0,255] and rounded.
void write_pgm(const std::filesystem::path& path, std::span<const double> pixels,
               int width, int height);
std::vector<std::uint8_t> read_pgm(const std::filesystem::path& path, int& width, int& height);

}  // namespace retina
