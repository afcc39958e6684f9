#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "clir/error.hpp"

namespace clir::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
    requires std::is_arithmetic_v<T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
    requires std::is_arithmetic_v<T>
T read_le(std::istream& in, const char* what) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
        throw FormatError(std::string("truncated input while reading ") + what);
    }
    return value;
}

inline void write_bytes(std::ostream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

inline void read_bytes(std::istream& in, void* data, std::size_t size, const char* what) {
    if (size && !in.read(static_cast<char*>(data), static_cast<std::streamsize>(size))) {
        throw FormatError(std::string("truncated input while reading ") + what);
    }
}

inline void write_short_string(std::ostream& out, const std::string& s) {
    if (s.size() > 0xFFFF) throw ValidationError("string longer than 65535 bytes: " + s.substr(0, 32) + "...");
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    write_bytes(out, s.data(), s.size());
}

inline std::string read_short_string(std::istream& in, const char* what) {
    const auto len = read_le<std::uint16_t>(in, what);
    std::string s(len, '\0');
    read_bytes(in, s.data(), len, what);
    return s;
}

inline void expect_magic(std::istream& in, const char* magic, std::size_t len, const std::string& source) {
    std::string got(len, '\0');
    if (!in.read(got.data(), static_cast<std::streamsize>(len)) || std::memcmp(got.data(), magic, len) != 0) {
        throw FormatError(source + ": bad magic (expected " + std::string(magic, len) + ")");
    }
}

}  // namespace clir::detail
