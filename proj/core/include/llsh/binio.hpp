#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "llsh/errors.hpp"

// Little-endian primitives shared by all binary file formats.

namespace llsh::binio {

static_assert(std::endian::native == std::endian::little,
              "serialization code assumes a little-endian host");

template <typename T>
inline void write_raw(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
inline T read_raw(std::istream& is, const char* what) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw DataError(std::string("truncated input while reading ") + what);
    return value;
}

inline void write_magic(std::ostream& os, const char magic[4]) {
    os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char magic[4], const char* format_name) {
    char buf[4] = {0, 0, 0, 0};
    is.read(buf, 4);
    if (!is || std::memcmp(buf, magic, 4) != 0) {
        throw DataError(std::string("bad magic, not a ") + format_name + " file");
    }
}

template <typename T>
inline void write_array(std::ostream& os, const std::vector<T>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
inline void read_array(std::istream& is, std::vector<T>& v, size_t count, const char* what) {
    v.resize(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(T)));
    if (!is) throw DataError(std::string("truncated input while reading ") + what);
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_raw<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const char* what) {
    auto len = read_raw<uint32_t>(is, what);
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw DataError(std::string("truncated input while reading ") + what);
    return s;
}

}  // namespace llsh::binio
