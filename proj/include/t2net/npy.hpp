#pragma once

// Minimal reader/writer for NumPy .npy (format 1.0), C order, little endian.

#include <t2net/error.hpp>
#include <t2net/tensor.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>

namespace t2net::npy {

template <typename T>
constexpr const char* descr() {
    if constexpr (std::is_same_v<T, float>) return "<f4";
    else if constexpr (std::is_same_v<T, double>) return "<f8";
    else if constexpr (std::is_same_v<T, std::int8_t>) return "|i1";
    else if constexpr (std::is_same_v<T, std::int32_t>) return "<i4";
    else if constexpr (std::is_same_v<T, std::int64_t>) return "<i8";
    else static_assert(sizeof(T) == 0, "unsupported npy element type");
}

inline std::string header_for(const std::string& dtype, const Shape& shape) {
    std::string dict = "{'descr': '" + dtype + "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        dict += std::to_string(shape[i]);
        if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
        if (i + 1 < shape.size()) dict += " ";
    }
    dict += "), }";
    const std::size_t preamble = 10;
    std::size_t total = preamble + dict.size() + 1;
    const std::size_t padded = (total + 63) / 64 * 64;
    dict.append(padded - total, ' ');
    dict.push_back('\n');
    return dict;
}

template <typename T>
void save(const std::filesystem::path& path, const Tensor<T>& tensor) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    const std::string header = header_for(descr<T>(), tensor.shape());
    const char magic[] = {'\x93', 'N', 'U', 'M', 'P', 'Y', '\x01', '\x00'};
    out.write(magic, sizeof magic);
    const auto len = static_cast<std::uint16_t>(header.size());
    const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
    out.write(len_bytes, 2);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(tensor.data()), static_cast<std::streamsize>(tensor.size() * sizeof(T)));
    if (!out) throw InputError("failed writing " + path.string());
}

namespace detail {

inline std::string field(const std::string& header, const std::string& key) {
    const auto pos = header.find("'" + key + "'");
    if (pos == std::string::npos) throw InputError("npy header lacks '" + key + "'");
    auto colon = header.find(':', pos);
    auto start = header.find_first_not_of(' ', colon + 1);
    if (header[start] == '(') return header.substr(start, header.find(')', start) - start + 1);
    if (header[start] == '\'') return header.substr(start + 1, header.find('\'', start + 1) - start - 1);
    return header.substr(start, header.find_first_of(",}", start) - start);
}

inline Shape parse_shape(const std::string& tuple) {
    Shape shape;
    std::size_t i = 1;
    while (i < tuple.size()) {
        while (i < tuple.size() && !std::isdigit(static_cast<unsigned char>(tuple[i]))) ++i;
        if (i >= tuple.size()) break;
        std::size_t j = i;
        while (j < tuple.size() && std::isdigit(static_cast<unsigned char>(tuple[j]))) ++j;
        shape.push_back(std::stoull(tuple.substr(i, j - i)));
        i = j;
    }
    return shape;
}

} // namespace detail

template <typename T>
Tensor<T> load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) throw InputError(path.string() + " is not an npy file");
    std::uint32_t header_len = 0;
    if (magic[6] == 1) {
        unsigned char b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        header_len = b[0] | (b[1] << 8);
    } else {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    const std::string dtype = detail::field(header, "descr");
    if (dtype != descr<T>()) {
        throw InputError(path.string() + ": dtype " + dtype + " but expected " + descr<T>());
    }
    if (detail::field(header, "fortran_order") != "False") throw InputError(path.string() + ": Fortran order unsupported");
    Shape shape = detail::parse_shape(detail::field(header, "shape"));
    Tensor<T> tensor(shape);
    in.read(reinterpret_cast<char*>(tensor.data()), static_cast<std::streamsize>(tensor.size() * sizeof(T)));
    if (!in) throw InputError(path.string() + ": truncated data");
    return tensor;
}

} // namespace t2net::npy
