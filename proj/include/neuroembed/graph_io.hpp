#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "neuroembed/skeleton.hpp"

namespace neuroembed {

// Versioned binary container of preprocessed graphs.
//
//   "MGRF" | u16 version | u32 graph count
//   per graph: str source | str dataset tag | i32 soma id | u32 node count
//              | node count x (i32 id, 3 x f64 position, f64 radius, u8 compartment)
//              | u32 edge count | edge count x (i32, i32)
//
// Strings are u32 length + UTF-8 bytes; all values little-endian.
constexpr std::uint16_t container_version = 1;

std::string encode_container(const std::vector<NeuronGraph>& graphs);
std::vector<NeuronGraph> decode_container(std::string_view bytes);

void write_container(const std::string& path, const std::vector<NeuronGraph>& graphs);
std::vector<NeuronGraph> read_container(const std::string& path);

} // namespace neuroembed
