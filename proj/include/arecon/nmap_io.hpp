#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "arecon/synth.hpp"

namespace arecon {

// NMAP v1, little-endian:
//   "NMAP" u32 version u32 H u32 W u32 N_J u32 N_P u32 C f32 pose[N_J]
//   f32 coords[H*W*3] u8 mask[H*W] u16 labels[H*W] f32 votes[H*W*N_J*6]
//   f32 conf[H*W*N_J] f32 features[H*W*C]
inline constexpr std::uint32_t kNmapVersion = 1;

std::string encode_nmap(const MapBundle& bundle);
MapBundle decode_nmap(std::string_view bytes);

void write_nmap(const std::filesystem::path& path, const MapBundle& bundle);
MapBundle read_nmap(const std::filesystem::path& path);

}  // namespace arecon
