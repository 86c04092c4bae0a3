// Binary timestamp files.
//
// Layout (little-endian): "CGTS", u32 version (= 1), u64 record count, then
// 16-byte records {u64 time_ps, u8 channel, u8 origin (0 signal, 1 dark),
// 6 zero bytes}. Records are written in (time, channel) order.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ghzsim/simulator.hpp"

namespace ghz {

inline constexpr std::uint32_t kTimestampFormatVersion = 1;
inline constexpr std::size_t kTimestampHeaderBytes = 16;
inline constexpr std::size_t kTimestampRecordBytes = 16;

std::string encode_timestamps(std::span<const TimestampStream> streams);

/// Splits records back into per-channel streams ordered by channel id.
/// Throws std::runtime_error on a bad magic, version or length.
std::vector<TimestampStream> decode_timestamps(std::string_view bytes);

void write_timestamp_file(const std::filesystem::path& path,
                          std::span<const TimestampStream> streams);
std::vector<TimestampStream> read_timestamp_file(const std::filesystem::path& path);

}  // namespace ghz
