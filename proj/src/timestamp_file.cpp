#include "ghzsim/timestamp_file.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>
#include <tuple>

namespace ghz {

namespace {

void put_le(std::string& out, std::uint64_t value, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view in, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    }
    return v;
}

}  // namespace

std::string encode_timestamps(std::span<const TimestampStream> streams) {
    std::vector<std::tuple<std::uint64_t, int, ClickOrigin>> records;
    for (const auto& s : streams) {
        if (s.channel < 0 || s.channel > 255) {
            throw std::invalid_argument("channel id does not fit in one byte");
        }
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            const ClickOrigin o = i < s.click_origins.size() ? s.click_origins[i] : ClickOrigin::signal;
            records.emplace_back(s.times[i], s.channel, o);
        }
    }
    std::sort(records.begin(), records.end());

    std::string out;
    out.reserve(kTimestampHeaderBytes + records.size() * kTimestampRecordBytes);
    out.append("CGTS");
    put_le(out, kTimestampFormatVersion, 4);
    put_le(out, records.size(), 8);
    for (const auto& [time, channel, origin] : records) {
        put_le(out, time, 8);
        out.push_back(static_cast<char>(channel));
        out.push_back(static_cast<char>(origin));
        out.append(6, '\0');
    }
    return out;
}

std::vector<TimestampStream> decode_timestamps(std::string_view bytes) {
    if (bytes.size() < kTimestampHeaderBytes || bytes.substr(0, 4) != "CGTS") {
        throw std::runtime_error("not a CGTS timestamp file");
    }
    const auto version = get_le(bytes, 4, 4);
    if (version != kTimestampFormatVersion) {
        throw std::runtime_error("unsupported timestamp file version " + std::to_string(version));
    }
    const auto count = get_le(bytes, 8, 8);
    if (bytes.size() != kTimestampHeaderBytes + count * kTimestampRecordBytes) {
        throw std::runtime_error("timestamp file length does not match its record count");
    }
    std::map<int, TimestampStream> by_channel;
    for (std::uint64_t r = 0; r < count; ++r) {
        const std::size_t off = kTimestampHeaderBytes + r * kTimestampRecordBytes;
        const int channel = static_cast<unsigned char>(bytes[off + 8]);
        const auto origin = static_cast<unsigned char>(bytes[off + 9]);
        if (origin > 1) throw std::runtime_error("bad origin flag in timestamp record");
        auto& s = by_channel[channel];
        s.channel = channel;
        s.times.push_back(get_le(bytes, off, 8));
        s.click_origins.push_back(static_cast<ClickOrigin>(origin));
    }
    std::vector<TimestampStream> out;
    for (auto& [_, s] : by_channel) out.push_back(std::move(s));
    return out;
}

void write_timestamp_file(const std::filesystem::path& path,
                          std::span<const TimestampStream> streams) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::string bytes = encode_timestamps(streams);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<TimestampStream> read_timestamp_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_timestamps(bytes);
}

}  // namespace ghz
