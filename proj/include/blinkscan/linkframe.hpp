#pragma once

// Wire codec for the sensor link.
//
//   byte 0   sync      0xA5
//   byte 1   seq       wrapping frame counter
//   byte 2-3 sample    big-endian, 10-bit (upper 6 bits zero)
//   byte 4   dt        milliseconds since the previous frame
//   byte 5   checksum  seq ^ sample_hi ^ sample_lo ^ dt
//
// Capture files (.blk) are raw concatenated frames.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "blinkscan/blinksense.hpp"

namespace blinkscan::linkframe {

inline constexpr std::uint8_t kSync = 0xA5;
inline constexpr std::size_t kFrameSize = 6;
inline constexpr int kMaxDt = 255;

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

struct Frame {
    std::uint8_t seq = 0;
    std::uint16_t sample = 0;
    std::uint8_t dt = 0;

    friend bool operator==(const Frame&, const Frame&) = default;
};

struct DecodeStats {
    std::uint64_t frames_ok = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t resyncs = 0;

    friend bool operator==(const DecodeStats&, const DecodeStats&) = default;
};

class SampleOutOfRange : public std::out_of_range {
public:
    explicit SampleOutOfRange(int sample);
};

FrameBytes encode(std::uint8_t seq, int sample, std::uint8_t dt);

/// Parses one frame at the start of `bytes`; nullopt if the sync byte,
/// checksum or sample range is wrong.
std::optional<Frame> parse_frame(std::span<const std::uint8_t> bytes);

/// Encodes a timestamped sample stream starting from t = 0. Gaps longer than
/// 255 ms are bridged with repeats of the previous sample (of the first sample
/// for a late start). Sequence numbers start at `first_seq`.
std::vector<std::uint8_t> encode_samples(std::span<const blinksense::SensorSample> samples,
                                         std::uint8_t first_seq = 0);

/// Incremental decoder.
///
/// While locked, frames are taken back to back. A bad frame drops the lock
/// and the search restarts one byte after the start of the last good frame,
/// so a spurious frame accepted across a splice cannot swallow the real frame
/// behind it. While searching, a candidate is accepted only if the next six
/// bytes also form a valid frame, or if the stream ends first.
class StreamDecoder {
public:
    StreamDecoder() = default;
    /// With `keep_frames`, every accepted frame is also logged.
    explicit StreamDecoder(bool keep_frames) : keep_frames_(keep_frames) {}

    /// Appends bytes and returns the samples they complete.
    std::vector<blinksense::SensorSample> feed(std::span<const std::uint8_t> bytes);

    /// Flushes frames held back for lookahead at end of stream.
    std::vector<blinksense::SensorSample> finish();

    const DecodeStats& stats() const { return stats_; }
    const std::vector<Frame>& frames() const { return frames_; }

private:
    void run(bool at_end, std::vector<blinksense::SensorSample>& out);
    void accept(std::size_t pos, const Frame& f, std::vector<blinksense::SensorSample>& out);
    void compact();

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
    std::optional<std::size_t> last_start_;
    bool locked_ = true;
    std::int64_t t_ = 0;
    std::optional<std::uint8_t> last_seq_;
    DecodeStats stats_;
    bool keep_frames_ = false;
    std::vector<Frame> frames_;
};

struct Decoded {
    std::vector<blinksense::SensorSample> samples;
    std::vector<Frame> frames;
    DecodeStats stats;
};

Decoded decode_stream(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_capture(const std::filesystem::path& path);
void write_capture(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace blinkscan::linkframe
