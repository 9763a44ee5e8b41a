#include "blinkscan/linkframe.hpp"

#include <fstream>
#include <iterator>
#include <string>

namespace blinkscan::linkframe {

using blinksense::SensorSample;

SampleOutOfRange::SampleOutOfRange(int sample)
    : std::out_of_range("sample out of range [0, 1023]: " + std::to_string(sample)) {}

FrameBytes encode(std::uint8_t seq, int sample, std::uint8_t dt) {
    if (sample < 0 || sample > blinksense::kAdcMax) throw SampleOutOfRange(sample);
    const auto hi = static_cast<std::uint8_t>(sample >> 8);
    const auto lo = static_cast<std::uint8_t>(sample & 0xFF);
    return {kSync, seq, hi, lo, dt, static_cast<std::uint8_t>(seq ^ hi ^ lo ^ dt)};
}

std::optional<Frame> parse_frame(std::span<const std::uint8_t> b) {
    if (b.size() < kFrameSize || b[0] != kSync) return std::nullopt;
    if ((b[1] ^ b[2] ^ b[3] ^ b[4]) != b[5]) return std::nullopt;
    if (b[2] & 0xFC) return std::nullopt;
    return Frame{b[1], static_cast<std::uint16_t>((b[2] << 8) | b[3]), b[4]};
}

std::vector<std::uint8_t> encode_samples(std::span<const SensorSample> samples,
                                         std::uint8_t first_seq) {
    std::vector<std::uint8_t> out;
    out.reserve(samples.size() * kFrameSize);
    std::uint8_t seq = first_seq;
    std::int64_t prev_t = 0;
    int held = samples.empty() ? 0 : samples.front().v;
    bool first = true;

    auto emit = [&](int v, std::int64_t dt) {
        const auto f = encode(seq++, v, static_cast<std::uint8_t>(dt));
        out.insert(out.end(), f.begin(), f.end());
    };

    for (const auto& s : samples) {
        if (s.t_ms < prev_t || (!first && s.t_ms == prev_t)) {
            throw std::invalid_argument("encode_samples: timestamps must increase from t=0");
        }
        if (s.v < 0 || s.v > blinksense::kAdcMax) throw SampleOutOfRange(s.v);
        std::int64_t gap = s.t_ms - prev_t;
        while (gap > kMaxDt) {
            emit(held, kMaxDt);
            gap -= kMaxDt;
        }
        emit(s.v, gap);
        held = s.v;
        prev_t = s.t_ms;
        first = false;
    }
    return out;
}

std::vector<SensorSample> StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    std::vector<SensorSample> out;
    run(false, out);
    compact();
    return out;
}

std::vector<SensorSample> StreamDecoder::finish() {
    std::vector<SensorSample> out;
    run(true, out);
    buf_.clear();
    pos_ = 0;
    last_start_.reset();
    return out;
}

void StreamDecoder::run(bool at_end, std::vector<SensorSample>& out) {
    const std::span<const std::uint8_t> all(buf_);
    for (;;) {
        const std::size_t avail = buf_.size() - pos_;
        if (avail < kFrameSize) return;

        if (locked_) {
            if (auto f = parse_frame(all.subspan(pos_, kFrameSize))) {
                accept(pos_, *f, out);
                pos_ += kFrameSize;
                continue;
            }
            locked_ = false;
            ++stats_.resyncs;
            pos_ = last_start_ ? *last_start_ + 1 : pos_ + 1;
            continue;
        }

        if (buf_[pos_] != kSync) {
            ++pos_;
            continue;
        }
        const auto f = parse_frame(all.subspan(pos_, kFrameSize));
        if (!f) {
            ++pos_;
            continue;
        }
        if (avail >= 2 * kFrameSize) {
            if (!parse_frame(all.subspan(pos_ + kFrameSize, kFrameSize))) {
                ++pos_;
                continue;
            }
        } else if (!at_end) {
            return;  // wait for lookahead bytes
        }
        accept(pos_, *f, out);
        pos_ += kFrameSize;
        locked_ = true;
    }
}

void StreamDecoder::accept(std::size_t pos, const Frame& f, std::vector<SensorSample>& out) {
    if (last_seq_) {
        const auto expected = static_cast<std::uint8_t>(*last_seq_ + 1);
        stats_.frames_dropped += static_cast<std::uint8_t>(f.seq - expected);
    }
    last_seq_ = f.seq;
    last_start_ = pos;
    ++stats_.frames_ok;
    if (keep_frames_) frames_.push_back(f);
    t_ += f.dt;
    out.push_back({t_, f.sample});
}

void StreamDecoder::compact() {
    std::size_t keep = pos_;
    if (locked_ && last_start_) keep = std::min(keep, *last_start_);
    if (keep < 4096) return;
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(keep));
    pos_ -= keep;
    if (last_start_) {
        last_start_ = *last_start_ >= keep ? std::optional(*last_start_ - keep) : std::nullopt;
    }
}

Decoded decode_stream(std::span<const std::uint8_t> bytes) {
    StreamDecoder dec(true);
    Decoded d;
    d.samples = dec.feed(bytes);
    auto tail = dec.finish();
    d.samples.insert(d.samples.end(), tail.begin(), tail.end());
    d.stats = dec.stats();
    d.frames = dec.frames();
    return d;
}

std::vector<std::uint8_t> read_capture(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open capture file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_capture(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write capture file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

}  // namespace blinkscan::linkframe
