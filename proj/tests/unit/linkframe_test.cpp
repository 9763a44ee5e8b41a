#include "blinkscan/linkframe.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "../support/frames.hpp"

namespace blinkscan::linkframe {
namespace {

using Bytes = std::vector<std::uint8_t>;

TEST(Encode, AllZero) {
    EXPECT_EQ(encode(0, 0, 0), (FrameBytes{0xA5, 0x00, 0x00, 0x00, 0x00, 0x00}));
}

TEST(Encode, KnownLayout) {
    EXPECT_EQ(encode(7, 512, 10), (FrameBytes{0xA5, 0x07, 0x02, 0x00, 0x0A, 0x0F}));
    EXPECT_EQ(encode(0xFF, 1023, 255), (FrameBytes{0xA5, 0xFF, 0x03, 0xFF, 0xFF, 0xFC}));
}

TEST(Encode, RejectsOutOfRange) {
    EXPECT_THROW(encode(1, 1024, 1), SampleOutOfRange);
    EXPECT_THROW(encode(1, -1, 1), SampleOutOfRange);
}

TEST(ParseFrame, RejectsBadChecksumSyncAndRange) {
    auto f = encode(3, 700, 10);
    EXPECT_TRUE(parse_frame(f).has_value());
    auto bad = f;
    bad[5] ^= 0x01;
    EXPECT_FALSE(parse_frame(bad).has_value());
    bad = f;
    bad[0] = 0x5A;
    EXPECT_FALSE(parse_frame(bad).has_value());
    // Upper bits set with a checksum that still matches.
    FrameBytes high{0xA5, 0x00, 0x04, 0x00, 0x00, 0x04};
    EXPECT_FALSE(parse_frame(high).has_value());
}

TEST(DecodeStream, Empty) {
    const auto d = decode_stream({});
    EXPECT_TRUE(d.samples.empty());
    EXPECT_EQ(d.stats, DecodeStats{});
}

TEST(DecodeStream, HundredFramesClean) {
    std::vector<blinksense::SensorSample> s;
    for (int i = 0; i < 100; ++i) s.push_back({i * 10, (i * 37) % 1024});
    const auto bytes = encode_samples(s);
    ASSERT_EQ(bytes.size(), 600u);
    const auto d = decode_stream(bytes);
    EXPECT_EQ(d.samples, s);
    EXPECT_EQ(d.stats.frames_ok, 100u);
    EXPECT_EQ(d.stats.resyncs, 0u);
    EXPECT_EQ(d.stats.frames_dropped, 0u);
}

TEST(DecodeStream, RoundTripRandomFrames) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 300; ++rep) {
        const auto planted = testing::random_frames(rng, 1 + rep % 97, static_cast<std::uint8_t>(rep));
        const auto d = decode_stream(testing::encode_all(planted));
        ASSERT_EQ(d.samples.size(), planted.size());
        std::int64_t t = 0;
        for (std::size_t i = 0; i < planted.size(); ++i) {
            t += planted[i].dt;
            ASSERT_EQ(d.samples[i].t_ms, t);
            ASSERT_EQ(d.samples[i].v, planted[i].sample);
            ASSERT_EQ(d.frames[i].seq, planted[i].seq);
        }
        ASSERT_EQ(d.stats.resyncs, 0u);
        ASSERT_EQ(d.stats.frames_dropped, 0u);
    }
}

TEST(DecodeStream, SequenceGapsCountAsDrops) {
    Bytes b;
    for (std::uint8_t seq : {10, 11, 14, 15, 255, 0, 2}) {
        const auto f = encode(seq, 100, 1);
        b.insert(b.end(), f.begin(), f.end());
    }
    const auto d = decode_stream(b);
    EXPECT_EQ(d.stats.frames_ok, 7u);
    // 12,13 then 16..254 (239) then 1
    EXPECT_EQ(d.stats.frames_dropped, 2u + 239u + 1u);
}

TEST(DecodeStream, LeadingGarbageResyncs) {
    Bytes b{0x00, 0x13, 0xA5, 0x77};
    const auto f1 = encode(0, 5, 10), f2 = encode(1, 6, 10);
    b.insert(b.end(), f1.begin(), f1.end());
    b.insert(b.end(), f2.begin(), f2.end());
    const auto d = decode_stream(b);
    ASSERT_EQ(d.samples.size(), 2u);
    EXPECT_EQ(d.samples[0], (blinksense::SensorSample{10, 5}));
    EXPECT_EQ(d.stats.resyncs, 1u);
}

TEST(DecodeStream, ThreeBytesDeletedAtFrameBoundaryRegion) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const auto planted = testing::random_frames(rng, 100, 0);
        auto bytes = testing::encode_all(planted);
        const std::size_t frame = 10 + static_cast<std::size_t>(rep);
        const std::size_t at = frame * kFrameSize - 1 + static_cast<std::size_t>(rep % 3);
        bytes.erase(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                    bytes.begin() + static_cast<std::ptrdiff_t>(at + 3));
        std::vector<bool> intact(planted.size(), true);
        for (std::size_t b = at; b < at + 3; ++b) intact[b / kFrameSize] = false;

        const auto d = decode_stream(bytes);
        ASSERT_TRUE(testing::intact_frames_recovered(planted, intact, d.frames)) << rep;
        ASSERT_GE(d.stats.resyncs, 1u);
    }
}

TEST(DecodeStream, RecoversIntactFramesAfterRandomCorruption) {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto planted = testing::random_frames(rng, 60, static_cast<std::uint8_t>(rep));
        const auto clean = testing::encode_all(planted);
        const auto c = testing::corrupt(rng, clean, planted.size());
        const auto d = decode_stream(c.bytes);
        ASSERT_TRUE(testing::intact_frames_recovered(planted, c.intact, d.frames)) << rep;
    }
}

TEST(DecodeStream, RecoversAfterArbitraryGarbagePrefix) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> byte(0, 255), len(1, 64);
    for (int rep = 0; rep < 500; ++rep) {
        Bytes b(static_cast<std::size_t>(len(rng)));
        for (auto& x : b) x = static_cast<std::uint8_t>(byte(rng));
        const auto planted = testing::random_frames(rng, 40, 0);
        const auto body = testing::encode_all(planted);
        b.insert(b.end(), body.begin(), body.end());
        const auto d = decode_stream(b);
        ASSERT_TRUE(testing::intact_frames_recovered(
            planted, std::vector<bool>(planted.size(), true), d.frames))
            << rep;
    }
}

TEST(StreamDecoder, ChunkedFeedMatchesBatch) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> chunk(1, 17);
    for (int rep = 0; rep < 200; ++rep) {
        const auto planted = testing::random_frames(rng, 80, 0);
        const auto c = testing::corrupt(rng, testing::encode_all(planted), planted.size());
        StreamDecoder dec;
        std::vector<blinksense::SensorSample> got;
        for (std::size_t i = 0; i < c.bytes.size();) {
            const std::size_t n = std::min(chunk(rng), c.bytes.size() - i);
            auto part = dec.feed(std::span(c.bytes).subspan(i, n));
            got.insert(got.end(), part.begin(), part.end());
            i += n;
        }
        auto tail = dec.finish();
        got.insert(got.end(), tail.begin(), tail.end());
        const auto batch = decode_stream(c.bytes);
        ASSERT_EQ(got, batch.samples) << rep;
        ASSERT_EQ(dec.stats(), batch.stats);
    }
}

TEST(StreamDecoder, LongStreamCompactsWithoutLoss) {
    std::mt19937_64 rng(7);
    const auto planted = testing::random_frames(rng, 5000, 0);
    const auto bytes = testing::encode_all(planted);
    StreamDecoder dec;
    std::size_t n = 0;
    for (std::size_t i = 0; i < bytes.size(); i += 100) {
        n += dec.feed(std::span(bytes).subspan(i, std::min<std::size_t>(100, bytes.size() - i))).size();
    }
    n += dec.finish().size();
    EXPECT_EQ(n, planted.size());
}

TEST(EncodeSamples, TimestampsNonDecreasingAndGapsSplit) {
    std::vector<blinksense::SensorSample> s{{5, 700}, {600, 200}, {601, 210}};
    const auto d = decode_stream(encode_samples(s));
    // 595 ms gap -> two 255 ms repeats of 700, then 85 ms to the dip.
    ASSERT_EQ(d.samples.size(), 5u);
    EXPECT_EQ(d.samples[0], (blinksense::SensorSample{5, 700}));
    EXPECT_EQ(d.samples[1], (blinksense::SensorSample{260, 700}));
    EXPECT_EQ(d.samples[2], (blinksense::SensorSample{515, 700}));
    EXPECT_EQ(d.samples[3], (blinksense::SensorSample{600, 200}));
    EXPECT_EQ(d.samples[4], (blinksense::SensorSample{601, 210}));
    for (std::size_t i = 1; i < d.samples.size(); ++i) {
        EXPECT_LT(d.samples[i - 1].t_ms, d.samples[i].t_ms);
    }
}

TEST(EncodeSamples, RejectsDecreasingTime) {
    std::vector<blinksense::SensorSample> s{{10, 1}, {10, 2}};
    EXPECT_THROW(encode_samples(s), std::invalid_argument);
}

TEST(CaptureFile, WriteReadRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "linkframe_test_capture.blk";
    std::vector<blinksense::SensorSample> s{{10, 700}, {20, 100}, {30, 700}};
    const auto bytes = encode_samples(s);
    write_capture(path, bytes);
    EXPECT_EQ(read_capture(path), bytes);
    std::filesystem::remove(path);
    EXPECT_THROW(read_capture(path), std::runtime_error);
}

}  // namespace
}  // namespace blinkscan::linkframe
