#pragma once

// Text form of a BlinkTrace:
//
//   #trace v1 screen=1920x1080 interval=1000 depth=4 step=10
//       actions=Click,Copy,Cut,Paste,Cancel idle=none budget=3 attempts=3
//       targets=x,y,w,h;x,y,w,h hash=<16 hex digits>
//   <t_ms>\tblink
//   <t_ms>\ttick
//   #end <record count>
//
// The header is a single line. The hash is FNV-1a over the header fields
// before it, so an edited configuration is caught on read. Times are
// strictly increasing.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "blinkscan/simharness.hpp"

namespace blinkscan::simharness {

class MalformedTrace : public std::runtime_error {
public:
    MalformedTrace(const std::string& what, int line);
    int line() const { return line_; }

private:
    int line_;
};

/// Header fields up to (not including) the hash, in canonical form.
std::string trace_header_fields(const BlinkTrace& trace);
std::uint64_t config_hash(const BlinkTrace& trace);

void write_trace(std::ostream& out, const BlinkTrace& trace);
void write_trace(const std::filesystem::path& path, const BlinkTrace& trace);

/// Throws MalformedTrace with the offending line number.
BlinkTrace read_trace(std::istream& in);
BlinkTrace read_trace(const std::filesystem::path& path);

}  // namespace blinkscan::simharness
