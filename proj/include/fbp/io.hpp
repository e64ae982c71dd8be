#pragma once

// Text event files ("t x y p" per line), packetization, truth files and
// frame CSV output.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fbp/binning.hpp"
#include "fbp/error.hpp"
#include "fbp/warp.hpp"

namespace fbp {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != ',') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

inline bool parse_int(std::string_view s, long& out) {
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

inline std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace detail

/// Parses "t x y p" lines. Blank and '#' lines are skipped; p = 0 maps to
/// polarity -1 and p = 1 to +1. Line numbers of timestamps that go backwards
/// are appended to non_monotonic when given.
inline std::vector<Event> parse_events(std::istream& in,
                                       std::vector<std::size_t>* non_monotonic = nullptr) {
  std::vector<Event> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto fields = detail::split_ws(s);
    Event e;
    long p = 0;
    if (fields.size() != 4 || !detail::parse_double(fields[0], e.t) ||
        !detail::parse_double(fields[1], e.x) || !detail::parse_double(fields[2], e.y) ||
        !detail::parse_int(fields[3], p) || (p != 0 && p != 1)) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected \"t x y p\"");
    }
    e.polarity = p == 1 ? 1 : -1;
    if (!events.empty() && e.t < events.back().t && non_monotonic) non_monotonic->push_back(lineno);
    events.push_back(e);
  }
  return events;
}

inline std::vector<Event> read_events_txt(const std::filesystem::path& path,
                                          std::vector<std::size_t>* non_monotonic = nullptr) {
  auto in = detail::open_in(path);
  return parse_events(in, non_monotonic);
}

/// t with 9 decimals, coordinates with 6, polarity as 0/1.
inline void write_events(std::ostream& out, const std::vector<Event>& events) {
  out << "# t x y p\n";
  char buf[128];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, "%.9f %.6f %.6f %d\n", e.t, e.x, e.y, e.polarity > 0 ? 1 : 0);
    out << buf;
  }
}

inline void write_events_txt(const std::filesystem::path& path, const std::vector<Event>& events) {
  auto out = detail::open_out(path);
  write_events(out, events);
}

/// Consecutive non-overlapping packets of exactly n_e events; the remainder
/// is dropped. Each packet is stably time-sorted before its reference time
/// is taken.
inline std::vector<EventPacket> packetize(const std::vector<Event>& events, std::size_t n_e,
                                          RefTimePolicy policy = RefTimePolicy::Mean) {
  if (n_e < 1) throw Error(ErrorCode::InvalidArgument, "packet size must be at least 1");
  std::vector<EventPacket> packets;
  for (std::size_t start = 0; start + n_e <= events.size(); start += n_e) {
    std::vector<Event> chunk(events.begin() + static_cast<std::ptrdiff_t>(start),
                             events.begin() + static_cast<std::ptrdiff_t>(start + n_e));
    std::stable_sort(chunk.begin(), chunk.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    packets.emplace_back(std::move(chunk), policy);
  }
  return packets;
}

// ---------------------------------------------------------------------------
// Truth files: "packet_index a b c" per line.

inline void write_truth(std::ostream& out, const std::vector<Vec3>& truth) {
  char buf[160];
  for (std::size_t i = 0; i < truth.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g\n", i, truth[i][0], truth[i][1],
                  truth[i][2]);
    out << buf;
  }
}

inline void write_truth_txt(const std::filesystem::path& path, const std::vector<Vec3>& truth) {
  auto out = detail::open_out(path);
  write_truth(out, truth);
}

inline std::vector<Vec3> parse_truth(std::istream& in) {
  std::vector<Vec3> truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto f = detail::split_ws(s);
    long idx = 0;
    Vec3 v{};
    if (f.size() != 4 || !detail::parse_int(f[0], idx) || !detail::parse_double(f[1], v[0]) ||
        !detail::parse_double(f[2], v[1]) || !detail::parse_double(f[3], v[2]))
      throw Error(ErrorCode::ParseError, "truth line " + std::to_string(lineno));
    if (idx != static_cast<long>(truth.size()))
      throw Error(ErrorCode::ParseError,
                  "truth line " + std::to_string(lineno) + ": packet indices must count up from 0");
    truth.push_back(v);
  }
  return truth;
}

inline std::vector<Vec3> read_truth_txt(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return parse_truth(in);
}

// ---------------------------------------------------------------------------
// Frames: H lines of W comma-separated values, full precision.

inline void write_frame_csv(std::ostream& out, const Frame& frame) {
  char buf[40];
  for (int v = 0; v < frame.grid.height; ++v) {
    for (int u = 0; u < frame.grid.width; ++u) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.at(u, v));
      if (u) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

inline void write_frame_csv(const std::filesystem::path& path, const Frame& frame) {
  auto out = detail::open_out(path);
  write_frame_csv(out, frame);
}

}  // namespace fbp
