#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fbp/io.hpp"
#include "fbp/synthetic.hpp"

using namespace fbp;

TEST(Events, ParseSkipsCommentsAndMapsPolarity) {
  std::istringstream in("# t x y p\n\n0.5 10 20 1\n  0.6\t11 21 0  \n0.55,12,22,1\n");
  std::vector<std::size_t> back;
  const auto evs = parse_events(in, &back);
  ASSERT_EQ(evs.size(), 3u);
  EXPECT_EQ(evs[0], (Event{0.5, 10, 20, 1}));
  EXPECT_EQ(evs[1], (Event{0.6, 11, 21, -1}));
  EXPECT_EQ(back, (std::vector<std::size_t>{5}));
}

TEST(Events, ParseErrorsCarryLineNumbers) {
  for (const char* bad : {"0.1 2 3\n", "0.1 2 3 2\n", "0.1 x 3 1\n", "0.1 2 3 1 5\n", "nan 1 1 1\n"}) {
    std::istringstream in(std::string("0 0 0 1\n") + bad);
    try {
      parse_events(in);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
  }
}

TEST(Events, WriteFormat) {
  std::ostringstream out;
  write_events(out, {{0.25, 1.5, 2.0, 1}, {1.0, 0.0, 3.25, -1}});
  EXPECT_EQ(out.str(), "# t x y p\n0.250000000 1.500000 2.000000 1\n1.000000000 0.000000 3.250000 0\n");
}

TEST(Events, SyntheticRoundTripIsExact) {
  SyntheticScene sc;
  sc.n_points = 20;
  sc.events_per_point = 10;
  sc.noise_std = 0.7;
  const auto se = synth_events(sc);
  std::stringstream buf;
  write_events(buf, se.events);
  const auto back = parse_events(buf);
  ASSERT_EQ(back.size(), se.events.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], se.events[i]);
}

TEST(Events, FileRoundTripAndMissingFile) {
  const auto path = std::filesystem::temp_directory_path() / "fbp_test_io_events.txt";
  const std::vector<Event> evs{{0.1, 1, 2, 1}, {0.2, 3, 4, -1}};
  write_events_txt(path, evs);
  EXPECT_EQ(read_events_txt(path), evs);
  std::filesystem::remove(path);
  try {
    read_events_txt(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Packetize, DropsRemainderAndSortsChunks) {
  std::vector<Event> evs;
  for (int i = 0; i < 7; ++i) evs.push_back({static_cast<double>(i), 0, 0, 1});
  std::swap(evs[0], evs[1]);
  const auto packets = packetize(evs, 3);
  ASSERT_EQ(packets.size(), 2u);
  EXPECT_EQ(packets[0].events[0].t, 0.0);
  EXPECT_EQ(packets[0].events[1].t, 1.0);
  EXPECT_DOUBLE_EQ(packets[0].t_ref, 1.0);
  EXPECT_DOUBLE_EQ(packets[1].t_ref, 4.0);
  EXPECT_DOUBLE_EQ(packetize(evs, 3, RefTimePolicy::Last)[1].t_ref, 5.0);
  EXPECT_TRUE(packetize(evs, 8).empty());
  EXPECT_THROW(packetize(evs, 0), Error);
}

TEST(Truth, RoundTrip) {
  const std::vector<Vec3> truth{{1.0, -0.8, 1.2}, {0.1, 1e-17, 3.0}};
  std::stringstream buf;
  write_truth(buf, truth);
  EXPECT_EQ(parse_truth(buf), truth);
}

TEST(Truth, RejectsOutOfOrderIndices) {
  std::istringstream in("0 1 2 3\n2 1 2 3\n");
  EXPECT_THROW(parse_truth(in), Error);
  std::istringstream bad("0 1 2\n");
  EXPECT_THROW(parse_truth(bad), Error);
}

TEST(FrameCsv, Layout) {
  Frame f(FrameGrid{3, 2, 1.0});
  f.at(0, 0) = 1.0;
  f.at(2, 1) = 0.1;
  std::ostringstream out;
  write_frame_csv(out, f);
  EXPECT_EQ(out.str(), "1,0,0\n0,0,0.10000000000000001\n");
}
