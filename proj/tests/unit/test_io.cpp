#include <gtest/gtest.h>

#include <cmath>

#include "faircredit/io.hpp"
#include "test_support.hpp"

namespace io = faircredit::io;

TEST(Io, SplitCsvHandlesQuotes) {
  const auto cells = io::split_csv_line(R"(a,"b,c",,"d ""e""")");
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0], "a");
  EXPECT_EQ(cells[1], "b,c");
  EXPECT_EQ(cells[2], "");
  EXPECT_EQ(cells[3], "d \"e\"");
}

TEST(Io, TrimAndLower) {
  EXPECT_EQ(io::trim("  x y \r\n"), "x y");
  EXPECT_EQ(io::to_lower("Credit Amount"), "credit amount");
}

TEST(Io, FormatExactRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(io::format_exact(v)), v);
  }
}

TEST(Io, AtomicWriteReplacesContent) {
  fctest::TempDir dir("io");
  const auto path = dir / "f.txt";
  io::write_file_atomic(path, "first");
  io::write_file_atomic(path, "second");
  EXPECT_EQ(io::read_file(path), "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
}

TEST(Io, Fnv1aKnownValues) {
  EXPECT_EQ(io::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::hex64(0xabcULL), "0000000000000abc");
}
