#include "zodiaq/log.hpp"
#include "zodiaq/plot.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace zodiaq;

namespace {

TimeSeriesLog sample_log() {
  TimeSeriesLog log({"t", "x", "y", "ref_x", "ref_y"}, "00000000deadbeef");
  log.append({0.0, 0.0, 0.0, 0.0, 0.0});
  log.append({0.5, 0.25, -0.1, 0.3, 0.0});
  log.append({1.0, 1.0, 0.5, std::nan(""), std::nan("")});
  return log;
}

}  // namespace

TEST(TimeSeriesLog, RoundTripIsExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  TimeSeriesLog log({"t", "a", "b"}, "0123456789abcdef");
  for (int i = 0; i < 200; ++i) log.append({0.01 * (i + 1), u(rng), std::ldexp(u(rng), -40)});
  log.append({10.0, std::nan(""), std::numeric_limits<double>::infinity()});

  std::ostringstream os;
  log.write_csv(os);
  std::istringstream is(os.str());
  const TimeSeriesLog back = TimeSeriesLog::read_csv(is);

  EXPECT_EQ(back.columns(), log.columns());
  EXPECT_EQ(back.config_hash(), "0123456789abcdef");
  ASSERT_EQ(back.size(), log.size());
  for (std::size_t i = 0; i + 1 < log.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(back.row(i)[k], log.row(i)[k]);
  EXPECT_TRUE(std::isnan(back.at(200, "a")));
  EXPECT_TRUE(std::isinf(back.at(200, "b")));

  std::ostringstream again;
  back.write_csv(again);
  EXPECT_EQ(again.str(), os.str());
}

TEST(TimeSeriesLog, HeaderCarriesSchemaAndHash) {
  std::ostringstream os;
  sample_log().write_csv(os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), std::string("# ") + kLogSchema + " config=00000000deadbeef");
}

TEST(TimeSeriesLog, RejectsMalformedInput) {
  std::istringstream wrong_schema("# zodiaq-log/0\nt,x\n0,1\n");
  EXPECT_THROW(TimeSeriesLog::read_csv(wrong_schema), std::runtime_error);
  std::istringstream bad_number("# zodiaq-log/1\nt,x\n0,1.2.3\n");
  EXPECT_THROW(TimeSeriesLog::read_csv(bad_number), std::runtime_error);
  std::istringstream short_row("# zodiaq-log/1\nt,x\n0\n");
  EXPECT_THROW(TimeSeriesLog::read_csv(short_row), std::invalid_argument);
}

TEST(TimeSeriesLog, EnforcesSchemaOnAppend) {
  EXPECT_THROW(TimeSeriesLog({"x", "t"}), std::invalid_argument);
  TimeSeriesLog log({"t", "x"});
  log.append({1.0, 0.0});
  EXPECT_THROW(log.append({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(log.append({2.0}), std::invalid_argument);
  EXPECT_THROW(log.column("y"), std::out_of_range);
}

TEST(Plot, TimeseriesGolden) {
  TimeSeriesLog log({"t", "x"});
  log.append({0.0, 0.0});
  log.append({1.0, 1.0});
  log.append({2.0, 0.5});
  const std::string svg = svg_timeseries(log, {"x"}, "demo", "m");
  const std::string expected =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"360\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"320.0\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">demo</text>\n"
      "<rect x=\"70.0\" y=\"30.0\" width=\"550.0\" height=\"290.0\" fill=\"none\" stroke=\"#444\"/>\n"
      "<text x=\"70.0\" y=\"334.0\" text-anchor=\"middle\">0</text>\n"
      "<text x=\"64.0\" y=\"324.0\" text-anchor=\"end\">0</text>\n"
      "<text x=\"207.5\" y=\"334.0\" text-anchor=\"middle\">0.5</text>\n"
      "<text x=\"64.0\" y=\"251.5\" text-anchor=\"end\">0.25</text>\n"
      "<text x=\"345.0\" y=\"334.0\" text-anchor=\"middle\">1</text>\n"
      "<text x=\"64.0\" y=\"179.0\" text-anchor=\"end\">0.5</text>\n"
      "<text x=\"482.5\" y=\"334.0\" text-anchor=\"middle\">1.5</text>\n"
      "<text x=\"64.0\" y=\"106.5\" text-anchor=\"end\">0.75</text>\n"
      "<text x=\"620.0\" y=\"334.0\" text-anchor=\"middle\">2</text>\n"
      "<text x=\"64.0\" y=\"34.0\" text-anchor=\"end\">1</text>\n"
      "<text x=\"320.0\" y=\"354.0\" text-anchor=\"middle\">t [s]</text>\n"
      "<text x=\"14\" y=\"180.0\" text-anchor=\"middle\" transform=\"rotate(-90 14 180.0)\">m</text>\n"
      "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"70.00,320.00 345.00,30.00 620.00,175.00\"/>\n"
      "<text x=\"78.0\" y=\"44.0\" fill=\"#1f77b4\">x</text>\n"
      "</svg>\n";
  EXPECT_EQ(svg, expected);
}

TEST(Plot, PathDrawsReferenceDashed) {
  const std::string svg = svg_path(sample_log(), "path");
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(svg.find(">reference<"), std::string::npos);
  EXPECT_EQ(svg, svg_path(sample_log(), "path"));
}

TEST(Plot, EmptyLogAndMissingColumnsAreErrors) {
  TimeSeriesLog empty({"t", "x", "y", "ref_x", "ref_y"});
  EXPECT_THROW(svg_path(empty, "p"), std::runtime_error);
  EXPECT_THROW(svg_timeseries(sample_log(), {"z"}, "p", "m"), std::runtime_error);
}
