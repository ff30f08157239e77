#include "chiralsim/signal.hpp"
#include "chiralsim/types.hpp"

#include <doctest.h>

#include <cmath>

using namespace chiralsim;

TEST_CASE("dominant frequency of a sinusoid") {
  std::vector<double> t, v;
  for (int i = 0; i <= 3000; ++i) {
    t.push_back(i);
    v.push_back(0.3 + std::cos(kTwoPi * i / 166.7) + 0.2 * std::cos(kTwoPi * i / 40.0));
  }
  CHECK(detect_period(t, v) == doctest::Approx(166.7).epsilon(2e-3));
  CHECK_THROWS_AS(dominant_frequency(t, std::vector<double>(t.size(), 1.0)), NumericalError);
  CHECK_THROWS_AS(dominant_frequency({0.0, 1.0}, {0.0, 1.0}), NumericalError);
}

TEST_CASE("first peak time") {
  std::vector<double> t, v;
  for (int i = 0; i <= 400; ++i) {
    t.push_back(i);
    v.push_back(std::pow(std::sin(kPi * i / 250.0), 2));
  }
  CHECK(first_peak_time(t, v, 0.5) == doctest::Approx(125.0).epsilon(1e-6));
  CHECK(first_peak_time(t, std::vector<double>(t.size(), 0.0)) < 0.0);
}

TEST_CASE("peak order and labels") {
  std::vector<double> t;
  std::vector<std::vector<double>> traces(3);
  for (int i = 0; i <= 300; ++i) {
    t.push_back(i);
    traces[0].push_back(0.0);
    traces[1].push_back(std::exp(-std::pow((i - 200) / 20.0, 2)));
    traces[2].push_back(std::exp(-std::pow((i - 100) / 20.0, 2)));
  }
  auto order = peak_order(t, traces, 0);
  CHECK(order.orientation == -1);
  CHECK(order.label(0) == "1>3>2");
  std::swap(traces[1], traces[2]);
  auto reversed = peak_order(t, traces, 0);
  CHECK(reversed.label(0) == "1>2>3");
  CHECK(reversed.reverse_of(order));
  traces[2] = traces[1];
  auto tie = peak_order(t, traces, 0);
  CHECK_FALSE(tie.ordered());
  CHECK(tie.label(0) == "none");
}
