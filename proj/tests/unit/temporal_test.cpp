// Copyright 2026 The Vulnspace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "vulnspace/temporal.hpp"

#include "vulnspace/error.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sstream>

namespace tp = vulnspace::temporal;
using vulnspace::kNoise;

TEST(Evolution, CountsPerYear) {
  const std::vector<int> labels{0, 0, 1, kNoise, 1, 1, 2};
  const std::vector<int> years{2015, 2016, 2015, 2015, 2017, 2017, 2016};
  const auto e = tp::evolution(labels, years, 2015, 2017);
  ASSERT_EQ(e.series.size(), 3u);
  EXPECT_EQ(e.series[0].counts, (std::vector<long>{1, 1, 0}));
  EXPECT_EQ(e.series[1].counts, (std::vector<long>{1, 0, 2}));
  EXPECT_EQ(e.series[1].total, 3);
  EXPECT_EQ(e.series[2].count(2016), 1);
  EXPECT_EQ(e.series[2].count(2010), 0);
  EXPECT_EQ(e.noise, (std::vector<long>{1, 0, 0}));

  long sum = 0;
  for (const auto& s : e.series) sum += s.total;
  for (const auto n : e.noise) sum += n;
  EXPECT_EQ(sum, static_cast<long>(labels.size()));
}

TEST(Evolution, Errors) {
  EXPECT_THROW(tp::evolution(std::vector<int>{0}, std::vector<int>{2015, 2016}, 2015, 2016),
               vulnspace::DimensionError);
  EXPECT_THROW(tp::evolution(std::vector<int>{0}, std::vector<int>{2019}, 2015, 2016), vulnspace::InvalidArgument);
  EXPECT_THROW(tp::evolution(std::vector<int>{0}, std::vector<int>{2015}, 2016, 2015), vulnspace::InvalidArgument);
}

TEST(TopN, LargestFirstTiesByCluster) {
  const std::vector<int> labels{0, 1, 1, 2, 2, 3};
  const std::vector<int> years(labels.size(), 2020);
  const auto e = tp::evolution(labels, years, 2020, 2020);
  const auto top = tp::top_n(e.series, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].cluster, 1);
  EXPECT_EQ(top[1].cluster, 2);
  EXPECT_EQ(tp::top_n(e.series, 10).size(), 4u);
  EXPECT_EQ(tp::TopNSelector{}.select(e.series, 1)[0].cluster, 1);
}

TEST(Evolution, CsvAndJson) {
  const auto e = tp::evolution(std::vector<int>{0, kNoise}, std::vector<int>{2019, 2020}, 2019, 2020);
  std::ostringstream out;
  tp::write_evolution_csv(out, e);
  const std::string csv = out.str();
  EXPECT_NE(csv.find("2019"), std::string::npos);
  EXPECT_NE(csv.find("noise"), std::string::npos);
  const auto j = tp::to_json(e);
  EXPECT_EQ(j["series"].size(), 1u);
}
