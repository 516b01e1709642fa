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

// Cluster sizes per publication year and the selection of clusters to chart.

#ifndef VULNSPACE_TEMPORAL_HPP
#define VULNSPACE_TEMPORAL_HPP

#include "vulnspace/corpus.hpp"
#include "vulnspace/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <memory>
#include <ostream>
#include <span>
#include <vector>

namespace vulnspace::temporal {

struct EvolutionSeries {
  int cluster = 0;
  int first_year = 0;
  std::vector<long> counts;  // counts[i] is year first_year + i
  long total = 0;

  long count(int year) const;
  bool operator==(const EvolutionSeries&) const = default;
};

struct Evolution {
  int first_year = 0;
  int last_year = 0;
  std::vector<EvolutionSeries> series;  // ascending cluster id, noise excluded
  std::vector<long> noise;              // per year

  bool operator==(const Evolution&) const = default;
};

/// `years[r]` is the publication year of row r. Years outside [first, last]
/// are an error.
Evolution evolution(std::span<const int> labels, std::span<const int> years, int first_year, int last_year);
/// Year range taken from the snapshot.
Evolution evolution(std::span<const int> labels, const corpus::Snapshot& snapshot);

/// Chooses which series to show.
class SeriesSelector {
 public:
  virtual ~SeriesSelector() = default;
  virtual std::vector<EvolutionSeries> select(const std::vector<EvolutionSeries>& series, std::size_t n) const = 0;
};

/// Largest totals first; equal totals by lower cluster id.
class TopNSelector final : public SeriesSelector {
 public:
  std::vector<EvolutionSeries> select(const std::vector<EvolutionSeries>& series, std::size_t n) const override;
};

std::vector<EvolutionSeries> top_n(const std::vector<EvolutionSeries>& series, std::size_t n);

/// cluster x year matrix with a total column; noise as a final "noise" row.
void write_evolution_csv(std::ostream& out, const Evolution& e);
nlohmann::json to_json(const EvolutionSeries& s);
nlohmann::json to_json(const Evolution& e);

}  // namespace vulnspace::temporal

#endif  // VULNSPACE_TEMPORAL_HPP
