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

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>

namespace vulnspace::temporal {

long EvolutionSeries::count(int year) const {
  const int i = year - first_year;
  if (i < 0 || i >= static_cast<int>(counts.size())) return 0;
  return counts[static_cast<std::size_t>(i)];
}

Evolution evolution(std::span<const int> labels, std::span<const int> years, int first_year, int last_year) {
  if (labels.size() != years.size())
    throw DimensionError("evolution: " + std::to_string(labels.size()) + " assignments for " +
                         std::to_string(years.size()) + " rows");
  if (first_year > last_year) throw InvalidArgument("evolution: empty year range");
  const auto span = static_cast<std::size_t>(last_year - first_year + 1);
  Evolution e;
  e.first_year = first_year;
  e.last_year = last_year;
  e.noise.assign(span, 0);
  std::map<int, EvolutionSeries> by_cluster;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (years[r] < first_year || years[r] > last_year)
      throw InvalidArgument("evolution: row " + std::to_string(r) + " has year " + std::to_string(years[r]) +
                            " outside the range");
    const auto y = static_cast<std::size_t>(years[r] - first_year);
    if (labels[r] == kNoise) {
      ++e.noise[y];
      continue;
    }
    if (labels[r] < 0) throw InvalidArgument("evolution: negative cluster id " + std::to_string(labels[r]));
    auto [it, fresh] = by_cluster.try_emplace(labels[r]);
    if (fresh) {
      it->second.cluster = labels[r];
      it->second.first_year = first_year;
      it->second.counts.assign(span, 0);
    }
    ++it->second.counts[y];
    ++it->second.total;
  }
  for (auto& [id, s] : by_cluster) e.series.push_back(std::move(s));
  return e;
}

Evolution evolution(std::span<const int> labels, const corpus::Snapshot& snapshot) {
  if (snapshot.records.empty()) throw InvalidArgument("evolution: empty snapshot");
  std::vector<int> years;
  years.reserve(snapshot.size());
  for (const auto& r : snapshot.records) years.push_back(r.year);
  const auto [lo, hi] = std::minmax_element(years.begin(), years.end());
  return evolution(labels, years, *lo, *hi);
}

std::vector<EvolutionSeries> TopNSelector::select(const std::vector<EvolutionSeries>& series, std::size_t n) const {
  if (n < 1) throw InvalidArgument("top_n: n must be at least 1");
  std::vector<EvolutionSeries> out(series);
  std::sort(out.begin(), out.end(), [](const EvolutionSeries& a, const EvolutionSeries& b) {
    return a.total != b.total ? a.total > b.total : a.cluster < b.cluster;
  });
  if (out.size() > n) out.resize(n);
  return out;
}

std::vector<EvolutionSeries> top_n(const std::vector<EvolutionSeries>& series, std::size_t n) {
  return TopNSelector().select(series, n);
}

void write_evolution_csv(std::ostream& out, const Evolution& e) {
  out << "cluster";
  for (int y = e.first_year; y <= e.last_year; ++y) out << ',' << y;
  out << ",total\n";
  for (const auto& s : e.series) {
    out << s.cluster;
    for (const auto c : s.counts) out << ',' << c;
    out << ',' << s.total << '\n';
  }
  long noise = 0;
  out << "noise";
  for (const auto c : e.noise) {
    out << ',' << c;
    noise += c;
  }
  out << ',' << noise << '\n';
}

nlohmann::json to_json(const EvolutionSeries& s) {
  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t i = 0; i < s.counts.size(); ++i) counts[std::to_string(s.first_year + static_cast<int>(i))] = s.counts[i];
  return {{"cluster", s.cluster}, {"counts", counts}, {"total", s.total}};
}

nlohmann::json to_json(const Evolution& e) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : e.series) series.push_back(to_json(s));
  return {{"first_year", e.first_year}, {"last_year", e.last_year}, {"series", series}, {"noise", e.noise}};
}

}  // namespace vulnspace::temporal
