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

#include "vulnspace/cluster.hpp"

#include <istream>
#include <numeric>
#include <sstream>

namespace vulnspace::cluster {

namespace {

int find_root(std::vector<int>& parent, int v) {
  while (parent[static_cast<std::size_t>(v)] != v) {
    parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    v = parent[static_cast<std::size_t>(v)];
  }
  return v;
}

}  // namespace

ClusterAssignment cut_dendrogram(const Dendrogram& dendrogram, Index rows, const WardCut& cut) {
  if (cut.target_k.has_value() == cut.cost_cutoff.has_value())
    throw InvalidArgument("ward: give exactly one of target_k or cost_cutoff");
  if (static_cast<Index>(dendrogram.size()) != rows - 1)
    throw InvalidArgument("ward: dendrogram does not match the row count");
  std::size_t apply = 0;
  if (cut.target_k) {
    if (*cut.target_k < 1 || *cut.target_k > rows)
      throw InvalidArgument("ward: target_k outside [1, " + std::to_string(rows) + "]");
    apply = static_cast<std::size_t>(rows - *cut.target_k);
  } else {
    while (apply < dendrogram.size() && dendrogram[apply].cost <= *cut.cost_cutoff) ++apply;
  }

  // Union-find over original rows plus one node per merge.
  std::vector<int> parent(static_cast<std::size_t>(2 * rows - 1));
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t s = 0; s < apply; ++s) {
    const int node = static_cast<int>(rows) + static_cast<int>(s);
    parent[static_cast<std::size_t>(find_root(parent, dendrogram[s].a))] = node;
    parent[static_cast<std::size_t>(find_root(parent, dendrogram[s].b))] = node;
  }
  ClusterAssignment out;
  out.labels.resize(static_cast<std::size_t>(rows));
  for (Index r = 0; r < rows; ++r) out.labels[static_cast<std::size_t>(r)] = find_root(parent, static_cast<int>(r));
  out.k = relabel_by_first_appearance(out.labels);
  out.method = "ward";
  if (cut.target_k)
    out.params = {{"target_k", *cut.target_k}};
  else
    out.params = {{"cost_cutoff", *cut.cost_cutoff}};
  return out;
}

namespace {

struct SteepDownArea {
  std::size_t start;
  std::size_t end;
  double mib;
};

std::size_t extend_region(const std::vector<char>& steep, const std::vector<char>& xward, std::size_t start,
                          int min_pts) {
  const std::size_t n = steep.size();
  int non_xward = 0;
  std::size_t end = start;
  for (std::size_t index = start; index < n; ++index) {
    if (steep[index]) {
      non_xward = 0;
      end = index;
    } else if (!xward[index]) {
      // Not steep, but still heading the right way.
      if (++non_xward > min_pts) break;
    } else {
      return end;
    }
  }
  return end;
}

void filter_sdas(std::vector<SteepDownArea>& sdas, double mib, double xi_complement,
                 const std::vector<double>& plot) {
  if (std::isinf(mib)) {
    sdas.clear();
    return;
  }
  std::vector<SteepDownArea> kept;
  for (auto sda : sdas) {
    if (mib <= plot[sda.start] * xi_complement) {
      sda.mib = std::max(sda.mib, mib);
      kept.push_back(sda);
    }
  }
  sdas = std::move(kept);
}

}  // namespace

ClusterAssignment extract_xi(const ReachabilityProfile& profile, double xi, int min_cluster_size) {
  if (!(xi > 0 && xi < 1)) throw InvalidArgument("optics: xi must lie in (0, 1)");
  const int min_pts = profile.min_pts;
  const std::size_t min_size = static_cast<std::size_t>(min_cluster_size > 0 ? min_cluster_size : min_pts);
  const std::size_t n = profile.order.size();

  std::vector<double> plot = profile.reachability;
  plot.push_back(kUndefined);
  const double xc = 1.0 - xi;

  // inf/inf counts as neither up nor down, matching IEEE NaN comparisons.
  std::vector<char> steep_up(n), steep_down(n), up(n), down(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = plot[i] / plot[i + 1];
    steep_up[i] = ratio <= xc;
    steep_down[i] = ratio >= 1.0 / xc;
    down[i] = ratio > 1;
    up[i] = ratio < 1;
  }

  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::vector<SteepDownArea> sdas;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep_index = 0; steep_index < n; ++steep_index) {
    if (!(steep_up[steep_index] || steep_down[steep_index])) continue;
    if (steep_index < index) continue;
    for (std::size_t i = index; i <= steep_index; ++i) mib = std::max(mib, plot[i]);

    if (steep_down[steep_index]) {
      filter_sdas(sdas, mib, xc, plot);
      const std::size_t d_end = extend_region(steep_down, up, steep_index, min_pts);
      sdas.push_back({steep_index, d_end, 0.0});
      index = d_end + 1;
      mib = plot[index];
    } else {
      filter_sdas(sdas, mib, xc, plot);
      const std::size_t u_start = steep_index;
      const std::size_t u_end = extend_region(steep_up, down, u_start, min_pts);
      index = u_end + 1;
      mib = plot[index];

      std::vector<std::pair<std::size_t, std::size_t>> found;
      for (const auto& d : sdas) {
        std::size_t c_start = d.start;
        std::size_t c_end = u_end;
        if (plot[c_end + 1] * xc < d.mib) continue;
        const double d_max = plot[d.start];
        if (d_max * xc >= plot[c_end + 1]) {
          while (plot[c_start + 1] > plot[c_end + 1] && c_start < d.end) ++c_start;
        } else if (plot[c_end + 1] * xc >= d_max) {
          while (c_end > u_start && plot[c_end - 1] > d_max) --c_end;
        }
        if (c_end + 1 < c_start + min_size) continue;
        if (c_start > d.end) continue;
        if (c_end < u_start) continue;
        found.emplace_back(c_start, c_end);
      }
      clusters.insert(clusters.end(), found.rbegin(), found.rend());
    }
  }

  Labels by_position(n, kNoise);
  int label = 0;
  for (const auto& [start, end] : clusters) {
    bool free = true;
    for (std::size_t i = start; i <= end && free; ++i) free = by_position[i] == kNoise;
    if (!free) continue;
    for (std::size_t i = start; i <= end; ++i) by_position[i] = label;
    ++label;
  }
  ClusterAssignment out;
  out.labels.assign(n, kNoise);
  for (std::size_t pos = 0; pos < n; ++pos)
    out.labels[static_cast<std::size_t>(profile.order[pos])] = by_position[pos];
  out.k = relabel_by_first_appearance(out.labels);
  out.method = "optics";
  out.params = {{"min_pts", min_pts}, {"xi", xi}, {"min_cluster_size", static_cast<int>(min_size)}};
  return out;
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& a, const std::vector<std::string>& row_ids) {
  out << "row,cluster\n";
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (row_ids.empty())
      out << i;
    else
      out << row_ids.at(i);
    out << ',' << a.labels[i] << '\n';
  }
}

ClusterAssignment read_assignment_csv(std::istream& in, const std::string& method) {
  std::string line;
  if (!std::getline(in, line) || line != "row,cluster") throw FormatError("assignment CSV: bad header");
  ClusterAssignment a;
  a.method = method;
  int max_label = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw FormatError("assignment CSV: line " + std::to_string(lineno));
    try {
      const int label = std::stoi(line.substr(comma + 1));
      a.labels.push_back(label);
      max_label = std::max(max_label, label);
    } catch (const std::exception&) {
      throw FormatError("assignment CSV: bad cluster id on line " + std::to_string(lineno));
    }
  }
  a.k = max_label + 1;
  return a;
}

void write_dendrogram_csv(std::ostream& out, const Dendrogram& d) {
  out << "step,cluster_a,cluster_b,cost,size\n";
  std::ostringstream cost;
  cost.precision(17);
  for (std::size_t s = 0; s < d.size(); ++s) {
    cost.str("");
    cost << d[s].cost;
    out << s << ',' << d[s].a << ',' << d[s].b << ',' << cost.str() << ',' << d[s].size << '\n';
  }
}

void write_reachability_csv(std::ostream& out, const ReachabilityProfile& p, const std::vector<std::string>& row_ids) {
  out << "position,row,reachability,core_distance\n";
  std::ostringstream num;
  num.precision(17);
  const auto fmt = [&num](double v) {
    if (std::isinf(v)) return std::string("undefined");
    num.str("");
    num << v;
    return num.str();
  };
  for (std::size_t pos = 0; pos < p.order.size(); ++pos) {
    const auto row = static_cast<std::size_t>(p.order[pos]);
    out << pos << ',';
    if (row_ids.empty())
      out << row;
    else
      out << row_ids.at(row);
    out << ',' << fmt(p.reachability[pos]) << ',' << fmt(p.core_distance[row]) << '\n';
  }
}

}  // namespace vulnspace::cluster
