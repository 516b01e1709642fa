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

#include "vulnspace/project.hpp"

#include <sstream>

namespace vulnspace::project {

std::vector<std::size_t> sample_rows(std::size_t rows, std::size_t max_n, std::uint64_t seed) {
  if (max_n < 1) throw InvalidArgument("sample_rows: max_n must be at least 1");
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (rows <= max_n) return idx;
  // Partial Fisher-Yates: the first max_n slots become the sample.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < max_n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (rows - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void write_projection_csv(std::ostream& out, const MatrixXr& coords, const std::vector<std::string>& row_ids) {
  if (!row_ids.empty() && row_ids.size() != static_cast<std::size_t>(coords.rows()))
    throw DimensionError("projection CSV: id count does not match rows");
  std::ostringstream num;
  num.precision(17);
  out << "id,x,y\n";
  for (Index r = 0; r < coords.rows(); ++r) {
    num.str("");
    num << coords(r, 0) << ',' << coords(r, 1);
    if (row_ids.empty())
      out << r;
    else
      out << row_ids[static_cast<std::size_t>(r)];
    out << ',' << num.str() << '\n';
  }
}

}  // namespace vulnspace::project
