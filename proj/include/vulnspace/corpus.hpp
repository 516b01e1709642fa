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

// NVD JSON 1.1 feed ingestion: canonical CVE records with CWE, reduced CPE and
// qualitative CVSS labels, the "VSNP" snapshot format and seeded splits.

#ifndef VULNSPACE_CORPUS_HPP
#define VULNSPACE_CORPUS_HPP

#include "vulnspace/binio.hpp"
#include "vulnspace/error.hpp"

#include <nlohmann/json_fwd.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vulnspace::corpus {

// CVSS v2 value sets, in NVD spelling order of the tables below.
enum class AccessVector : std::uint8_t { local, adjacent_network, network };
enum class AccessComplexity : std::uint8_t { high, medium, low };
enum class Authentication : std::uint8_t { multiple, single, none };
enum class ImpactV2 : std::uint8_t { none, partial, complete };

struct CvssV2Label {
  AccessVector access_vector = AccessVector::network;
  AccessComplexity access_complexity = AccessComplexity::low;
  Authentication authentication = Authentication::none;
  ImpactV2 confidentiality = ImpactV2::none;
  ImpactV2 integrity = ImpactV2::none;
  ImpactV2 availability = ImpactV2::none;
  std::optional<bool> user_interaction_required;
  std::optional<bool> obtain_privileges;  // any obtain*Privilege flag
  double base_score = 0;

  bool operator==(const CvssV2Label&) const = default;
};

// CVSS v3 value sets.
enum class AttackVector : std::uint8_t { network, adjacent_network, local, physical };
enum class AttackComplexity : std::uint8_t { low, high };
enum class PrivilegesRequired : std::uint8_t { none, low, high };
enum class UserInteraction : std::uint8_t { none, required };
enum class Scope : std::uint8_t { unchanged, changed };
enum class ImpactV3 : std::uint8_t { none, low, high };

struct CvssV3Label {
  AttackVector attack_vector = AttackVector::network;
  AttackComplexity attack_complexity = AttackComplexity::low;
  PrivilegesRequired privileges_required = PrivilegesRequired::none;
  UserInteraction user_interaction = UserInteraction::none;
  Scope scope = Scope::unchanged;
  ImpactV3 confidentiality = ImpactV3::none;
  ImpactV3 integrity = ImpactV3::none;
  ImpactV3 availability = ImpactV3::none;
  double base_score = 0;

  bool operator==(const CvssV3Label&) const = default;
};

/// One categorical CVSS component: short name, NVD JSON key and value spellings.
/// For the two optional v2 booleans the values are "false", "true", "unknown".
struct CvssComponent {
  std::string_view name;
  std::string_view json_key;
  std::span<const std::string_view> values;
};

std::span<const CvssComponent> v2_components();  // AV AC Au C I A UI OP
std::span<const CvssComponent> v3_components();  // AV AC PR UI S C I A

/// Value index of component `c` (position in the component table).
int component_value(const CvssV2Label& label, std::size_t c);
int component_value(const CvssV3Label& label, std::size_t c);

struct CpePair {
  std::string vendor;
  std::string product;
  bool operator==(const CpePair&) const = default;
};

struct CveRecord {
  std::string id;
  std::chrono::sys_days published{};
  int year = 0;
  int day_of_year = 0;  // 1..366
  std::string description;
  std::vector<std::string> cwes;
  std::vector<CpePair> cpes;
  std::optional<CvssV2Label> cvss_v2;
  std::optional<CvssV3Label> cvss_v3;

  bool operator==(const CveRecord&) const = default;
};

bool is_cve_id(std::string_view id);
std::string format_date(std::chrono::sys_days day);
/// Parses the leading "YYYY-MM-DD" of an NVD timestamp.
std::optional<std::chrono::sys_days> parse_date(std::string_view text);

struct Diagnostic {
  std::size_t item = 0;  // position in CVE_Items
  std::string id;        // empty when the item carries none
  std::string kind;      // rejected | schema | empty_description | no_english | label
  std::string message;
};

struct ParseResult {
  std::vector<CveRecord> records;
  std::vector<Diagnostic> diagnostics;
};

/// Throws ParseError (with byte offset) on malformed JSON and FormatError when
/// the document has no CVE_Items array. Item-level problems become diagnostics.
ParseResult parse_feed(std::string_view feed_bytes);

/// NVD 1.1 item carrying exactly the fields parse_feed extracts.
nlohmann::json to_feed_item(const CveRecord& record);

struct SourceFile {
  std::string name;
  std::string digest;  // SHA-256, lowercase hex, of the file bytes as stored
  bool operator==(const SourceFile&) const = default;
};

struct Snapshot {
  std::vector<CveRecord> records;  // sorted by (published, id): the canonical row order
  std::vector<SourceFile> source_files;
  std::int64_t created = 0;  // seconds since the Unix epoch

  std::size_t size() const { return records.size(); }
  bool operator==(const Snapshot&) const = default;
};

class EmptySnapshot : public Error {
 public:
  using Error::Error;
};

struct YearRange {
  int first = 1999;
  int last = 2020;
};

/// Dedups by id (last wins), filters to `years`, sorts canonically. `created`
/// defaults to the start of the day after the latest publication date so that
/// rebuilding from the same feeds is byte-identical.
Snapshot build_snapshot(std::vector<CveRecord> records, YearRange years,
                        std::vector<SourceFile> sources = {}, std::optional<std::int64_t> created = {});

struct Split {
  std::vector<std::size_t> train;       // ascending
  std::vector<std::size_t> validation;  // ascending
};

/// Seeded permutation of 0..rows-1; the first round(fraction * rows) rows train.
Split split(std::size_t rows, double train_fraction, std::uint64_t seed);
inline Split split(const Snapshot& s, double train_fraction, std::uint64_t seed) {
  return split(s.size(), train_fraction, seed);
}

/// Raw bytes of a feed file, gunzipped when compressed.
std::string read_feed_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

/// Parses every feed (in parallel) and builds the snapshot; diagnostics are
/// appended to `diagnostics` when given.
Snapshot ingest(const std::vector<std::filesystem::path>& feeds, YearRange years,
                std::optional<std::int64_t> created = {}, std::vector<Diagnostic>* diagnostics = nullptr);

inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(binio::Writer& w, const Snapshot& s);  // body only, no magic
Snapshot read_snapshot(binio::Reader& r);
void save_snapshot(const std::filesystem::path& path, const Snapshot& s);
Snapshot load_snapshot(const std::filesystem::path& path);

/// Audit CSV: id, year, published, CWEs, CPEs, CVSS components ("none" when absent).
void write_snapshot_csv(std::ostream& out, const Snapshot& s);

}  // namespace vulnspace::corpus

#endif  // VULNSPACE_CORPUS_HPP
