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

#include "vulnspace/corpus.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace vulnspace::corpus {

using nlohmann::json;

namespace {

using namespace std::string_view_literals;

constexpr std::array kAvV2{"LOCAL"sv, "ADJACENT_NETWORK"sv, "NETWORK"sv};
constexpr std::array kAcV2{"HIGH"sv, "MEDIUM"sv, "LOW"sv};
constexpr std::array kAuV2{"MULTIPLE"sv, "SINGLE"sv, "NONE"sv};
constexpr std::array kImpactV2{"NONE"sv, "PARTIAL"sv, "COMPLETE"sv};
constexpr std::array kTriBool{"false"sv, "true"sv, "unknown"sv};

constexpr std::array kAvV3{"NETWORK"sv, "ADJACENT_NETWORK"sv, "LOCAL"sv, "PHYSICAL"sv};
constexpr std::array kAcV3{"LOW"sv, "HIGH"sv};
constexpr std::array kPrV3{"NONE"sv, "LOW"sv, "HIGH"sv};
constexpr std::array kUiV3{"NONE"sv, "REQUIRED"sv};
constexpr std::array kScopeV3{"UNCHANGED"sv, "CHANGED"sv};
constexpr std::array kImpactV3{"NONE"sv, "LOW"sv, "HIGH"sv};

const std::array<CvssComponent, 8> kV2Components{{
    {"AV", "accessVector", kAvV2},
    {"AC", "accessComplexity", kAcV2},
    {"Au", "authentication", kAuV2},
    {"C", "confidentialityImpact", kImpactV2},
    {"I", "integrityImpact", kImpactV2},
    {"A", "availabilityImpact", kImpactV2},
    {"UI", "userInteractionRequired", kTriBool},
    {"OP", "obtainPrivilege", kTriBool},
}};

const std::array<CvssComponent, 8> kV3Components{{
    {"AV", "attackVector", kAvV3},
    {"AC", "attackComplexity", kAcV3},
    {"PR", "privilegesRequired", kPrV3},
    {"UI", "userInteraction", kUiV3},
    {"S", "scope", kScopeV3},
    {"C", "confidentialityImpact", kImpactV3},
    {"I", "integrityImpact", kImpactV3},
    {"A", "availabilityImpact", kImpactV3},
}};

int tri(const std::optional<bool>& b) { return b ? (*b ? 1 : 0) : 2; }

std::optional<bool> untri(int v) {
  if (v == 2) return std::nullopt;
  return v == 1;
}

// Index of `value` in the component's spelling table, or -1.
int lookup(const CvssComponent& c, std::string_view value) {
  for (std::size_t i = 0; i < c.values.size(); ++i)
    if (c.values[i] == value) return static_cast<int>(i);
  return -1;
}

const json* find(const json& obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json* path(const json& obj, std::initializer_list<std::string_view> keys) {
  const json* cur = &obj;
  for (const auto key : keys) {
    cur = find(*cur, key);
    if (cur == nullptr) return nullptr;
  }
  return cur;
}

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v"sv;
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

// Splits a CPE 2.3 formatted string on unescaped colons.
std::vector<std::string> cpe_fields(std::string_view uri) {
  std::vector<std::string> out(1);
  for (std::size_t i = 0; i < uri.size(); ++i) {
    const char ch = uri[i];
    if (ch == '\\' && i + 1 < uri.size()) {
      out.back() += uri[++i];
    } else if (ch == ':') {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  return out;
}

std::string cpe_escape(std::string_view s) {
  std::string out;
  for (const char ch : s) {
    if (ch == ':' || ch == '\\') out += '\\';
    out += ch;
  }
  return out;
}

void collect_cpes(const json& node, std::vector<CpePair>& out) {
  if (const json* matches = find(node, "cpe_match"); matches && matches->is_array()) {
    for (const auto& m : *matches) {
      const json* uri = find(m, "cpe23Uri");
      if (uri == nullptr || !uri->is_string()) continue;
      const auto fields = cpe_fields(uri->get_ref<const std::string&>());
      if (fields.size() < 5 || fields[3].empty() || fields[4].empty()) continue;
      CpePair pair{fields[3], fields[4]};
      if (std::find(out.begin(), out.end(), pair) == out.end()) out.push_back(std::move(pair));
    }
  }
  if (const json* children = find(node, "children"); children && children->is_array())
    for (const auto& child : *children) collect_cpes(child, out);
}

// Reads component `c` of `metrics`; nullopt when absent or outside its value set.
std::optional<int> categorical(const json& metrics, const CvssComponent& c) {
  const json* v = find(metrics, c.json_key);
  if (v == nullptr || !v->is_string()) return std::nullopt;
  const int idx = lookup(c, v->get_ref<const std::string&>());
  if (idx < 0) return std::nullopt;
  return idx;
}

std::optional<double> score(const json& metrics) {
  const json* v = find(metrics, "baseScore");
  if (v == nullptr || !v->is_number()) return std::nullopt;
  const double s = v->get<double>();
  if (!(s >= 0 && s <= 10)) return std::nullopt;
  return s;
}

std::optional<bool> optional_flag(const json& obj, std::string_view key) {
  const json* v = find(obj, key);
  if (v == nullptr || !v->is_boolean()) return std::nullopt;
  return v->get<bool>();
}

std::optional<CvssV2Label> parse_v2(const json& base, std::string& problem) {
  const json* metrics = find(base, "cvssV2");
  if (metrics == nullptr) {
    problem = "baseMetricV2 without cvssV2";
    return std::nullopt;
  }
  std::array<int, 6> v{};
  for (std::size_t c = 0; c < 6; ++c) {
    const auto idx = categorical(*metrics, kV2Components[c]);
    if (!idx) {
      problem = "CVSS v2 " + std::string(kV2Components[c].json_key) + " missing or unknown";
      return std::nullopt;
    }
    v[c] = *idx;
  }
  const auto s = score(*metrics);
  if (!s) {
    problem = "CVSS v2 baseScore missing or out of range";
    return std::nullopt;
  }
  CvssV2Label l;
  l.access_vector = static_cast<AccessVector>(v[0]);
  l.access_complexity = static_cast<AccessComplexity>(v[1]);
  l.authentication = static_cast<Authentication>(v[2]);
  l.confidentiality = static_cast<ImpactV2>(v[3]);
  l.integrity = static_cast<ImpactV2>(v[4]);
  l.availability = static_cast<ImpactV2>(v[5]);
  l.base_score = *s;
  l.user_interaction_required = optional_flag(base, "userInteractionRequired");
  // Any of the three obtain*Privilege flags; unknown only when none is present.
  for (const auto key : {"obtainAllPrivilege"sv, "obtainUserPrivilege"sv, "obtainOtherPrivilege"sv}) {
    if (const auto f = optional_flag(base, key)) l.obtain_privileges = l.obtain_privileges.value_or(false) || *f;
  }
  return l;
}

std::optional<CvssV3Label> parse_v3(const json& base, std::string& problem) {
  const json* metrics = find(base, "cvssV3");
  if (metrics == nullptr) {
    problem = "baseMetricV3 without cvssV3";
    return std::nullopt;
  }
  std::array<int, 8> v{};
  for (std::size_t c = 0; c < 8; ++c) {
    const auto idx = categorical(*metrics, kV3Components[c]);
    if (!idx) {
      problem = "CVSS v3 " + std::string(kV3Components[c].json_key) + " missing or unknown";
      return std::nullopt;
    }
    v[c] = *idx;
  }
  const auto s = score(*metrics);
  if (!s) {
    problem = "CVSS v3 baseScore missing or out of range";
    return std::nullopt;
  }
  CvssV3Label l;
  l.attack_vector = static_cast<AttackVector>(v[0]);
  l.attack_complexity = static_cast<AttackComplexity>(v[1]);
  l.privileges_required = static_cast<PrivilegesRequired>(v[2]);
  l.user_interaction = static_cast<UserInteraction>(v[3]);
  l.scope = static_cast<Scope>(v[4]);
  l.confidentiality = static_cast<ImpactV3>(v[5]);
  l.integrity = static_cast<ImpactV3>(v[6]);
  l.availability = static_cast<ImpactV3>(v[7]);
  l.base_score = *s;
  return l;
}

void fill_dates(CveRecord& r, std::chrono::sys_days day) {
  using namespace std::chrono;
  r.published = day;
  const year_month_day ymd(day);
  r.year = static_cast<int>(ymd.year());
  r.day_of_year = static_cast<int>((day - sys_days(ymd.year() / January / 1)).count()) + 1;
}

}  // namespace

std::span<const CvssComponent> v2_components() { return kV2Components; }
std::span<const CvssComponent> v3_components() { return kV3Components; }

int component_value(const CvssV2Label& l, std::size_t c) {
  switch (c) {
    case 0: return static_cast<int>(l.access_vector);
    case 1: return static_cast<int>(l.access_complexity);
    case 2: return static_cast<int>(l.authentication);
    case 3: return static_cast<int>(l.confidentiality);
    case 4: return static_cast<int>(l.integrity);
    case 5: return static_cast<int>(l.availability);
    case 6: return tri(l.user_interaction_required);
    case 7: return tri(l.obtain_privileges);
    default: throw InvalidArgument("CVSS v2 component index out of range");
  }
}

int component_value(const CvssV3Label& l, std::size_t c) {
  switch (c) {
    case 0: return static_cast<int>(l.attack_vector);
    case 1: return static_cast<int>(l.attack_complexity);
    case 2: return static_cast<int>(l.privileges_required);
    case 3: return static_cast<int>(l.user_interaction);
    case 4: return static_cast<int>(l.scope);
    case 5: return static_cast<int>(l.confidentiality);
    case 6: return static_cast<int>(l.integrity);
    case 7: return static_cast<int>(l.availability);
    default: throw InvalidArgument("CVSS v3 component index out of range");
  }
}

bool is_cve_id(std::string_view id) {
  if (id.size() < 13 || id.substr(0, 4) != "CVE-" || id[8] != '-') return false;
  const auto digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  return digits(id.substr(4, 4)) && digits(id.substr(9));
}

std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd(day);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<std::chrono::sys_days> parse_date(std::string_view text) {
  using namespace std::chrono;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
  y = std::stoi(std::string(text.substr(0, 4)));
  m = static_cast<unsigned>(std::stoi(std::string(text.substr(5, 2))));
  d = static_cast<unsigned>(std::stoi(std::string(text.substr(8, 2))));
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days(ymd);
}

ParseResult parse_feed(std::string_view feed_bytes) {
  json doc;
  try {
    doc = json::parse(feed_bytes.begin(), feed_bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed feed JSON at byte " + std::to_string(e.byte) + ": " + e.what(), e.byte);
  }
  const json* items = find(doc, "CVE_Items");
  if (items == nullptr || !items->is_array()) throw FormatError("feed has no CVE_Items array");

  ParseResult out;
  for (std::size_t i = 0; i < items->size(); ++i) {
    const json& item = (*items)[i];
    const auto diag = [&](std::string id, std::string kind, std::string message) {
      out.diagnostics.push_back({i, std::move(id), std::move(kind), std::move(message)});
    };
    const json* cve = find(item, "cve");
    const json* idv = cve ? path(*cve, {"CVE_data_meta", "ID"}) : nullptr;
    if (idv == nullptr || !idv->is_string()) {
      diag("", "schema", "missing cve.CVE_data_meta.ID");
      continue;
    }
    CveRecord r;
    r.id = idv->get<std::string>();
    if (!is_cve_id(r.id)) {
      diag(r.id, "schema", "identifier does not match CVE-YYYY-NNNN");
      continue;
    }
    const json* pub = find(item, "publishedDate");
    const auto day = pub && pub->is_string() ? parse_date(pub->get_ref<const std::string&>()) : std::nullopt;
    if (!day) {
      diag(r.id, "schema", "missing or malformed publishedDate");
      continue;
    }
    fill_dates(r, *day);

    const json* descs = path(*cve, {"description", "description_data"});
    std::optional<std::string> text;
    if (descs && descs->is_array()) {
      for (const auto& d : *descs) {
        const json* lang = find(d, "lang");
        const json* value = find(d, "value");
        if (lang && lang->is_string() && value && value->is_string() &&
            (lang->get_ref<const std::string&>() == "en" || lang->get_ref<const std::string&>() == "eng")) {
          text = value->get<std::string>();
          break;
        }
      }
    }
    if (!text) {
      diag(r.id, "no_english", "no English description");
      continue;
    }
    r.description = trim(*text);
    if (r.description.empty()) {
      diag(r.id, "empty_description", "description is empty after trimming");
      continue;
    }
    if (r.description.starts_with("** REJECT **")) {
      diag(r.id, "rejected", "description marked ** REJECT **");
      continue;
    }

    if (const json* pts = path(*cve, {"problemtype", "problemtype_data"}); pts && pts->is_array()) {
      for (const auto& pt : *pts) {
        const json* ds = find(pt, "description");
        if (ds == nullptr || !ds->is_array()) continue;
        for (const auto& d : *ds) {
          const json* v = find(d, "value");
          if (v == nullptr || !v->is_string()) continue;
          const auto& cwe = v->get_ref<const std::string&>();
          if (std::find(r.cwes.begin(), r.cwes.end(), cwe) == r.cwes.end()) r.cwes.push_back(cwe);
        }
      }
    }

    if (const json* nodes = path(item, {"configurations", "nodes"}); nodes && nodes->is_array())
      for (const auto& node : *nodes) collect_cpes(node, r.cpes);

    std::string problem;
    if (const json* b2 = path(item, {"impact", "baseMetricV2"})) {
      r.cvss_v2 = parse_v2(*b2, problem);
      if (!r.cvss_v2) diag(r.id, "label", problem);
    }
    if (const json* b3 = path(item, {"impact", "baseMetricV3"})) {
      r.cvss_v3 = parse_v3(*b3, problem);
      if (!r.cvss_v3) diag(r.id, "label", problem);
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

json to_feed_item(const CveRecord& r) {
  json cwe_desc = json::array();
  for (const auto& c : r.cwes) cwe_desc.push_back({{"lang", "en"}, {"value", c}});
  json matches = json::array();
  for (const auto& p : r.cpes)
    matches.push_back({{"vulnerable", true},
                       {"cpe23Uri", "cpe:2.3:a:" + cpe_escape(p.vendor) + ":" + cpe_escape(p.product) +
                                        ":*:*:*:*:*:*:*:*"}});
  json item = {
      {"cve",
       {{"data_type", "CVE"},
        {"data_format", "MITRE"},
        {"data_version", "4.0"},
        {"CVE_data_meta", {{"ID", r.id}, {"ASSIGNER", "cve@mitre.org"}}},
        {"problemtype", {{"problemtype_data", json::array({{{"description", cwe_desc}}})}}},
        {"description", {{"description_data", json::array({{{"lang", "en"}, {"value", r.description}}})}}}}},
      {"configurations",
       {{"CVE_data_version", "4.0"},
        {"nodes", json::array({{{"operator", "OR"}, {"children", json::array()}, {"cpe_match", matches}}})}}},
      {"impact", json::object()},
      {"publishedDate", format_date(r.published) + "T00:00Z"},
  };
  if (r.cvss_v2) {
    const auto& l = *r.cvss_v2;
    json m = {{"version", "2.0"}, {"baseScore", l.base_score}};
    for (std::size_t c = 0; c < 6; ++c)
      m[std::string(kV2Components[c].json_key)] = kV2Components[c].values[static_cast<std::size_t>(component_value(l, c))];
    json base = {{"cvssV2", m}};
    if (l.user_interaction_required) base["userInteractionRequired"] = *l.user_interaction_required;
    if (l.obtain_privileges) {
      base["obtainAllPrivilege"] = false;
      base["obtainUserPrivilege"] = *l.obtain_privileges;
      base["obtainOtherPrivilege"] = false;
    }
    item["impact"]["baseMetricV2"] = base;
  }
  if (r.cvss_v3) {
    const auto& l = *r.cvss_v3;
    json m = {{"version", "3.1"}, {"baseScore", l.base_score}};
    for (std::size_t c = 0; c < 8; ++c)
      m[std::string(kV3Components[c].json_key)] = kV3Components[c].values[static_cast<std::size_t>(component_value(l, c))];
    item["impact"]["baseMetricV3"] = {{"cvssV3", m}};
  }
  return item;
}

Snapshot build_snapshot(std::vector<CveRecord> records, YearRange years, std::vector<SourceFile> sources,
                        std::optional<std::int64_t> created) {
  if (years.first > years.last) throw InvalidArgument("year range is empty");
  std::unordered_map<std::string, std::size_t> last;
  for (std::size_t i = 0; i < records.size(); ++i) last[records[i].id] = i;
  Snapshot s;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (last[r.id] != i) continue;
    if (r.year < years.first || r.year > years.last) continue;
    s.records.push_back(std::move(r));
  }
  if (s.records.empty())
    throw EmptySnapshot("empty snapshot: no records in years " + std::to_string(years.first) + "-" +
                        std::to_string(years.last));
  std::sort(s.records.begin(), s.records.end(), [](const CveRecord& a, const CveRecord& b) {
    return a.published != b.published ? a.published < b.published : a.id < b.id;
  });
  s.source_files = std::move(sources);
  if (created) {
    s.created = *created;
  } else {
    const auto next = s.records.back().published + std::chrono::days{1};
    s.created = std::chrono::duration_cast<std::chrono::seconds>(next.time_since_epoch()).count();
  }
  return s;
}

Split split(std::size_t rows, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw InvalidArgument("split: train_fraction must lie in (0, 1)");
  std::vector<std::size_t> perm(rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Explicit Fisher-Yates so the permutation does not depend on the standard library's shuffle.
  std::mt19937_64 rng(seed);
  for (std::size_t i = rows; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows)));
  Split out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

std::string read_feed_file(const std::filesystem::path& p) {
  gzFile f = gzopen(p.string().c_str(), "rb");
  if (f == nullptr) throw Error("cannot open feed " + p.string());
  std::string out;
  std::array<char, 1 << 16> buf{};
  for (;;) {
    const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      int code = 0;
      const std::string msg = gzerror(f, &code);
      gzclose(f);
      throw CorruptionError(p.string() + ": " + msg);
    }
    if (n == 0) break;
    out.append(buf.data(), static_cast<std::size_t>(n));
  }
  gzclose(f);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xf];
  }
  return out;
}

Snapshot ingest(const std::vector<std::filesystem::path>& feeds, YearRange years, std::optional<std::int64_t> created,
                std::vector<Diagnostic>* diagnostics) {
  struct Parsed {
    SourceFile source;
    ParseResult result;
  };
  std::vector<std::future<Parsed>> jobs;
  for (const auto& p : feeds) {
    jobs.push_back(std::async(std::launch::async, [p] {
      Parsed out;
      out.source = {p.filename().string(), sha256_hex(binio::read_file(p))};
      try {
        out.result = parse_feed(read_feed_file(p));
      } catch (const ParseError& e) {
        throw ParseError(p.string() + ": " + e.what(), e.offset());
      }
      return out;
    }));
  }
  std::vector<CveRecord> records;
  std::vector<SourceFile> sources;
  // Collect in argument order so "last parsed wins" follows the command line.
  for (auto& job : jobs) {
    auto parsed = job.get();
    sources.push_back(parsed.source);
    std::move(parsed.result.records.begin(), parsed.result.records.end(), std::back_inserter(records));
    if (diagnostics)
      diagnostics->insert(diagnostics->end(), parsed.result.diagnostics.begin(), parsed.result.diagnostics.end());
  }
  return build_snapshot(std::move(records), years, std::move(sources), created);
}

void write_snapshot(binio::Writer& w, const Snapshot& s) {
  w.i64(s.created);
  w.u64(s.source_files.size());
  for (const auto& f : s.source_files) {
    w.str(f.name);
    w.str(f.digest);
  }
  w.u64(s.records.size());
  for (const auto& r : s.records) {
    w.str(r.id);
    w.i64(r.published.time_since_epoch().count());
    w.str(r.description);
    w.u32(static_cast<std::uint32_t>(r.cwes.size()));
    for (const auto& c : r.cwes) w.str(c);
    w.u32(static_cast<std::uint32_t>(r.cpes.size()));
    for (const auto& p : r.cpes) {
      w.str(p.vendor);
      w.str(p.product);
    }
    w.u8(r.cvss_v2.has_value());
    if (r.cvss_v2) {
      for (std::size_t c = 0; c < kV2Components.size(); ++c) w.u8(static_cast<std::uint8_t>(component_value(*r.cvss_v2, c)));
      w.f64(r.cvss_v2->base_score);
    }
    w.u8(r.cvss_v3.has_value());
    if (r.cvss_v3) {
      for (std::size_t c = 0; c < kV3Components.size(); ++c) w.u8(static_cast<std::uint8_t>(component_value(*r.cvss_v3, c)));
      w.f64(r.cvss_v3->base_score);
    }
  }
}

namespace {

template <std::size_t N>
std::array<int, N> read_components(binio::Reader& r, const std::array<CvssComponent, N>& table) {
  std::array<int, N> v{};
  for (std::size_t c = 0; c < N; ++c) {
    v[c] = r.u8();
    if (static_cast<std::size_t>(v[c]) >= table[c].values.size())
      throw CorruptionError(r.context() + ": CVSS component value out of range");
  }
  return v;
}

}  // namespace

Snapshot read_snapshot(binio::Reader& r) {
  Snapshot s;
  s.created = r.i64();
  const auto n_files = r.count(8);
  for (std::uint64_t i = 0; i < n_files; ++i) {
    SourceFile f;
    f.name = r.str();
    f.digest = r.str();
    s.source_files.push_back(std::move(f));
  }
  const auto n = r.count(24);
  s.records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    CveRecord rec;
    rec.id = r.str();
    fill_dates(rec, std::chrono::sys_days{std::chrono::days{r.i64()}});
    rec.description = r.str();
    const auto n_cwe = r.u32();
    for (std::uint32_t k = 0; k < n_cwe; ++k) rec.cwes.push_back(r.str());
    const auto n_cpe = r.u32();
    for (std::uint32_t k = 0; k < n_cpe; ++k) {
      CpePair p;
      p.vendor = r.str();
      p.product = r.str();
      rec.cpes.push_back(std::move(p));
    }
    if (r.u8()) {
      const auto v = read_components(r, kV2Components);
      CvssV2Label l;
      l.access_vector = static_cast<AccessVector>(v[0]);
      l.access_complexity = static_cast<AccessComplexity>(v[1]);
      l.authentication = static_cast<Authentication>(v[2]);
      l.confidentiality = static_cast<ImpactV2>(v[3]);
      l.integrity = static_cast<ImpactV2>(v[4]);
      l.availability = static_cast<ImpactV2>(v[5]);
      l.user_interaction_required = untri(v[6]);
      l.obtain_privileges = untri(v[7]);
      l.base_score = r.f64();
      rec.cvss_v2 = l;
    }
    if (r.u8()) {
      const auto v = read_components(r, kV3Components);
      CvssV3Label l;
      l.attack_vector = static_cast<AttackVector>(v[0]);
      l.attack_complexity = static_cast<AttackComplexity>(v[1]);
      l.privileges_required = static_cast<PrivilegesRequired>(v[2]);
      l.user_interaction = static_cast<UserInteraction>(v[3]);
      l.scope = static_cast<Scope>(v[4]);
      l.confidentiality = static_cast<ImpactV3>(v[5]);
      l.integrity = static_cast<ImpactV3>(v[6]);
      l.availability = static_cast<ImpactV3>(v[7]);
      l.base_score = r.f64();
      rec.cvss_v3 = l;
    }
    s.records.push_back(std::move(rec));
  }
  return s;
}

void save_snapshot(const std::filesystem::path& p, const Snapshot& s) {
  binio::Writer w;
  w.magic("VSNP", kSnapshotVersion);
  write_snapshot(w, s);
  binio::write_file_atomic(p, w.take());
}

Snapshot load_snapshot(const std::filesystem::path& p) {
  const std::string bytes = binio::read_file(p);
  binio::Reader r(bytes, p.string());
  r.expect_magic("VSNP", kSnapshotVersion);
  auto s = read_snapshot(r);
  if (!r.at_end()) throw CorruptionError(p.string() + ": trailing bytes after snapshot");
  return s;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void write_snapshot_csv(std::ostream& out, const Snapshot& s) {
  out << "id,year,published,cwes,cpes";
  for (const auto& c : kV2Components) out << ",v2_" << c.name;
  for (const auto& c : kV3Components) out << ",v3_" << c.name;
  out << '\n';
  for (const auto& r : s.records) {
    std::string cwes, cpes;
    for (const auto& c : r.cwes) cwes += (cwes.empty() ? "" : ";") + c;
    for (const auto& p : r.cpes) cpes += (cpes.empty() ? "" : ";") + p.vendor + ":" + p.product;
    out << r.id << ',' << r.year << ',' << format_date(r.published) << ',' << csv_field(cwes) << ','
        << csv_field(cpes);
    for (std::size_t c = 0; c < kV2Components.size(); ++c)
      out << ',' << (r.cvss_v2 ? kV2Components[c].values[static_cast<std::size_t>(component_value(*r.cvss_v2, c))] : "none"sv);
    for (std::size_t c = 0; c < kV3Components.size(); ++c)
      out << ',' << (r.cvss_v3 ? kV3Components[c].values[static_cast<std::size_t>(component_value(*r.cvss_v3, c))] : "none"sv);
    out << '\n';
  }
}

}  // namespace vulnspace::corpus
