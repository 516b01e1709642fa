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

// Description clean-up: normalization rules, tokenization with a fixed stopword
// list, and greedy merging of multi-word product names.

#ifndef VULNSPACE_TEXTPREP_HPP
#define VULNSPACE_TEXTPREP_HPP

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vulnspace::textprep {

/// Version of the rule set below; bump whenever normalize() output can change.
inline constexpr int kRulesVersion = 1;

/// Each rule class can be switched off for ablations.
struct NormalizeOptions {
  bool unicode_nfc = true;
  bool lowercase = true;
  bool urls = true;         // URL -> hostname
  bool versions = true;     // 1.2.3 -> <version>
  bool cve_ids = true;      // cve-2020-1 -> CVE-2020-1
  bool punctuation = true;  // split punctuation off words

  bool operator==(const NormalizeOptions&) const = default;
};

/// Normalized text, tokens separated by single spaces. Idempotent for any
/// fixed option set. Bytes >= 0x80 count as word characters.
std::string normalize(std::string_view description, const NormalizeOptions& options = {});

struct TokenSequence {
  std::vector<std::string> tokens;
  std::size_t dropped_count = 0;

  bool operator==(const TokenSequence&) const = default;
};

/// The built-in stopword list (lowercase).
const std::vector<std::string_view>& stopwords();

/// Whitespace split; drops pure-punctuation tokens and stopwords.
TokenSequence tokenize(std::string_view normalized);

class PhraseLexicon {
 public:
  PhraseLexicon() = default;

  /// One phrase per line, '#' starts a comment. Throws InvalidArgument naming
  /// the line for phrases with fewer than two words.
  static PhraseLexicon parse(std::istream& in, const std::string& source = "lexicon");
  static PhraseLexicon load(const std::filesystem::path& path);

  /// Adds a phrase; matching is case-insensitive.
  void add(std::string_view phrase);

  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  bool contains(std::string_view phrase) const;
  std::size_t longest() const noexcept { return longest_; }

  /// Length in tokens of the longest phrase matching tokens[at...], or 0.
  std::size_t match(const std::vector<std::string>& tokens, std::size_t at) const;

 private:
  // First word -> phrases (as word lists) starting with it.
  std::unordered_map<std::string, std::vector<std::vector<std::string>>> by_head_;
  std::size_t count_ = 0;
  std::size_t longest_ = 0;
};

/// Greedy longest-match left-to-right; matched runs become one token joined by '_'.
TokenSequence merge_phrases(const TokenSequence& seq, const PhraseLexicon& lexicon);

/// normalize, tokenize, merge_phrases.
TokenSequence preprocess(std::string_view description, const PhraseLexicon& lexicon,
                         const NormalizeOptions& options = {});

}  // namespace vulnspace::textprep

#endif  // VULNSPACE_TEXTPREP_HPP
