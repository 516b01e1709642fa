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

#include "vulnspace/textprep.hpp"

#include "vulnspace/error.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <fstream>

namespace vulnspace::textprep {

namespace {

constexpr std::string_view kVersionToken = "<version>";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && u > 0x20 && u != 0x7f && !((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'));
}

bool is_word_char(char c) { return !is_space(c) && !is_punct(c); }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

std::string unicode_fold(std::string_view text, bool nfc, bool lower) {
  if (!nfc && !lower) return std::string(text);
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (nfc) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_SUCCESS(status)) {
      icu::UnicodeString out = n->normalize(u, status);
      if (U_SUCCESS(status)) u = out;
    }
  }
  if (lower) u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

// digits(.digits)+
bool is_version(std::string_view w) {
  bool dot = false;
  std::size_t i = 0;
  for (;;) {
    const std::size_t b = i;
    while (i < w.size() && is_digit(w[i])) ++i;
    if (i == b) return false;
    if (i == w.size()) return dot;
    if (w[i] != '.') return false;
    dot = true;
    ++i;
  }
}

bool is_cve(std::string_view w) {
  if (w.size() < 13) return false;
  const auto lower3 = w.substr(0, 4);
  if (!((lower3[0] == 'c' || lower3[0] == 'C') && (lower3[1] == 'v' || lower3[1] == 'V') &&
        (lower3[2] == 'e' || lower3[2] == 'E') && lower3[3] == '-'))
    return false;
  if (w[8] != '-') return false;
  for (std::size_t i = 4; i < 8; ++i)
    if (!is_digit(w[i])) return false;
  for (std::size_t i = 9; i < w.size(); ++i)
    if (!is_digit(w[i])) return false;
  return w.size() - 9 >= 4;
}

// Length of the URL scheme prefix ("https://", "www."), or 0.
std::size_t url_prefix(std::string_view s) {
  for (const std::string_view p : {"https://", "http://", "ftp://"})
    if (s.substr(0, p.size()) == p) return p.size();
  if (s.substr(0, 4) == "www.") return 0;  // hostname starts here
  return std::string_view::npos;
}

class TokenRewriter {
 public:
  TokenRewriter(const NormalizeOptions& o, std::vector<std::string>& out) : o_(o), out_(out) {}

  void token(std::string_view t) {
    if (!o_.punctuation) {
      word_or_url(t);
      return;
    }
    // Leading punctuation runs, unless a preserved "<version>" starts here.
    std::size_t b = 0;
    while (b < t.size() && is_punct(t[b]) && !t.substr(b).starts_with(kVersionToken)) b = emit_run(t, b);
    std::string_view rest = t.substr(b);
    if (o_.urls && url_prefix(rest) != std::string_view::npos) {
      url(rest);
      return;
    }
    scan(rest);
  }

 private:
  std::size_t emit_run(std::string_view t, std::size_t i) {
    std::size_t j = i;
    while (j < t.size() && t[j] == t[i]) ++j;
    out_.emplace_back(t.substr(i, j - i));
    return j;
  }

  // Hostname only; trailing punctuation on a bare host is split off.
  void url(std::string_view t) {
    const auto skip = url_prefix(t);
    std::string_view host = t.substr(skip);
    host = host.substr(0, std::min(host.find_first_of("/?#:"), host.size()));
    if (!o_.punctuation) {
      if (!host.empty()) out_.emplace_back(host);
      return;
    }
    std::size_t e = host.size();
    while (e > 0 && is_punct(host[e - 1])) --e;
    if (e > 0) out_.emplace_back(host.substr(0, e));
    for (std::size_t i = e; i < host.size();) i = emit_run(host, i);
  }

  void word_or_url(std::string_view w) {
    if (w.empty()) return;
    if (o_.urls && url_prefix(w) != std::string_view::npos) {
      url(w);
      return;
    }
    word(w);
  }

  void word(std::string_view w) {
    if (w.empty()) return;
    if (o_.versions && is_version(w)) {
      out_.emplace_back(kVersionToken);
    } else if (o_.cve_ids && is_cve(w)) {
      std::string id(w);
      for (auto& c : id) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      out_.push_back(std::move(id));
    } else {
      out_.emplace_back(w);
    }
  }

  // Words keep '-', '_', '.', '/' between word characters; other punctuation
  // becomes runs of identical characters.
  void scan(std::string_view t) {
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < t.size()) {
      if (t.substr(i).starts_with(kVersionToken)) {
        word(t.substr(start, i - start));
        out_.emplace_back(kVersionToken);
        i += kVersionToken.size();
        start = i;
        continue;
      }
      const char c = t[i];
      if (!is_punct(c)) {
        ++i;
        continue;
      }
      const bool joiner = (c == '-' || c == '_' || c == '.' || c == '/') && i > start && i + 1 < t.size() &&
                          is_word_char(t[i - 1]) && is_word_char(t[i + 1]);
      if (joiner) {
        ++i;
        continue;
      }
      word(t.substr(start, i - start));
      i = emit_run(t, i);
      start = i;
    }
    word(t.substr(start));
  }

  const NormalizeOptions& o_;
  std::vector<std::string>& out_;
};

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

std::string normalize(std::string_view description, const NormalizeOptions& options) {
  const std::string folded = unicode_fold(description, options.unicode_nfc, options.lowercase);
  std::vector<std::string> pieces;
  TokenRewriter rw(options, pieces);
  for (const auto t : split_ws(folded)) rw.token(t);
  return join(pieces, ' ');
}

const std::vector<std::string_view>& stopwords() {
  static const std::vector<std::string_view> words = {
      "a",     "about", "after", "all",   "also",  "an",    "and",   "any",   "are",   "as",
      "at",    "be",    "been",  "being", "but",   "by",    "can",   "could", "did",   "do",
      "does",  "for",   "from",  "had",   "has",   "have",  "he",    "her",   "his",   "if",
      "in",    "into",  "is",    "it",    "its",   "may",   "might", "of",    "on",    "or",
      "our",   "she",   "should", "so",   "such",  "than",  "that",  "the",   "their", "them",
      "then",  "there", "these", "they",  "this",  "those", "to",    "via",   "was",   "we",
      "were",  "which", "who",   "will",  "with",  "would",
  };
  return words;
}

TokenSequence tokenize(std::string_view normalized) {
  TokenSequence seq;
  const auto& stop = stopwords();
  for (const auto t : split_ws(normalized)) {
    const bool all_punct = std::all_of(t.begin(), t.end(), is_punct);
    if (all_punct || std::find(stop.begin(), stop.end(), t) != stop.end()) {
      ++seq.dropped_count;
      continue;
    }
    seq.tokens.emplace_back(t);
  }
  return seq;
}

void PhraseLexicon::add(std::string_view phrase) {
  const std::string folded = unicode_fold(phrase, true, true);
  std::vector<std::string> words;
  for (const auto w : split_ws(folded)) words.emplace_back(w);
  if (words.size() < 2)
    throw InvalidArgument("phrase \"" + std::string(phrase) + "\" has fewer than two words");
  auto& bucket = by_head_[words.front()];
  if (std::find(bucket.begin(), bucket.end(), words) != bucket.end()) return;
  longest_ = std::max(longest_, words.size());
  bucket.push_back(std::move(words));
  ++count_;
}

PhraseLexicon PhraseLexicon::parse(std::istream& in, const std::string& source) {
  PhraseLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (split_ws(line).empty()) continue;
    try {
      lex.add(line);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lex;
}

PhraseLexicon PhraseLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  return parse(in, path.string());
}

bool PhraseLexicon::contains(std::string_view phrase) const {
  const std::string folded = unicode_fold(phrase, true, true);
  std::vector<std::string> words;
  for (const auto w : split_ws(folded)) words.emplace_back(w);
  if (words.empty()) return false;
  const auto it = by_head_.find(words.front());
  return it != by_head_.end() && std::find(it->second.begin(), it->second.end(), words) != it->second.end();
}

std::size_t PhraseLexicon::match(const std::vector<std::string>& tokens, std::size_t at) const {
  if (at >= tokens.size()) return 0;
  const auto it = by_head_.find(tokens[at]);
  if (it == by_head_.end()) return 0;
  std::size_t best = 0;
  for (const auto& phrase : it->second) {
    if (phrase.size() <= best || at + phrase.size() > tokens.size()) continue;
    if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(at))) best = phrase.size();
  }
  return best;
}

TokenSequence merge_phrases(const TokenSequence& seq, const PhraseLexicon& lexicon) {
  if (lexicon.empty()) return seq;
  TokenSequence out;
  out.dropped_count = seq.dropped_count;
  for (std::size_t i = 0; i < seq.tokens.size();) {
    const std::size_t len = lexicon.match(seq.tokens, i);
    if (len == 0) {
      out.tokens.push_back(seq.tokens[i++]);
      continue;
    }
    std::string joined = seq.tokens[i];
    for (std::size_t k = 1; k < len; ++k) joined += '_' + seq.tokens[i + k];
    out.tokens.push_back(std::move(joined));
    i += len;
  }
  return out;
}

TokenSequence preprocess(std::string_view description, const PhraseLexicon& lexicon, const NormalizeOptions& options) {
  return merge_phrases(tokenize(normalize(description, options)), lexicon);
}

}  // namespace vulnspace::textprep
