#pragma once

// Pluggable passage retrieval behind the wikipedia_search tool. The bundled
// backend ranks a local JSONL corpus ({id, title, text}) by bag-of-words
// cosine similarity.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mentor/error.hpp"

namespace mentor {

using Clock = std::chrono::steady_clock;

struct Passage {
  std::string id;
  std::string title;
  std::string text;
};

struct SearchHit {
  std::string title;
  std::string passage;
  double score = 0.0;
};

/// Thrown by backends; surfaced to callers as a backend_error result.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& message) : Error("backend_error", message) {}
};

class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  /// Throws BackendError when unavailable or past `deadline`.
  virtual std::vector<SearchHit> search(std::string_view query, std::size_t top_n,
                                        Clock::time_point deadline) const = 0;
};

/// Backend that always fails, e.g. when no corpus was configured.
class UnavailableBackend final : public SearchBackend {
 public:
  explicit UnavailableBackend(std::string reason) : reason_(std::move(reason)) {}
  std::vector<SearchHit> search(std::string_view, std::size_t, Clock::time_point) const override {
    throw BackendError(reason_);
  }

 private:
  std::string reason_;
};

inline std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

class LexicalIndex final : public SearchBackend {
 public:
  explicit LexicalIndex(std::vector<Passage> passages) : passages_(std::move(passages)) {
    vectors_.reserve(passages_.size());
    norms_.reserve(passages_.size());
    for (const Passage& p : passages_) {
      TermVector v = term_counts(p.title + " " + p.text);
      norms_.push_back(norm(v));
      vectors_.push_back(std::move(v));
    }
  }

  /// Loads a JSONL corpus. A missing, unreadable or empty corpus yields a
  /// backend that reports backend_error on every search.
  static std::shared_ptr<const SearchBackend> load(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::make_shared<UnavailableBackend>("corpus not found: " + path);
    std::vector<Passage> passages;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) continue;
      Passage p;
      p.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                              : std::to_string(passages.size());
      p.title = j.value("title", std::string{});
      p.text = j.value("text", std::string{});
      passages.push_back(std::move(p));
    }
    if (passages.empty()) return std::make_shared<UnavailableBackend>("corpus is empty: " + path);
    return std::make_shared<LexicalIndex>(std::move(passages));
  }

  std::size_t size() const { return passages_.size(); }

  std::vector<SearchHit> search(std::string_view query, std::size_t top_n,
                                Clock::time_point deadline) const override {
    if (passages_.empty()) throw BackendError("corpus is empty");
    TermVector q = term_counts(query);
    double qn = norm(q);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(passages_.size());
    for (std::size_t i = 0; i < passages_.size(); ++i) {
      if ((i & 255u) == 0 && Clock::now() > deadline) throw BackendError("search deadline exceeded");
      double dot = 0.0;
      for (const auto& [term, c] : q) {
        auto it = vectors_[i].find(term);
        if (it != vectors_[i].end()) dot += static_cast<double>(c) * static_cast<double>(it->second);
      }
      double denom = qn * norms_[i];
      scored.emplace_back(denom > 0.0 ? dot / denom : 0.0, i);
    }
    // Highest score first; corpus order breaks ties.
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<SearchHit> hits;
    for (std::size_t k = 0; k < std::min(top_n, scored.size()); ++k) {
      const Passage& p = passages_[scored[k].second];
      hits.push_back(SearchHit{p.title, p.text, scored[k].first});
    }
    return hits;
  }

 private:
  using TermVector = std::map<std::string, std::size_t>;

  static TermVector term_counts(std::string_view text) {
    TermVector v;
    for (auto& w : tokenize_words(text)) ++v[w];
    return v;
  }

  static double norm(const TermVector& v) {
    double s = 0.0;
    for (const auto& [t, c] : v) s += static_cast<double>(c) * static_cast<double>(c);
    return std::sqrt(s);
  }

  std::vector<Passage> passages_;
  std::vector<TermVector> vectors_;
  std::vector<double> norms_;
};

}  // namespace mentor
