#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace mklvc {

/// Levenshtein distance with unit insert/delete/substitute costs.
template <typename Token>
std::size_t edit_distance(const std::vector<Token>& a, const std::vector<Token>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Lowercases (ASCII and Latin-1 letters), strips ASCII and common Unicode
/// punctuation, and collapses whitespace runs to single spaces. Input is
/// UTF-8; the result is a sequence of code points.
std::u32string normalize_text(const std::string& utf8);

std::vector<std::u32string> split_words(const std::u32string& normalized);

/// An error rate or similarity together with the value clamped for scoring.
struct ClampedValue {
  double raw;
  double clamped;
};

/// Word error rate over normalized words; raw may exceed 1, clamped is
/// min(raw, 1). Throws ValidationError if the reference normalizes to empty.
ClampedValue wer(const std::string& reference, const std::string& hypothesis);
/// Character error rate over normalized code points, spaces included.
ClampedValue cer(const std::string& reference, const std::string& hypothesis);

/// Cosine similarity; clamped is max(raw, 0). Zero vectors are an error.
ClampedValue cosine_sim(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct ScoreTriple {
  double wer;
  double cer;
  double sim;
  double total;
};

/// Euclidean distance to the ideal point (WER 0, CER 0, SIM 1). All inputs
/// must lie in [0, 1].
ScoreTriple total_score(double wer, double cer, double sim);

struct ScoredPair {
  std::string method;
  std::string pair_id;
  ScoreTriple score;
};

struct LeaderboardRow {
  std::string method;
  std::size_t count;
  ScoreTriple mean;  // means of wer/cer/sim, total recomputed from them
};

/// Per-method means, ordered by ascending total (ties by method name).
std::vector<LeaderboardRow> aggregate(const std::vector<ScoredPair>& rows);

}  // namespace mklvc
