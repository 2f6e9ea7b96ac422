#include "mklvc/metrics.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "mklvc/errors.hpp"

namespace mklvc {

namespace {

std::u32string decode_utf8(const std::string& s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c >> 4) == 0xe) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c >> 3) == 0x1e) {
      len = 4;
      cp = c & 0x07;
    } else {
      throw ValidationError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > s.size())
      throw ValidationError("truncated UTF-8 sequence at offset " + std::to_string(i));
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2)
        throw ValidationError("invalid UTF-8 continuation byte at offset " +
                              std::to_string(i + k));
      cp = (cp << 6) | (cc & 0x3f);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

bool is_punctuation(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
                       (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e);
  switch (c) {
    case U'¡': case U'«': case U'·': case U'»': case U'¿':
    case U'‐': case U'‑': case U'‒': case U'–': case U'—':
    case U'‘': case U'’': case U'‚': case U'“': case U'”':
    case U'„': case U'…': case U'‹': case U'›':
      return true;
    default:
      return false;
  }
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0x00a0;
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  // Latin-1 capitals, excluding the multiplication sign.
  if (c >= 0xc0 && c <= 0xde && c != 0xd7) return c + 0x20;
  return c;
}

ClampedValue error_rate(std::size_t edits, std::size_t ref_len) {
  const double raw = static_cast<double>(edits) / static_cast<double>(ref_len);
  return {raw, std::min(raw, 1.0)};
}

void check_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << name << " = " << v << " lies outside [0, 1]";
    throw ValidationError(msg.str());
  }
}

}  // namespace

std::u32string normalize_text(const std::string& utf8) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : decode_utf8(utf8)) {
    if (is_punctuation(c)) continue;
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(to_lower(c));
  }
  return out;
}

std::vector<std::u32string> split_words(const std::u32string& normalized) {
  std::vector<std::u32string> words;
  std::u32string cur;
  for (char32_t c : normalized) {
    if (c == U' ') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

ClampedValue wer(const std::string& reference, const std::string& hypothesis) {
  const auto ref = split_words(normalize_text(reference));
  if (ref.empty()) throw ValidationError("WER is undefined for an empty reference");
  const auto hyp = split_words(normalize_text(hypothesis));
  return error_rate(edit_distance(ref, hyp), ref.size());
}

ClampedValue cer(const std::string& reference, const std::string& hypothesis) {
  const std::u32string ref = normalize_text(reference);
  if (ref.empty()) throw ValidationError("CER is undefined for an empty reference");
  const std::u32string hyp = normalize_text(hypothesis);
  const std::vector<char32_t> a(ref.begin(), ref.end()), b(hyp.begin(), hyp.end());
  return error_rate(edit_distance(a, b), a.size());
}

ClampedValue cosine_sim(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size())
    throw DimensionMismatchError("cosine_sim", static_cast<std::size_t>(u.size()),
                                 static_cast<std::size_t>(v.size()));
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine similarity of a zero vector");
  const double raw = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return {raw, std::max(raw, 0.0)};
}

ScoreTriple total_score(double wer, double cer, double sim) {
  check_unit_interval(wer, "WER");
  check_unit_interval(cer, "CER");
  check_unit_interval(sim, "SIM");
  const double gap = 1.0 - sim;
  return {wer, cer, sim, std::sqrt(wer * wer + cer * cer + gap * gap)};
}

std::vector<LeaderboardRow> aggregate(const std::vector<ScoredPair>& rows) {
  if (rows.empty()) throw ValidationError("nothing to aggregate");

  struct Sums {
    double wer = 0, cer = 0, sim = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Sums> by_method;
  for (const auto& r : rows) {
    Sums& s = by_method[r.method];
    s.wer += r.score.wer;
    s.cer += r.score.cer;
    s.sim += r.score.sim;
    ++s.n;
  }

  std::vector<LeaderboardRow> out;
  for (const auto& [method, s] : by_method) {
    const double n = static_cast<double>(s.n);
    out.push_back({method, s.n, total_score(s.wer / n, s.cer / n, s.sim / n)});
  }
  std::stable_sort(out.begin(), out.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
    return a.mean.total < b.mean.total;
  });
  return out;
}

}  // namespace mklvc
