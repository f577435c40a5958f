#pragma once

// RTTM reading/writing and diarization error rate scoring with optimal
// one-to-one speaker mapping.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ocdgalp/error.hpp"
#include "ocdgalp/timeline.hpp"

namespace ocdgalp {

struct RttmRecord {
  std::string recording;
  double start = 0.0;     // seconds
  double duration = 0.0;  // seconds
  std::string speaker;

  friend bool operator==(const RttmRecord&, const RttmRecord&) = default;
};

inline std::string write_rttm(const std::vector<RttmRecord>& records) {
  std::string out;
  char buf[64];
  for (const auto& r : records) {
    out += "SPEAKER ";
    out += r.recording;
    std::snprintf(buf, sizeof buf, " 1 %.3f %.3f <NA> <NA> ", r.start, r.duration);
    out += buf;
    out += r.speaker;
    out += " <NA> <NA>\n";
  }
  return out;
}

// Reads SPEAKER lines; blank lines and other record types are skipped.
inline std::vector<RttmRecord> parse_rttm(const std::string& text) {
  std::vector<RttmRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0] != "SPEAKER") continue;
    auto fail = [line_no](const std::string& why) {
      return DataError("RTTM line " + std::to_string(line_no) + ": " + why);
    };
    if (tok.size() < 8) throw fail("expected at least 8 fields");
    RttmRecord r;
    r.recording = tok[1];
    try {
      std::size_t used = 0;
      r.start = std::stod(tok[3], &used);
      if (used != tok[3].size()) throw fail("bad start time");
      r.duration = std::stod(tok[4], &used);
      if (used != tok[4].size()) throw fail("bad duration");
    } catch (const std::logic_error&) {
      throw fail("non-numeric time field");
    }
    if (!std::isfinite(r.start) || r.start < 0.0) throw fail("negative start time");
    if (!std::isfinite(r.duration) || r.duration <= 0.0) throw fail("non-positive duration");
    r.speaker = tok[7];
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<RttmRecord> hypothesis_to_rttm(const DiarizationHypothesis& hyp) {
  std::vector<RttmRecord> out;
  for (const auto& [rec, turns] : hyp)
    for (const auto& t : turns)
      out.push_back({rec, to_seconds(t.span.start), to_seconds(t.span.duration()), t.speaker});
  return out;
}

struct DerReport {
  double missed = 0.0;       // seconds
  double false_alarm = 0.0;  // seconds
  double confusion = 0.0;    // seconds
  double total_speech = 0.0; // seconds
  double der = 0.0;          // percent
};

// Minimum-cost assignment of rows to columns (rows <= cols). Returns, for each
// row, its column.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost[0].size();
  if (m < n) throw DimensionError("hungarian: more rows than columns");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

namespace detail {

using SpeakerSpans = std::map<std::string, std::vector<TimeSpan>>;

inline SpeakerSpans collect_spans(const std::vector<RttmRecord>& records,
                                  const std::string& recording) {
  std::vector<SpeakerTurn> turns;
  for (const auto& r : records)
    if (r.recording == recording)
      turns.push_back({r.speaker, {to_ms(r.start), to_ms(r.start + r.duration)}});
  SpeakerSpans out;
  for (const auto& t : merge_turns(std::move(turns))) out[t.speaker].push_back(t.span);
  for (auto& [spk, spans] : out)
    std::sort(spans.begin(), spans.end(),
              [](const TimeSpan& a, const TimeSpan& b) { return a.start < b.start; });
  return out;
}

inline std::vector<TimeSpan> subtract_spans(const std::vector<TimeSpan>& base,
                                            std::vector<TimeSpan> holes) {
  std::sort(holes.begin(), holes.end(),
            [](const TimeSpan& a, const TimeSpan& b) { return a.start < b.start; });
  std::vector<TimeSpan> out;
  for (TimeSpan span : base) {
    TimeMs cursor = span.start;
    for (const auto& h : holes) {
      if (h.end <= cursor || h.start >= span.end) continue;
      if (h.start > cursor) out.push_back({cursor, h.start});
      cursor = std::max(cursor, h.end);
    }
    if (cursor < span.end) out.push_back({cursor, span.end});
  }
  return out;
}

// Elementary pieces of the scored region with the active speakers of each side.
struct Piece {
  TimeMs duration;
  std::vector<std::size_t> ref;
  std::vector<std::size_t> hyp;
};

inline std::vector<Piece> elementary_pieces(const std::vector<TimeSpan>& scored,
                                            const std::vector<std::vector<TimeSpan>>& ref,
                                            const std::vector<std::vector<TimeSpan>>& hyp) {
  std::set<TimeMs> cuts;
  for (const auto& s : scored) {
    cuts.insert(s.start);
    cuts.insert(s.end);
  }
  for (const auto* side : {&ref, &hyp})
    for (const auto& spans : *side)
      for (const auto& s : spans) {
        cuts.insert(s.start);
        cuts.insert(s.end);
      }
  std::vector<TimeMs> points(cuts.begin(), cuts.end());

  auto active = [](const std::vector<std::vector<TimeSpan>>& side, std::vector<std::size_t>& idx,
                   TimeMs a, TimeMs b) {
    std::vector<std::size_t> on;
    for (std::size_t s = 0; s < side.size(); ++s) {
      const auto& spans = side[s];
      while (idx[s] < spans.size() && spans[idx[s]].end <= a) ++idx[s];
      if (idx[s] < spans.size() && spans[idx[s]].start <= a && spans[idx[s]].end >= b)
        on.push_back(s);
    }
    return on;
  };

  std::vector<Piece> pieces;
  std::vector<std::size_t> ref_idx(ref.size(), 0), hyp_idx(hyp.size(), 0);
  std::size_t zone = 0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const TimeMs a = points[k], b = points[k + 1];
    while (zone < scored.size() && scored[zone].end <= a) ++zone;
    const bool in_scope = zone < scored.size() && scored[zone].start <= a && scored[zone].end >= b;
    auto r = active(ref, ref_idx, a, b);
    auto h = active(hyp, hyp_idx, a, b);
    if (in_scope) pieces.push_back({b - a, std::move(r), std::move(h)});
  }
  return pieces;
}

}  // namespace detail

struct DerOptions {
  double collar = 0.0;  // seconds excluded on each side of reference boundaries
  bool score_overlap = true;
  // Optional scoring regions per recording; absent means whole recordings.
  std::optional<std::map<std::string, std::vector<TimeSpan>>> uem;
};

// Diarization error rate summed over all reference recordings.
inline DerReport compute_der(const std::vector<RttmRecord>& reference,
                             const std::vector<RttmRecord>& hypothesis,
                             const DerOptions& options = {}) {
  if (options.collar < 0.0) throw ConfigError("collar must be non-negative");
  std::set<std::string> recordings;
  for (const auto& r : reference) recordings.insert(r.recording);
  for (const auto& h : hypothesis)
    if (!recordings.count(h.recording))
      throw DataError("hypothesis recording '" + h.recording + "' is absent from the reference");

  TimeMs missed = 0, false_alarm = 0, confusion = 0, total = 0;
  const TimeMs collar = to_ms(options.collar);
  for (const std::string& rec : recordings) {
    const auto ref_spans = detail::collect_spans(reference, rec);
    const auto hyp_spans = detail::collect_spans(hypothesis, rec);
    std::vector<std::vector<TimeSpan>> ref, hyp;
    for (const auto& [spk, spans] : ref_spans) ref.push_back(spans);
    for (const auto& [spk, spans] : hyp_spans) hyp.push_back(spans);

    std::vector<TimeSpan> scored;
    if (options.uem) {
      auto it = options.uem->find(rec);
      if (it != options.uem->end()) scored = it->second;
    } else {
      TimeMs last = 0;
      for (const auto* side : {&ref, &hyp})
        for (const auto& spans : *side)
          for (const auto& s : spans) last = std::max(last, s.end);
      scored.push_back({0, last});
    }
    if (collar > 0) {
      std::vector<TimeSpan> holes;
      for (const auto& spans : ref)
        for (const auto& s : spans) {
          holes.push_back({s.start - collar, s.start + collar});
          holes.push_back({s.end - collar, s.end + collar});
        }
      scored = detail::subtract_spans(scored, holes);
    }

    auto pieces = detail::elementary_pieces(scored, ref, hyp);
    if (!options.score_overlap)
      std::erase_if(pieces, [](const detail::Piece& p) { return p.ref.size() > 1; });

    // Optimal mapping maximises total co-attributed time.
    std::vector<std::vector<double>> overlap(ref.size(), std::vector<double>(hyp.size(), 0.0));
    for (const auto& p : pieces)
      for (std::size_t r : p.ref)
        for (std::size_t h : p.hyp) overlap[r][h] += static_cast<double>(p.duration);
    std::vector<long> hyp_to_ref(hyp.size(), -1);
    if (!ref.empty() && !hyp.empty()) {
      const bool transpose = ref.size() > hyp.size();
      const std::size_t rows = transpose ? hyp.size() : ref.size();
      const std::size_t cols = transpose ? ref.size() : hyp.size();
      std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          cost[i][j] = -(transpose ? overlap[j][i] : overlap[i][j]);
      const auto assign = hungarian(cost);
      for (std::size_t i = 0; i < rows; ++i) {
        if (transpose)
          hyp_to_ref[i] = static_cast<long>(assign[i]);
        else
          hyp_to_ref[assign[i]] = static_cast<long>(i);
      }
    }

    for (const auto& p : pieces) {
      const TimeMs n_ref = static_cast<TimeMs>(p.ref.size());
      const TimeMs n_hyp = static_cast<TimeMs>(p.hyp.size());
      TimeMs correct = 0;
      for (std::size_t h : p.hyp)
        if (hyp_to_ref[h] >= 0 &&
            std::find(p.ref.begin(), p.ref.end(), static_cast<std::size_t>(hyp_to_ref[h])) !=
                p.ref.end())
          ++correct;
      total += n_ref * p.duration;
      missed += std::max<TimeMs>(0, n_ref - n_hyp) * p.duration;
      false_alarm += std::max<TimeMs>(0, n_hyp - n_ref) * p.duration;
      confusion += (std::min(n_ref, n_hyp) - correct) * p.duration;
    }
  }
  if (total == 0) throw DataError("reference contains no scored speech; DER is undefined");
  DerReport report;
  report.missed = to_seconds(missed);
  report.false_alarm = to_seconds(false_alarm);
  report.confusion = to_seconds(confusion);
  report.total_speech = to_seconds(total);
  report.der = 100.0 * static_cast<double>(missed + false_alarm + confusion) /
               static_cast<double>(total);
  return report;
}

// Aligned human-readable table followed by a `key = value` block.
inline std::string format_der_report(const DerReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-14s %12s\n"
                "%-14s %12.3f\n%-14s %12.3f\n%-14s %12.3f\n%-14s %12.3f\n%-14s %12.3f\n"
                "\n"
                "missed = %.3f\nfalse_alarm = %.3f\nconfusion = %.3f\ntotal_speech = %.3f\n"
                "der = %.3f\n",
                "component", "value", "missed_s", r.missed, "false_alarm_s", r.false_alarm,
                "confusion_s", r.confusion, "total_speech_s", r.total_speech, "der_percent",
                r.der, r.missed, r.false_alarm, r.confusion, r.total_speech, r.der);
  return buf;
}

}  // namespace ocdgalp
