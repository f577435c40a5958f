#pragma once

// Speech regions, fixed-window subsegmentation and assembly of
// speaker-attributed intervals. Times are integer milliseconds internally.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ocdgalp/error.hpp"
#include "ocdgalp/lpa.hpp"

namespace ocdgalp {

using TimeMs = std::int64_t;

inline TimeMs to_ms(double seconds) { return static_cast<TimeMs>(std::llround(seconds * 1000.0)); }
inline double to_seconds(TimeMs ms) { return static_cast<double>(ms) / 1000.0; }

struct TimeSpan {
  TimeMs start = 0;
  TimeMs end = 0;

  TimeMs duration() const { return end - start; }
  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

// Per recording, sorted non-overlapping speech spans.
class SpeechRegions {
 public:
  SpeechRegions() = default;

  void add(const std::string& recording, TimeSpan span) {
    if (span.start < 0 || span.start >= span.end)
      throw DataError("invalid speech region [" + std::to_string(span.start) + ", " +
                      std::to_string(span.end) + "] ms in " + recording);
    auto& list = regions_[recording];
    if (!list.empty() && span.start < list.back().end)
      throw DataError("speech regions of " + recording + " must be sorted and non-overlapping");
    list.push_back(span);
  }

  const std::map<std::string, std::vector<TimeSpan>>& recordings() const { return regions_; }
  bool empty() const { return regions_.empty(); }

  TimeMs total(const std::string& recording) const {
    TimeMs sum = 0;
    auto it = regions_.find(recording);
    if (it != regions_.end())
      for (const auto& s : it->second) sum += s.duration();
    return sum;
  }

  friend bool operator==(const SpeechRegions&, const SpeechRegions&) = default;

 private:
  std::map<std::string, std::vector<TimeSpan>> regions_;
};

struct Segment {
  std::string recording;
  TimeSpan span;
  std::size_t node = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

using SegmentTable = std::vector<Segment>;

// Tiles each region with windows starting every `shift` seconds, clipped to
// the region end. A trailing window shorter than half the window length is
// merged into its predecessor.
inline SegmentTable subsegment(const SpeechRegions& regions, double window, double shift) {
  if (!(window > 0.0)) throw ConfigError("segment window must be positive");
  if (!(shift > 0.0 && shift <= window)) throw ConfigError("segment shift must lie in (0, window]");
  const TimeMs w = to_ms(window);
  const TimeMs s = to_ms(shift);
  if (w <= 0 || s <= 0) throw ConfigError("segment window and shift must be at least 1 ms");

  SegmentTable table;
  for (const auto& [rec, spans] : regions.recordings()) {
    for (const TimeSpan& region : spans) {
      const std::size_t first = table.size();
      for (TimeMs start = region.start;; start += s) {
        const TimeMs end = std::min(start + w, region.end);
        if (table.size() > first && 2 * (end - start) < w) {
          table.back().span.end = region.end;
          break;
        }
        table.push_back({rec, {start, end}, table.size()});
        if (end == region.end) break;
      }
    }
  }
  return table;
}

// The part of each segment it is responsible for: overlapping neighbours
// split their shared stretch at its midpoint, so owned spans tile the speech
// exactly.
inline std::vector<TimeSpan> owned_spans(const SegmentTable& segments) {
  std::vector<TimeSpan> owned;
  owned.reserve(segments.size());
  for (const auto& seg : segments) owned.push_back(seg.span);
  for (std::size_t k = 1; k < segments.size(); ++k) {
    const Segment& prev = segments[k - 1];
    const Segment& cur = segments[k];
    if (prev.recording != cur.recording || cur.span.start >= prev.span.end) continue;
    const TimeMs mid = (cur.span.start + prev.span.end) / 2;
    owned[k - 1].end = std::max(owned[k - 1].start, mid);
    owned[k].start = std::min(owned[k].end, mid);
  }
  return owned;
}

struct SpeakerTurn {
  std::string speaker;
  TimeSpan span;

  friend bool operator==(const SpeakerTurn&, const SpeakerTurn&) = default;
};

// Per recording, speaker turns sorted by (start, speaker). Turns of distinct
// speakers may overlap; turns of one speaker never do.
using DiarizationHypothesis = std::map<std::string, std::vector<SpeakerTurn>>;

// Merges overlapping or abutting spans of each speaker.
inline std::vector<SpeakerTurn> merge_turns(std::vector<SpeakerTurn> turns) {
  std::sort(turns.begin(), turns.end(), [](const SpeakerTurn& a, const SpeakerTurn& b) {
    if (a.speaker != b.speaker) return a.speaker < b.speaker;
    return a.span.start < b.span.start;
  });
  std::vector<SpeakerTurn> merged;
  for (const auto& t : turns) {
    if (t.span.duration() <= 0) continue;
    if (!merged.empty() && merged.back().speaker == t.speaker &&
        t.span.start <= merged.back().span.end)
      merged.back().span.end = std::max(merged.back().span.end, t.span.end);
    else
      merged.push_back(t);
  }
  std::sort(merged.begin(), merged.end(), [](const SpeakerTurn& a, const SpeakerTurn& b) {
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.speaker < b.speaker;
  });
  return merged;
}

inline std::string speaker_name(CommunityId community) {
  return "spk" + std::to_string(community);
}

// Maps communities to speakers. `segments` are the nodes of `partition`, in
// node order; each owned span is attributed to every community in the node's
// label set (or only the dominant one when emit_overlap is false).
inline DiarizationHypothesis assemble_hypothesis(const SegmentTable& segments,
                                                 const CommunityPartition& partition,
                                                 bool emit_overlap = true) {
  if (partition.labels.size() < segments.size())
    throw DataError("partition covers " + std::to_string(partition.labels.size()) +
                    " nodes but there are " + std::to_string(segments.size()) + " segments");
  const std::vector<TimeSpan> owned = owned_spans(segments);
  std::map<std::string, std::vector<SpeakerTurn>> raw;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const LabelSet& ls = partition.labels[k];
    if (ls.entries.empty())
      throw DataError("node " + std::to_string(k) + " has no community label");
    auto& out = raw[segments[k].recording];
    if (emit_overlap) {
      for (const Label& l : ls.entries) out.push_back({speaker_name(l.community), owned[k]});
    } else {
      out.push_back({speaker_name(ls.dominant), owned[k]});
    }
  }
  DiarizationHypothesis hyp;
  for (auto& [rec, turns] : raw) hyp[rec] = merge_turns(std::move(turns));
  return hyp;
}

}  // namespace ocdgalp
