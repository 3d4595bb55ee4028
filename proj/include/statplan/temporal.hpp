#pragma once

// Proper time intervals over integer ticks and the thirteen pairwise
// interval relations between them.

#include <cstdint>
#include <string>
#include <string_view>

#include "statplan/error.hpp"

namespace statplan {

using Tick = std::uint64_t;

struct TimeInterval {
  Tick start = 0;
  Tick end = 1;

  TimeInterval() = default;
  TimeInterval(Tick s, Tick e) : start(s), end(e) {
    if (!(s < e)) throw DomainError("time interval requires start < end");
  }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

enum class AllenRelation {
  Before,
  Meets,
  Overlaps,
  Starts,
  During,
  Finishes,
  Equals,
  After,         // inverse of Before
  MetBy,         // inverse of Meets
  OverlappedBy,  // inverse of Overlaps
  StartedBy,     // inverse of Starts
  Contains,      // inverse of During
  FinishedBy,    // inverse of Finishes
};

inline std::string_view to_string(AllenRelation r) {
  switch (r) {
    case AllenRelation::Before: return "Before";
    case AllenRelation::Meets: return "Meets";
    case AllenRelation::Overlaps: return "Overlaps";
    case AllenRelation::Starts: return "Starts";
    case AllenRelation::During: return "During";
    case AllenRelation::Finishes: return "Finishes";
    case AllenRelation::Equals: return "Equals";
    case AllenRelation::After: return "After";
    case AllenRelation::MetBy: return "MetBy";
    case AllenRelation::OverlappedBy: return "OverlappedBy";
    case AllenRelation::StartedBy: return "StartedBy";
    case AllenRelation::Contains: return "Contains";
    case AllenRelation::FinishedBy: return "FinishedBy";
  }
  return "?";
}

inline AllenRelation inverse(AllenRelation r) {
  switch (r) {
    case AllenRelation::Before: return AllenRelation::After;
    case AllenRelation::Meets: return AllenRelation::MetBy;
    case AllenRelation::Overlaps: return AllenRelation::OverlappedBy;
    case AllenRelation::Starts: return AllenRelation::StartedBy;
    case AllenRelation::During: return AllenRelation::Contains;
    case AllenRelation::Finishes: return AllenRelation::FinishedBy;
    case AllenRelation::Equals: return AllenRelation::Equals;
    case AllenRelation::After: return AllenRelation::Before;
    case AllenRelation::MetBy: return AllenRelation::Meets;
    case AllenRelation::OverlappedBy: return AllenRelation::Overlaps;
    case AllenRelation::StartedBy: return AllenRelation::Starts;
    case AllenRelation::Contains: return AllenRelation::During;
    case AllenRelation::FinishedBy: return AllenRelation::Finishes;
  }
  return r;
}

/// The unique relation r with `a r b`, decided from endpoint comparisons.
inline AllenRelation relate(const TimeInterval& a, const TimeInterval& b) {
  if (a.end < b.start) return AllenRelation::Before;
  if (a.end == b.start) return AllenRelation::Meets;
  if (b.end < a.start) return AllenRelation::After;
  if (b.end == a.start) return AllenRelation::MetBy;

  // The intervals share interior points from here on.
  if (a.start == b.start) {
    if (a.end == b.end) return AllenRelation::Equals;
    return a.end < b.end ? AllenRelation::Starts : AllenRelation::StartedBy;
  }
  if (a.end == b.end) return a.start > b.start ? AllenRelation::Finishes : AllenRelation::FinishedBy;
  if (a.start < b.start) return a.end < b.end ? AllenRelation::Overlaps : AllenRelation::Contains;
  return a.end < b.end ? AllenRelation::During : AllenRelation::OverlappedBy;
}

// State interval begins with the event: Starts or Equals.
inline bool holds_at_start(const TimeInterval& state_interval, const TimeInterval& event_time) {
  const auto r = relate(state_interval, event_time);
  return r == AllenRelation::Starts || r == AllenRelation::Equals;
}

// State interval ends with the event: Finishes or Equals.
inline bool holds_at_end(const TimeInterval& state_interval, const TimeInterval& event_time) {
  const auto r = relate(state_interval, event_time);
  return r == AllenRelation::Finishes || r == AllenRelation::Equals;
}

}  // namespace statplan
