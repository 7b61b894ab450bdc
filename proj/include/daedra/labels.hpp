#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace daedra {

/// The three regulatory outcomes tracked per report.
struct OutcomeSet {
  bool er = false;
  bool hospitalised = false;
  bool died = false;

  friend bool operator==(const OutcomeSet&, const OutcomeSet&) = default;
};

inline constexpr int kNumClasses = 8;

/// Powerset class of an OutcomeSet. Bit layout: ER=1, HOSP=2, DEATH=4.
class ClassId {
 public:
  constexpr ClassId() = default;
  /// Throws std::out_of_range unless 0 <= value <= 7.
  explicit ClassId(int value);

  constexpr int value() const { return value_; }

  friend constexpr bool operator==(ClassId, ClassId) = default;
  friend constexpr auto operator<=>(ClassId, ClassId) = default;

 private:
  int value_ = 0;
};

enum class EventKind : std::uint8_t { kEr = 0, kHospitalised = 1, kDeath = 2 };

inline constexpr std::array<EventKind, 3> kAllEvents = {
    EventKind::kEr, EventKind::kHospitalised, EventKind::kDeath};

/// Set of events, stored as the same bitmask ClassId uses.
class EventSet {
 public:
  constexpr EventSet() = default;
  constexpr explicit EventSet(std::uint8_t mask) : mask_(mask & 0x7u) {}

  constexpr bool contains(EventKind e) const {
    return (mask_ >> static_cast<int>(e)) & 1u;
  }
  constexpr bool empty() const { return mask_ == 0; }
  int size() const;
  constexpr std::uint8_t mask() const { return mask_; }

  constexpr EventSet intersect(EventSet other) const {
    return EventSet(static_cast<std::uint8_t>(mask_ & other.mask_));
  }

  friend constexpr bool operator==(EventSet, EventSet) = default;

 private:
  std::uint8_t mask_ = 0;
};

ClassId encode_class(const OutcomeSet& o);
OutcomeSet decode_class(ClassId c);
EventSet events_of(ClassId c);

std::string_view event_name(EventKind e);
/// Human-readable outcome set, e.g. "ER+HOSP" or "none".
std::string describe(ClassId c);

}  // namespace daedra
