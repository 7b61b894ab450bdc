#include "daedra/labels.hpp"

#include <bit>
#include <stdexcept>

namespace daedra {

ClassId::ClassId(int value) : value_(value) {
  if (value < 0 || value >= kNumClasses) {
    throw std::out_of_range("class id out of range [0,7]: " +
                            std::to_string(value));
  }
}

int EventSet::size() const { return std::popcount(mask_); }

ClassId encode_class(const OutcomeSet& o) {
  return ClassId((o.er ? 1 : 0) | (o.hospitalised ? 2 : 0) | (o.died ? 4 : 0));
}

OutcomeSet decode_class(ClassId c) {
  const int v = c.value();
  return OutcomeSet{(v & 1) != 0, (v & 2) != 0, (v & 4) != 0};
}

EventSet events_of(ClassId c) {
  return EventSet(static_cast<std::uint8_t>(c.value()));
}

std::string_view event_name(EventKind e) {
  switch (e) {
    case EventKind::kEr:
      return "ER";
    case EventKind::kHospitalised:
      return "HOSP";
    case EventKind::kDeath:
      return "DEATH";
  }
  return "?";
}

std::string describe(ClassId c) {
  const EventSet events = events_of(c);
  if (events.empty()) return "none";
  std::string out;
  for (EventKind e : kAllEvents) {
    if (!events.contains(e)) continue;
    if (!out.empty()) out += '+';
    out += event_name(e);
  }
  return out;
}

}  // namespace daedra
