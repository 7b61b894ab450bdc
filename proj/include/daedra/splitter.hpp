#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "daedra/corpus.hpp"

namespace daedra {

/// 20/40/60/80th percentile ages. A record with age a falls in the first band
/// k with a <= cuts[k], otherwise in Q5.
struct QuintileBoundaries {
  std::array<double, 4> cuts{};

  /// Degenerate boundaries that put every known age in Q1.
  static QuintileBoundaries single_band();
  friend bool operator==(const QuintileBoundaries&, const QuintileBoundaries&) = default;
};

class InsufficientAgesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nearest-rank percentiles over the sorted ages. Throws InsufficientAgesError
/// with fewer than five ages; callers fall back to single_band().
QuintileBoundaries age_quintiles(std::span<const double> ages);
/// Quintiles over the reports' non-missing ages, single_band() if too few.
QuintileBoundaries age_quintiles_or_single_band(const std::vector<Report>& reports);

enum class AgeBand : std::uint8_t { kQ1, kQ2, kQ3, kQ4, kQ5, kUnknown };

struct StratumKey {
  Sex sex = Sex::kU;
  AgeBand age_band = AgeBand::kUnknown;

  /// Stable text form, e.g. "F|Q3" or "U|UNKNOWN". Also the PRNG stream key.
  std::string to_string() const;
  friend auto operator<=>(const StratumKey&, const StratumKey&) = default;
};

StratumKey stratum_of(const Report& r, const QuintileBoundaries& q);

enum class Partition : std::uint8_t { kTrain = 0, kTest = 1, kValidation = 2 };
inline constexpr std::array<Partition, 3> kAllPartitions = {
    Partition::kTrain, Partition::kTest, Partition::kValidation};
std::string_view to_string(Partition p);

struct Ratios {
  double train = 0.70;
  double test = 0.15;
  double validation = 0.15;

  std::array<double, 3> as_array() const { return {train, test, validation}; }
};

/// Hamilton (largest-remainder) apportionment of n units over the given
/// shares. Equal remainders go to the earlier share.
std::vector<std::size_t> apportion(std::size_t n, std::span<const double> shares);

struct SplitEntry {
  Partition partition = Partition::kTrain;
  StratumKey stratum;
};

struct SplitAssignment {
  std::map<std::string, SplitEntry> entries;
  std::uint64_t seed = 0;
  Ratios ratios;
  QuintileBoundaries quintiles;
  std::string algorithm;

  std::size_t count(Partition p) const;
  /// Ids in the partition, ascending.
  std::vector<std::string> ids_in(Partition p) const;
  /// stratum -> per-partition counts (indexed by Partition).
  std::map<StratumKey, std::array<std::size_t, 3>> stratum_counts() const;
};

/// Within each stratum: sort ids, shuffle with a SplitMix64 stream seeded
/// from (seed, stratum key), then cut by apportion(stratum size, ratios).
/// Throws std::invalid_argument for invalid ratios or duplicate ids.
SplitAssignment stratified_split(const std::vector<Report>& reports,
                                 const Ratios& ratios, std::uint64_t seed,
                                 const QuintileBoundaries& quintiles);
/// Computes quintiles over the whole input first.
SplitAssignment stratified_split(const std::vector<Report>& reports,
                                 const Ratios& ratios, std::uint64_t seed);

/// Draws round(fraction * |partition|) ids, apportioned over strata by
/// largest remainder, so each stratum contributes floor or ceil of its quota.
std::set<std::string> stratified_subsample(const SplitAssignment& assignment,
                                           Partition partition, double fraction,
                                           std::uint64_t seed);

}  // namespace daedra
