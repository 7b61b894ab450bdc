#include "daedra/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "daedra/prng.hpp"

namespace daedra {

QuintileBoundaries QuintileBoundaries::single_band() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return QuintileBoundaries{{inf, inf, inf, inf}};
}

QuintileBoundaries age_quintiles(std::span<const double> ages) {
  if (ages.size() < 5) {
    throw InsufficientAgesError(
        "need at least 5 known ages for quintiles, got " + std::to_string(ages.size()) +
        "; use a single age band instead");
  }
  std::vector<double> sorted(ages.begin(), ages.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  QuintileBoundaries q;
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t percent = 20 * (k + 1);
    // nearest rank: ceil(p/100 * n), 1-based
    const std::size_t rank = (percent * n + 99) / 100;
    q.cuts[k] = sorted[std::max<std::size_t>(rank, 1) - 1];
  }
  return q;
}

QuintileBoundaries age_quintiles_or_single_band(const std::vector<Report>& reports) {
  std::vector<double> ages;
  ages.reserve(reports.size());
  for (const Report& r : reports) {
    if (r.age_yrs) ages.push_back(*r.age_yrs);
  }
  if (ages.size() < 5) return QuintileBoundaries::single_band();
  return age_quintiles(ages);
}

std::string StratumKey::to_string() const {
  static constexpr std::string_view kBands[] = {"Q1", "Q2", "Q3", "Q4", "Q5", "UNKNOWN"};
  std::string out(daedra::to_string(sex));
  out += '|';
  out += kBands[static_cast<int>(age_band)];
  return out;
}

StratumKey stratum_of(const Report& r, const QuintileBoundaries& q) {
  StratumKey key{r.sex, AgeBand::kUnknown};
  if (!r.age_yrs) return key;
  key.age_band = AgeBand::kQ5;
  for (int k = 0; k < 4; ++k) {
    if (*r.age_yrs <= q.cuts[static_cast<std::size_t>(k)]) {
      key.age_band = static_cast<AgeBand>(k);
      break;
    }
  }
  return key;
}

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::kTrain:
      return "train";
    case Partition::kTest:
      return "test";
    case Partition::kValidation:
      return "validation";
  }
  return "?";
}

std::vector<std::size_t> apportion(std::size_t n, std::span<const double> shares) {
  const double total = std::accumulate(shares.begin(), shares.end(), 0.0);
  std::vector<std::size_t> seats(shares.size(), 0);
  std::vector<double> remainders(shares.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    double quota = static_cast<double>(n) * shares[i] / total;
    const double nearest = std::round(quota);
    if (std::abs(quota - nearest) < 1e-9) quota = nearest;
    const double whole = std::floor(quota);
    seats[i] = static_cast<std::size_t>(whole);
    remainders[i] = quota - whole;
    assigned += seats[i];
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % order.size()) {
    ++seats[order[k]];
    ++assigned;
  }
  return seats;
}

std::size_t SplitAssignment::count(Partition p) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [p](const auto& e) { return e.second.partition == p; }));
}

std::vector<std::string> SplitAssignment::ids_in(Partition p) const {
  std::vector<std::string> out;
  for (const auto& [id, entry] : entries) {
    if (entry.partition == p) out.push_back(id);
  }
  return out;
}

std::map<StratumKey, std::array<std::size_t, 3>> SplitAssignment::stratum_counts() const {
  std::map<StratumKey, std::array<std::size_t, 3>> out;
  for (const auto& [id, entry] : entries) {
    ++out[entry.stratum][static_cast<std::size_t>(entry.partition)];
  }
  return out;
}

namespace {

std::uint64_t stream_seed(std::uint64_t seed, const StratumKey& key, std::uint64_t domain) {
  return mix64(mix64(seed ^ domain) ^ fnv1a64(key.to_string()));
}

constexpr std::uint64_t kSplitDomain = 0;
constexpr std::uint64_t kSubsampleDomain = 0x53554253414D504CULL;  // "SUBSAMPL"

}  // namespace

SplitAssignment stratified_split(const std::vector<Report>& reports, const Ratios& ratios,
                                 std::uint64_t seed, const QuintileBoundaries& quintiles) {
  const auto shares = ratios.as_array();
  for (double r : shares) {
    if (!(r > 0.0)) throw std::invalid_argument("split ratios must be positive");
  }
  if (std::abs(shares[0] + shares[1] + shares[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }

  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  out.quintiles = quintiles;
  out.algorithm = std::string(SplitMix64::kAlgorithm);

  std::map<StratumKey, std::vector<std::string>> strata;
  for (const Report& r : reports) {
    const StratumKey key = stratum_of(r, quintiles);
    auto [it, inserted] = out.entries.emplace(r.vaers_id, SplitEntry{Partition::kTrain, key});
    if (!inserted) throw std::invalid_argument("duplicate report id: " + r.vaers_id);
    strata[key].push_back(r.vaers_id);
  }

  for (auto& [key, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    SplitMix64 rng(stream_seed(seed, key, kSplitDomain));
    shuffle(std::span<std::string>(ids), rng);
    const auto seats = apportion(ids.size(), shares);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t k = 0; k < seats[p]; ++k, ++pos) {
        out.entries.at(ids[pos]).partition = static_cast<Partition>(p);
      }
    }
  }
  return out;
}

SplitAssignment stratified_split(const std::vector<Report>& reports, const Ratios& ratios,
                                 std::uint64_t seed) {
  return stratified_split(reports, ratios, seed, age_quintiles_or_single_band(reports));
}

std::set<std::string> stratified_subsample(const SplitAssignment& assignment,
                                           Partition partition, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("subsample fraction must be in (0, 1]");
  }
  std::map<StratumKey, std::vector<std::string>> strata;
  std::size_t total = 0;
  for (const auto& [id, entry] : assignment.entries) {
    if (entry.partition != partition) continue;
    strata[entry.stratum].push_back(id);  // map order: ids already ascending
    ++total;
  }
  if (total == 0) return {};

  std::vector<double> quotas;
  quotas.reserve(strata.size());
  for (const auto& [key, ids] : strata) quotas.push_back(static_cast<double>(ids.size()));
  const auto house = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  const auto seats = apportion(house, quotas);

  std::set<std::string> out;
  std::size_t s = 0;
  for (auto& [key, ids] : strata) {
    SplitMix64 rng(stream_seed(seed, key, kSubsampleDomain));
    shuffle(std::span<std::string>(ids), rng);
    const std::size_t take = std::min(seats[s++], ids.size());
    out.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

}  // namespace daedra
