#include "sellf/common.h"

#include <cmath>

namespace sellf {

std::string_view ToString(FairnessNotion notion) {
  switch (notion) {
    case FairnessNotion::kQualificationParity:
      return "qualification";
    case FairnessNotion::kAccuracyParity:
      return "accuracy";
    case FairnessNotion::kEqualityOfOpportunity:
      return "opportunity";
  }
  return "unknown";
}

FairnessNotion ParseFairnessNotion(std::string_view text) {
  if (text == "qualification" || text == "qualification_parity") {
    return FairnessNotion::kQualificationParity;
  }
  if (text == "accuracy" || text == "accuracy_parity") {
    return FairnessNotion::kAccuracyParity;
  }
  if (text == "opportunity" || text == "equality_of_opportunity" ||
      text == "eo") {
    return FairnessNotion::kEqualityOfOpportunity;
  }
  throw ConfigError("unknown fairness notion '" + std::string(text) + "'");
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double UniformUnit(Rng& rng) {
  // 53 random bits -> [0, 1); one engine call per draw.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace sellf
