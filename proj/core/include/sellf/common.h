#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sellf {

// Group 0 is the underprivileged group in binary environments.
using GroupId = int;

// Environment-specific feature encoding (one-hot blocks, indicators, scores).
using Features = std::vector<double>;

// All randomness in a run flows from generators of this type.
using Rng = std::mt19937_64;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an estimator's conditioning cell is empty.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FairnessNotion {
  kQualificationParity,
  kAccuracyParity,
  kEqualityOfOpportunity,
};

std::string_view ToString(FairnessNotion notion);
FairnessNotion ParseFairnessNotion(std::string_view text);

// Derives independent, reproducible sub-seeds from one run seed.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

// Uniform draw in [0, 1) with a fixed number of engine calls.
double UniformUnit(Rng& rng);

inline int Bernoulli(double p, Rng& rng) { return UniformUnit(rng) < p ? 1 : 0; }

}  // namespace sellf
