#pragma once

#include <cstdint>
#include <string>

namespace timearena {

// Exact rational, used for progress scores and metrics so that invariants
// like "the contributions sum to exactly 100" stay testable without
// floating-point slack. Values stay tiny (minutes and percentages), so
// int64 never gets close to overflow.
class Fraction {
 public:
  constexpr Fraction() = default;
  constexpr Fraction(std::int64_t value) : num_(value) {}  // NOLINT(google-explicit-constructor)
  Fraction(std::int64_t num, std::int64_t den);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  Fraction operator+(const Fraction& other) const;
  Fraction operator-(const Fraction& other) const;
  Fraction operator*(const Fraction& other) const;
  Fraction operator/(const Fraction& other) const;

  bool operator==(const Fraction& other) const { return num_ == other.num_ && den_ == other.den_; }
  bool operator!=(const Fraction& other) const { return !(*this == other); }
  bool operator<(const Fraction& other) const;
  bool operator<=(const Fraction& other) const { return *this < other || *this == other; }
  bool operator>(const Fraction& other) const { return other < *this; }
  bool operator>=(const Fraction& other) const { return other <= *this; }

 private:
  void normalize();

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace timearena
