#include "timearena/fraction.hpp"

#include <numeric>
#include <stdexcept>

namespace timearena {

Fraction::Fraction(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
  if (den_ == 0) throw std::invalid_argument("fraction with zero denominator");
  normalize();
}

void Fraction::normalize() {
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
  if (num_ == 0) den_ = 1;
}

std::string Fraction::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Fraction Fraction::operator+(const Fraction& other) const {
  return {num_ * other.den_ + other.num_ * den_, den_ * other.den_};
}

Fraction Fraction::operator-(const Fraction& other) const {
  return {num_ * other.den_ - other.num_ * den_, den_ * other.den_};
}

Fraction Fraction::operator*(const Fraction& other) const {
  return {num_ * other.num_, den_ * other.den_};
}

Fraction Fraction::operator/(const Fraction& other) const {
  if (other.num_ == 0) throw std::invalid_argument("fraction division by zero");
  return {num_ * other.den_, den_ * other.num_};
}

bool Fraction::operator<(const Fraction& other) const {
  return num_ * other.den_ < other.num_ * den_;
}

}  // namespace timearena
