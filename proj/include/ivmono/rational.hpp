#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ivmono {

//! Exact fraction num/den with 64-bit parts, always reduced, den > 0.
//! Arithmetic throws Error(range_escape) on overflow instead of wrapping.
class Rational
{
public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  //! Parses "3", "-0.3125" or "7/16".
  static Rational parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational operator-() const { return Rational(-num_, den_); }

  friend bool operator==(const Rational& a, const Rational& b) = default;
  bool is_zero() const { return num_ == 0; }

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

//! Exact determinant by Gaussian elimination with nonzero pivots.
Rational
determinant(std::vector<std::vector<Rational>> m);

} // namespace ivmono
