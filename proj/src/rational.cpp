#include "tg/rational.hpp"

#include <cctype>

#include "tg/error.hpp"

namespace tg {

namespace {

BigInt parse_integer(std::string_view digits, std::string_view whole) {
  if (digits.empty()) throw Error(ErrorCode::InvalidArgument, "malformed rational '" + std::string(whole) + "'");
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw Error(ErrorCode::InvalidArgument,
                  "malformed rational '" + std::string(whole) + "' (expected num/den)");
    }
  }
  return BigInt(std::string(digits));
}

}  // namespace

Rational::Rational(BigInt num, BigInt den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  value_ = boost::multiprecision::cpp_rational(num, den);
}

Rational Rational::parse(std::string_view text) {
  std::string_view body = text;
  bool negative = false;
  if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  const auto slash = body.find('/');
  BigInt num = parse_integer(body.substr(0, slash), text);
  BigInt den = 1;
  if (slash != std::string_view::npos) den = parse_integer(body.substr(slash + 1), text);
  if (negative) num = -num;
  return Rational(num, den);
}

std::string Rational::to_string() const {
  const BigInt den = denominator();
  if (den == 1) return numerator().str();
  return numerator().str() + "/" + den.str();
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.value_ == 0) throw Error(ErrorCode::InvalidArgument, "division by zero");
  value_ /= o.value_;
  return *this;
}

Rational pow(const Rational& base, int exponent) {
  if (exponent < 0) {
    if (base.is_zero()) throw Error(ErrorCode::InvalidArgument, "zero to a negative power");
    return Rational(1) / pow(base, -exponent);
  }
  BigInt num = boost::multiprecision::pow(base.numerator(), static_cast<unsigned>(exponent));
  BigInt den = boost::multiprecision::pow(base.denominator(), static_cast<unsigned>(exponent));
  return Rational(num, den);
}

}  // namespace tg
