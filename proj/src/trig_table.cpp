#include "qpscan/trig_table.hpp"

#include <cmath>

#include "qpscan/error.hpp"

namespace qpscan {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.1415926535897932384626433832795;
}  // namespace

TrigTable::TrigTable(std::vector<double> x, double f0, double df, int reseed)
    : x_(std::move(x)), f0_(f0), df_(df), reseed_(reseed) {
  if (reseed_ < 1) raise(ErrorKind::config, "trig reseed interval must be >= 1");
  const std::size_t n = x_.size();
  s_.resize(n);
  c_.resize(n);
  alpha_.resize(n);
  beta_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double half = std::sin(kPi * df_ * x_[k]);
    alpha_[k] = 2.0 * half * half;  // = 1 - cos(2*pi*df*x)
    beta_[k] = std::sin(kTwoPi * df_ * x_[k]);
  }
  fill_exact(0);
}

void TrigTable::fill_exact(std::int64_t node) {
  const double f = f0_ + static_cast<double>(node) * df_;
  for (std::size_t k = 0; k < x_.size(); ++k) {
    const double ph = kTwoPi * f * x_[k];
    s_[k] = std::sin(ph);
    c_[k] = std::cos(ph);
  }
  node_ = node;
}

void TrigTable::recur_step() {
  for (std::size_t k = 0; k < x_.size(); ++k) {
    const double s = s_[k], c = c_[k];
    s_[k] = s - (alpha_[k] * s - beta_[k] * c);
    c_[k] = c - (alpha_[k] * c + beta_[k] * s);
  }
  ++node_;
}

void TrigTable::step() {
  const std::int64_t next = node_ + 1;
  if (next % reseed_ == 0)
    fill_exact(next);
  else
    recur_step();
}

void TrigTable::move_to(std::int64_t node) {
  if (node == node_) return;
  if (node == node_ + 1) {
    step();
    return;
  }
  const std::int64_t block = (node / reseed_) * reseed_;
  fill_exact(block);
  while (node_ < node) recur_step();
}

}  // namespace qpscan
