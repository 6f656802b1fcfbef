#pragma once

#include <cmath>
#include <string>

#include "frango/error.hpp"

namespace frango {

// Fractional order alpha in (0, 1]; alpha == 1 means classical calculus.
class FracOrder {
 public:
  explicit FracOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw DomainError("fractional order must lie in (0, 1], got " +
                        std::to_string(alpha));
    }
  }

  double value() const { return alpha_; }
  bool classical() const { return alpha_ == 1.0; }

  friend bool operator==(FracOrder a, FracOrder b) { return a.alpha_ == b.alpha_; }

 private:
  double alpha_;
};

}  // namespace frango
