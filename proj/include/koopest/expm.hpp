#pragma once

#include "koopest/types.hpp"

namespace koopest {

/// Matrix exponential by scaling and squaring with diagonal Padé approximants
/// of degree 3, 5, 7, 9 or 13, chosen from the 1-norm (Higham, 2005).
///
/// Throws NonFiniteResult when the input or the result contains inf/NaN.
Matrix expm(const Matrix& a);

}  // namespace koopest
