#pragma once

#include <vector>

namespace m6cast::proj {

/// Euclidean projection onto {x >= 0, sum(x) <= cap}, cap > 0.
///
/// Nonnegative clamp first; if the clamped point still exceeds the cap, the
/// sum constraint is active and the problem reduces to the simplex case,
/// solved by the sorting-based water-filling of Held/Duchi. The clamp is
/// exact here: any coordinate negative in the input is zero in the solution
/// whenever the shared threshold is nonnegative, which it is once the cap
/// binds. O(n log n).
std::vector<double> project_nonneg_capped_sum(std::vector<double> x, double cap);

/// Euclidean projection onto the simplex {x >= 0, sum(x) = total}, total > 0.
/// Sorting-based exact algorithm, O(n log n).
std::vector<double> project_simplex(std::vector<double> x, double total = 1.0);

}  // namespace m6cast::proj
