#pragma once

#include <cstddef>
#include <vector>

namespace mmsched {

/// Dense LP in canonical form: maximize c'x subject to A x <= b, x >= 0, with b >= 0.
///
/// The all-slack basis is feasible because b >= 0, so no phase one is needed.
/// Pivoting follows Bland's rule (lowest entering index, lowest leaving basic
/// index on ratio ties), which rules out cycling on degenerate vertices.
struct DenseLp {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major rows x cols
  std::vector<double> b;
  std::vector<double> c;

  DenseLp(std::size_t rows_, std::size_t cols_)
      : rows(rows_), cols(cols_), a(rows_ * cols_, 0.0), b(rows_, 0.0), c(cols_, 0.0) {}

  double& at(std::size_t r, std::size_t col) { return a[r * cols + col]; }
  double at(std::size_t r, std::size_t col) const { return a[r * cols + col]; }
};

enum class SimplexStatus { optimal, unbounded, iteration_limit };

struct SimplexResult {
  SimplexStatus status = SimplexStatus::optimal;
  double value = 0.0;
  std::vector<double> x;
  std::vector<double> duals;  // one shadow price per row, >= 0 at an optimum
  std::size_t pivots = 0;
};

SimplexResult simplex_maximize(const DenseLp& lp, double eps = 1e-12,
                               std::size_t max_pivots = 100000);

}  // namespace mmsched
