#include "mmsched/simplex.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmsched {

SimplexResult simplex_maximize(const DenseLp& lp, double eps, std::size_t max_pivots) {
  const std::size_t m = lp.rows;
  const std::size_t n = lp.cols;
  if (lp.a.size() != m * n || lp.b.size() != m || lp.c.size() != n) {
    throw std::invalid_argument("simplex: inconsistent LP dimensions");
  }
  for (double v : lp.b) {
    if (!(v >= 0.0)) throw std::invalid_argument("simplex: right-hand side must be >= 0");
  }

  // Tableau columns: n structural, m slack, then the rhs.
  const std::size_t width = n + m + 1;
  std::vector<double> t(m * width, 0.0);
  auto cell = [&](std::size_t r, std::size_t col) -> double& { return t[r * width + col]; };
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t col = 0; col < n; ++col) cell(r, col) = lp.at(r, col);
    cell(r, n + r) = 1.0;
    cell(r, n + m) = lp.b[r];
  }
  // Reduced costs for maximization: z_j - c_j, optimal when all >= 0.
  std::vector<double> cost(n + m + 1, 0.0);
  for (std::size_t col = 0; col < n; ++col) cost[col] = -lp.c[col];

  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) basis[r] = n + r;

  SimplexResult res;
  for (;;) {
    std::size_t enter = width;
    for (std::size_t col = 0; col + 1 < width; ++col) {
      if (cost[col] < -eps) {
        enter = col;
        break;
      }
    }
    if (enter == width) break;

    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      const double coef = cell(r, enter);
      if (coef <= eps) continue;
      const double ratio = cell(r, n + m) / coef;
      if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave < m && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave == m) {
      res.status = SimplexStatus::unbounded;
      return res;
    }
    if (res.pivots++ >= max_pivots) {
      res.status = SimplexStatus::iteration_limit;
      return res;
    }

    const double pivot = cell(leave, enter);
    for (std::size_t col = 0; col < width; ++col) cell(leave, col) /= pivot;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == leave) continue;
      const double f = cell(r, enter);
      if (f == 0.0) continue;
      for (std::size_t col = 0; col < width; ++col) cell(r, col) -= f * cell(leave, col);
    }
    const double f = cost[enter];
    for (std::size_t col = 0; col < width; ++col) cost[col] -= f * cell(leave, col);
    basis[leave] = enter;
  }

  res.x.assign(n, 0.0);
  res.duals.assign(m, 0.0);
  // Recompute the final vertex and its duals from the original data; the
  // tableau drifts after many pivots on large degenerate problems.
  Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
  Eigen::VectorXd basic_cost(static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < m; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    rhs(ri) = lp.b[r];
    basic_cost(ri) = basis[r] < n ? lp.c[basis[r]] : 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      const auto qi = static_cast<Eigen::Index>(q);
      basis_matrix(qi, ri) = basis[r] < n ? lp.at(q, basis[r]) : (basis[r] - n == q ? 1.0 : 0.0);
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_matrix);
  if (m > 0 && lu.isInvertible()) {
    const Eigen::VectorXd xb = lu.solve(rhs);
    const Eigen::VectorXd y = lu.transpose().solve(basic_cost);
    for (std::size_t r = 0; r < m; ++r) {
      if (basis[r] < n) res.x[basis[r]] = std::max(0.0, xb(static_cast<Eigen::Index>(r)));
      res.duals[r] = std::max(0.0, y(static_cast<Eigen::Index>(r)));
    }
  } else {
    for (std::size_t r = 0; r < m; ++r) {
      if (basis[r] < n) res.x[basis[r]] = std::max(0.0, cell(r, n + m));
      res.duals[r] = std::max(0.0, cost[n + r]);
    }
  }
  res.value = 0.0;
  for (std::size_t col = 0; col < n; ++col) res.value += lp.c[col] * res.x[col];
  res.status = SimplexStatus::optimal;
  return res;
}

}  // namespace mmsched
