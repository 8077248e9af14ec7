#ifndef ALSET_LINALG_HPP
#define ALSET_LINALG_HPP

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"

namespace alset
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

using LinearOperator = std::function<Vec(const Vec&)>;

inline constexpr double cg_relative_tolerance = 1e-12;

/**
 * Conjugate gradients for a symmetric positive-definite operator.
 *
 * Iterates until ||b - Ax|| <= rel_tol * ||b||, verified on the true
 * residual. A non-finite right-hand side yields NaN. Non-positive
 * curvature or a stalled solve throws linear_solver_error.
 */
inline Vec conjugate_gradient(const LinearOperator& apply, const Vec& rhs,
                              double rel_tol = cg_relative_tolerance, Index max_iter = 0)
{
  const Index n = rhs.size();
  if (max_iter <= 0)
    max_iter = 20 * n + 50;
  if (!rhs.allFinite())
    return Vec::Constant(n, std::numeric_limits<double>::quiet_NaN());
  Vec x = Vec::Zero(n);
  const double scale = n > 0 ? rhs.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0)
    return x;
  // solve for rhs / scale so huge right-hand sides cannot overflow the norms
  const Vec b = rhs / scale;
  const double target = rel_tol * b.norm();

  // Restart from the true residual if round-off lets the recursion drift.
  for (int restart = 0; restart < 4; ++restart)
  {
    Vec r = b - apply(x);
    if (r.norm() <= target)
      return scale * x;
    Vec p = r;
    double rr = r.squaredNorm();
    for (Index it = 0; it < max_iter; ++it)
    {
      Vec ap = apply(p);
      double curvature = p.dot(ap);
      if (!(curvature > 0.0))
        throw linear_solver_error("conjugate gradient: operator is not positive definite");
      double step = rr / curvature;
      x += step * p;
      r -= step * ap;
      double rr_next = r.squaredNorm();
      if (std::sqrt(rr_next) <= 0.5 * target)
        break;
      p = r + (rr_next / rr) * p;
      rr = rr_next;
    }
  }
  if ((b - apply(x)).norm() <= target)
    return scale * x;
  throw linear_solver_error("conjugate gradient: residual did not reach tolerance");
}

inline double spectral_norm(const Mat& m)
{
  if (m.size() == 0)
    return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

inline double symmetric_min_eigenvalue(const Mat& m)
{
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double symmetric_max_eigenvalue(const Mat& m)
{
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m.rows() - 1);
}

inline Vec gaussian_vector(Index n, double scale, CounterRng& rng)
{
  Vec v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = scale * rng.normal();
  return v;
}

inline Mat gaussian_matrix(Index rows, Index cols, double scale, CounterRng& rng)
{
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = scale * rng.normal();
  return m;
}

/// Haar-ish orthogonal matrix from the QR factor of a Gaussian matrix.
inline Mat random_orthogonal(Index n, CounterRng& rng)
{
  Mat g = gaussian_matrix(n, n, 1.0, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  Vec signs = qr.matrixQR().diagonal().array().sign();
  for (Index j = 0; j < n; ++j)
    if (signs(j) < 0)
      q.col(j) *= -1.0;
  return q;
}

/// Dense matrix of a linear map R^cols -> R^rows given by its action.
inline Mat materialize(const LinearOperator& apply, Index rows, Index cols)
{
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    m.col(j) = apply(Vec::Unit(cols, j));
  return m;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

} // namespace alset

#endif
