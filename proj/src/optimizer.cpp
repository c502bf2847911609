#include "koopest/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "koopest/errors.hpp"

namespace koopest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Line-search trial point: phi(alpha) = f(x + alpha d), and when requested
/// dphi(alpha) = grad f(x + alpha d) . d together with the gradient itself.
struct Trial {
  double alpha = 0.0;
  double phi = kInf;
  double dphi = kInf;
  Vector grad;
  bool has_grad = false;
};

class LineFunction {
 public:
  LineFunction(const ScalarFn& f, const Vector& x, const Vector& d, double fd_step, int& evals)
      : f_(f), x_(x), d_(d), fd_step_(fd_step), evals_(evals) {}

  Trial value(double alpha) {
    auto it = cache_.find(alpha);
    if (it != cache_.end()) return it->second;
    Trial t;
    t.alpha = alpha;
    ++evals_;
    t.phi = f_(x_ + alpha * d_);
    if (!std::isfinite(t.phi)) t.phi = kInf;
    cache_[alpha] = t;
    return t;
  }

  /// Value and directional derivative; dphi is +inf when the gradient is unavailable.
  Trial full(double alpha) {
    Trial t = value(alpha);
    if (t.has_grad || !std::isfinite(t.phi)) return t;
    try {
      const ScalarFn counted = [this](const Vector& z) {
        ++evals_;
        return f_(z);
      };
      t.grad = fd_gradient(counted, x_ + alpha * d_, fd_step_, t.phi);
      t.dphi = t.grad.dot(d_);
      t.has_grad = std::isfinite(t.dphi);
      if (!t.has_grad) t.dphi = kInf;
    } catch (const GradientUnavailable&) {
      t.dphi = kInf;
    }
    cache_[alpha] = t;
    return t;
  }

 private:
  const ScalarFn& f_;
  const Vector& x_;
  const Vector& d_;
  double fd_step_;
  int& evals_;
  std::map<double, Trial> cache_;
};

/// Armijo backtracking with quadratic then cubic interpolation of phi.
std::optional<Trial> backtracking(LineFunction& line, double phi0, double dphi0, double alpha0) {
  constexpr double c1 = 1e-4, rho_hi = 0.5, rho_lo = 0.1;
  constexpr int max_iter = 1000;

  double a2 = alpha0;
  Trial t2 = line.value(a2);
  int iter = 0;
  while (!std::isfinite(t2.phi) && iter < 60) {
    a2 *= 0.5;
    t2 = line.value(a2);
    ++iter;
  }
  double a1 = 0.0, phi1 = phi0;
  bool first = true;
  while (!(t2.phi <= phi0 + c1 * a2 * dphi0)) {
    if (++iter > max_iter || a2 < 1e-20) return std::nullopt;
    double a_next;
    if (first || !std::isfinite(t2.phi)) {
      a_next = std::isfinite(t2.phi) ? -dphi0 * a2 * a2 / (2.0 * (t2.phi - phi0 - dphi0 * a2)) : 0.5 * a2;
      first = false;
    } else {
      const double r2 = t2.phi - phi0 - dphi0 * a2;
      const double r1 = phi1 - phi0 - dphi0 * a1;
      const double div = 1.0 / (a1 * a1 * a2 * a2 * (a2 - a1));
      const double a = (a1 * a1 * r2 - a2 * a2 * r1) * div;
      const double b = (-a1 * a1 * a1 * r2 + a2 * a2 * a2 * r1) * div;
      if (std::abs(a) < 1e-300) {
        a_next = -dphi0 / (2.0 * b);
      } else {
        const double disc = std::max(b * b - 3.0 * a * dphi0, 0.0);
        a_next = (-b + std::sqrt(disc)) / (3.0 * a);
      }
    }
    if (!std::isfinite(a_next)) a_next = 0.5 * a2;
    a1 = a2;
    phi1 = t2.phi;
    a2 = std::clamp(a_next, rho_lo * a2, rho_hi * a2);
    t2 = line.value(a2);
  }
  return t2;
}

/// Hager-Zhang line search (bracket, secant^2, bisection) on the approximate
/// and exact Wolfe conditions. The approximate-Wolfe tolerance on phi is zero,
/// so an accepted point never increases the objective.
class HagerZhang {
 public:
  HagerZhang(LineFunction& line, const Trial& origin) : line_(line), t0_(origin) {}

  std::optional<Trial> search(double c) {
    constexpr int max_iter = 50;
    Trial tc = line_.full(c);
    for (int i = 0; i < 60 && !std::isfinite(tc.phi); ++i) {
      c *= 0.5;
      tc = line_.full(c);
    }
    if (!std::isfinite(tc.phi)) return std::nullopt;
    if (wolfe(tc)) return tc;

    // Bracketing phase.
    Trial a = t0_, b;
    for (int i = 0;; ++i) {
      if (i > max_iter) return best();
      if (tc.dphi >= 0.0) {
        b = tc;
        break;
      }
      if (tc.phi > phi_bound()) {
        auto [lo, hi] = bisect(t0_, tc);
        a = lo, b = hi;
        break;
      }
      a = tc;
      double next = kExpand * tc.alpha;
      Trial tn = line_.full(next);
      while (!std::isfinite(tn.phi) && next > tc.alpha * (1.0 + 1e-12)) {
        next = 0.5 * (tc.alpha + next);
        tn = line_.full(next);
      }
      if (!std::isfinite(tn.phi)) return best();
      tc = tn;
      if (wolfe(tc)) return tc;
    }
    if (wolfe(a)) return a;
    if (wolfe(b)) return b;

    for (int i = 0; i < max_iter; ++i) {
      const double width = b.alpha - a.alpha;
      auto [na, nb] = secant2(a, b);
      if (wolfe(na)) return na;
      if (wolfe(nb)) return nb;
      if (nb.alpha - na.alpha > kShrink * width) {
        auto [ma, mb] = update(na, nb, line_.full(0.5 * (na.alpha + nb.alpha)));
        na = ma, nb = mb;
        if (wolfe(na)) return na;
        if (wolfe(nb)) return nb;
      }
      a = na, b = nb;
      if (b.alpha - a.alpha <= 1e-14 * std::max(1.0, b.alpha)) break;
    }
    return best();
  }

 private:
  static constexpr double kDelta = 0.1, kSigma = 0.9, kTheta = 0.5, kShrink = 0.66, kExpand = 5.0;

  double phi_bound() const { return t0_.phi; }

  bool wolfe(const Trial& t) {
    if (t.alpha <= 0.0 || !std::isfinite(t.phi) || !t.has_grad) return false;
    track(t);
    const double d0 = t0_.dphi;
    const bool curvature = t.dphi >= kSigma * d0;
    const bool armijo = t.phi <= t0_.phi + kDelta * t.alpha * d0;
    const bool approx = (2.0 * kDelta - 1.0) * d0 >= t.dphi && t.phi <= phi_bound();
    return curvature && (armijo || approx);
  }

  void track(const Trial& t) {
    if (t.alpha > 0.0 && std::isfinite(t.phi) && t.phi < t0_.phi && t.has_grad &&
        (!best_ || t.phi < best_->phi))
      best_ = t;
  }

  /// Best strictly decreasing point seen, used when the search stalls.
  std::optional<Trial> best() const { return best_; }

  static double secant(const Trial& a, const Trial& b) {
    const double denom = b.dphi - a.dphi;
    if (!(std::abs(denom) > 0.0)) return 0.5 * (a.alpha + b.alpha);
    return (a.alpha * b.dphi - b.alpha * a.dphi) / denom;
  }

  std::pair<Trial, Trial> update(const Trial& a, const Trial& b, Trial c) {
    if (!(c.alpha > a.alpha && c.alpha < b.alpha)) return {a, b};
    if (!std::isfinite(c.phi)) return {a, c};
    track(c);
    if (c.dphi >= 0.0) return {a, c};
    if (c.phi <= phi_bound()) return {c, b};
    return bisect(a, c);
  }

  std::pair<Trial, Trial> bisect(Trial a, Trial b) {
    for (int i = 0; i < 60; ++i) {
      const Trial d = line_.full((1.0 - kTheta) * a.alpha + kTheta * b.alpha);
      if (!std::isfinite(d.phi)) {
        b = d;
        continue;
      }
      track(d);
      if (d.dphi >= 0.0) return {a, d};
      if (d.phi <= phi_bound())
        a = d;
      else
        b = d;
      if (b.alpha - a.alpha <= 1e-14 * std::max(1.0, b.alpha)) break;
    }
    return {a, b};
  }

  std::pair<Trial, Trial> secant2(const Trial& a, const Trial& b) {
    if (!b.has_grad || !std::isfinite(b.dphi)) {
      const Trial mid = line_.full(0.5 * (a.alpha + b.alpha));
      return update(a, b, mid);
    }
    const double c = secant(a, b);
    auto [A, B] = update(a, b, line_.full(c));
    double c2 = std::numeric_limits<double>::quiet_NaN();
    if (c == B.alpha) c2 = secant(b, B);
    if (c == A.alpha) c2 = secant(a, A);
    if (std::isfinite(c2)) return update(A, B, line_.full(c2));
    return {A, B};
  }

  LineFunction& line_;
  Trial t0_;
  std::optional<Trial> best_;
};

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Vector fd_gradient(const ScalarFn& f, const Vector& x, double fd_step, std::optional<double> f0) {
  if (!(fd_step > 0.0)) throw InvalidArgument("fd_step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + h;
    const double fp = f(probe);
    probe[j] = x[j] - h;
    const double fm = f(probe);
    probe[j] = x[j];
    const bool okp = std::isfinite(fp), okm = std::isfinite(fm);
    if (okp && okm) {
      g[j] = (fp - fm) / (2.0 * h);
      continue;
    }
    if (!okp && !okm) throw GradientUnavailable("both difference probes are non-finite");
    if (!f0) f0 = f(x);
    if (!std::isfinite(*f0)) throw GradientUnavailable("objective is non-finite at the base point");
    g[j] = okp ? (fp - *f0) / h : (*f0 - fm) / h;
  }
  return g;
}

std::string_view line_search_name(LineSearchKind k) noexcept {
  return k == LineSearchKind::HagerZhang ? "hager-zhang" : "backtracking";
}

LineSearchKind line_search_from_name(std::string_view name) {
  if (name == "backtracking") return LineSearchKind::BacktrackingInterpolation;
  if (name == "hager-zhang" || name == "hagerzhang") return LineSearchKind::HagerZhang;
  throw InvalidArgument("unknown line search '" + std::string(name) + "' (expected backtracking|hager-zhang)");
}

BfgsResult minimize_bfgs(const ScalarFn& f, const Vector& x0, const BfgsOptions& opts) {
  if (!(opts.fd_step > 0.0) || !(opts.grad_tol > 0.0) || opts.max_iter <= 0)
    throw InvalidArgument("optimizer options must be positive");
  BfgsResult res;
  const auto n = x0.size();
  int evals = 0;
  const ScalarFn counted = [&](const Vector& z) {
    ++evals;
    return f(z);
  };

  Vector x = x0;
  double fx = counted(x);
  res.x = x;
  res.f = fx;
  res.history.push_back(fx);
  if (!std::isfinite(fx)) {
    res.message = "objective is non-finite at the initial point";
    res.grad_norm = kInf;
    res.evaluations = evals;
    return res;
  }

  Vector g;
  try {
    g = fd_gradient(counted, x, opts.fd_step, fx);
  } catch (const GradientUnavailable& e) {
    res.message = e.what();
    res.grad_norm = kInf;
    res.evaluations = evals;
    return res;
  }
  Matrix h_inv = Matrix::Identity(n, n);

  for (int k = 0;; ++k) {
    res.grad_norm = inf_norm(g);
    if (res.grad_norm < opts.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }
    if (k >= opts.max_iter) {
      res.message = "iteration limit reached";
      break;
    }

    Vector d = -h_inv * g;
    double dphi0 = g.dot(d);
    if (!(dphi0 < 0.0)) {
      h_inv.setIdentity();
      d = -g;
      dphi0 = g.dot(d);
    }

    LineFunction line(f, x, d, opts.fd_step, evals);
    std::optional<Trial> accepted;
    if (opts.line_search == LineSearchKind::BacktrackingInterpolation) {
      accepted = backtracking(line, fx, dphi0, 1.0);
    } else {
      Trial origin;
      origin.alpha = 0.0;
      origin.phi = fx;
      origin.dphi = dphi0;
      origin.grad = g;
      origin.has_grad = true;
      double c = 1.0;
      if (k == 0) {
        const double xn = inf_norm(x);
        c = xn > 0.0 ? 0.01 * xn / res.grad_norm : 1.0;
      }
      accepted = HagerZhang(line, origin).search(c);
    }
    if (!accepted || !(accepted->phi <= fx)) {
      res.message = "line search failed";
      break;
    }

    const Vector x_new = x + accepted->alpha * d;
    Vector g_new;
    if (accepted->has_grad) {
      g_new = accepted->grad;
    } else {
      try {
        g_new = fd_gradient(counted, x_new, opts.fd_step, accepted->phi);
      } catch (const GradientUnavailable& e) {
        x = x_new;
        fx = accepted->phi;
        res.history.push_back(fx);
        res.iterations = k + 1;
        res.message = e.what();
        break;
      }
    }
    const Vector s = x_new - x;
    const Vector y = g_new - g;
    x = x_new;
    fx = accepted->phi;
    g = g_new;
    res.history.push_back(fx);
    res.iterations = k + 1;

    const double sy = s.dot(y);
    if (sy > 1e-300 && std::isfinite(sy)) {
      const double rho = 1.0 / sy;
      const Matrix ident = Matrix::Identity(n, n);
      h_inv = (ident - rho * s * y.transpose()) * h_inv * (ident - rho * y * s.transpose()) +
              rho * s * s.transpose();
    }
    if (s.cwiseAbs().maxCoeff() == 0.0) {
      res.message = "step collapsed to zero";
      res.grad_norm = inf_norm(g);
      break;
    }
  }
  res.x = x;
  res.f = fx;
  res.evaluations = evals;
  return res;
}

}  // namespace koopest
