// Copyright 2026 The Stepstone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stepstone/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stepstone {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reduced problem after eliminating fixed variables. Rows that lose all
// their free terms become constant checks.
struct Reduced {
  int n{0};
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  std::vector<LinearRow> eq, in;
  std::vector<int> free_of_full;  // free index -> full index
  bool trivially_infeasible{false};
};

Reduced reduce(const QuadraticModel& model, double feas_tol) {
  Reduced red;
  std::vector<int> map_full(model.num_vars, -1);
  for (int i = 0; i < model.num_vars; ++i) {
    if (!model.fixed[i]) {
      map_full[i] = red.n++;
      red.free_of_full.push_back(i);
    }
  }
  red.H.setZero(red.n, red.n);
  red.g.setZero(red.n);
  for (int i = 0; i < model.num_vars; ++i) {
    const int fi = map_full[i];
    if (fi < 0) continue;
    red.g(fi) = model.g(i);
    for (int j = 0; j < model.num_vars; ++j) {
      const double hij = model.H(i, j);
      if (hij == 0.0) continue;
      const int fj = map_full[j];
      if (fj >= 0) {
        red.H(fi, fj) = hij;
      } else {
        red.g(fi) += hij * *model.fixed[j];
      }
    }
  }
  auto reduce_rows = [&](const std::vector<LinearRow>& rows, bool is_eq,
                         std::vector<LinearRow>& out) {
    for (const auto& row : rows) {
      LinearRow r;
      r.rhs = row.rhs;
      for (const auto& [idx, coeff] : row.terms) {
        if (map_full[idx] >= 0) {
          r.terms.emplace_back(map_full[idx], coeff);
        } else {
          r.rhs -= coeff * *model.fixed[idx];
        }
      }
      if (r.terms.empty()) {
        if (is_eq ? std::abs(r.rhs) > feas_tol : r.rhs < -feas_tol) {
          red.trivially_infeasible = true;
          return;
        }
        continue;
      }
      out.push_back(std::move(r));
    }
  };
  reduce_rows(model.eq_rows, true, red.eq);
  if (!red.trivially_infeasible) reduce_rows(model.ineq_rows, false, red.in);
  return red;
}

double row_dot(const LinearRow& row, const Eigen::VectorXd& x) {
  double v = 0.0;
  for (const auto& [idx, coeff] : row.terms) v += coeff * x(idx);
  return v;
}

struct IpmOutcome {
  bool converged{false};
  bool infeasible_signal{false};
  Eigen::VectorXd x, y, z, s;
  int iterations{0};
  // best iterate seen, by worst KKT residual
  double best_kkt{kInf};
  Eigen::VectorXd best_x, best_y, best_z, best_s;
};

// Mehrotra predictor-corrector on the reduced problem.
IpmOutcome run_ipm(const Reduced& red, const QpOptions& opts) {
  const int n = red.n;
  const int p = static_cast<int>(red.eq.size());
  const int m = static_cast<int>(red.in.size());

  Eigen::VectorXd beq(p), hin(m);
  for (int i = 0; i < p; ++i) beq(i) = red.eq[i].rhs;
  for (int i = 0; i < m; ++i) hin(i) = red.in[i].rhs;

  const double scale_p =
      1.0 + std::max(p ? beq.cwiseAbs().maxCoeff() : 0.0,
                     m ? hin.cwiseAbs().maxCoeff() : 0.0);
  const double scale_d = 1.0 + (n ? red.g.cwiseAbs().maxCoeff() : 0.0);

  IpmOutcome out;
  out.x.setZero(n);
  out.y.setZero(p);
  out.z.setZero(m);
  out.s.setZero(m);

  const int dim = n + p;
  Eigen::MatrixXd kkt(dim, dim);
  Eigen::VectorXd rhs(dim), sol(dim), resid(dim);

  auto assemble = [&](const Eigen::VectorXd& w) {
    kkt.setZero();
    kkt.topLeftCorner(n, n) = red.H;
    for (int i = 0; i < n; ++i) kkt(i, i) += opts.reg;
    for (int i = 0; i < m; ++i) {
      const auto& terms = red.in[i].terms;
      for (const auto& [a, ca] : terms)
        for (const auto& [b, cb] : terms) kkt(a, b) += w(i) * ca * cb;
    }
    for (int i = 0; i < p; ++i) {
      for (const auto& [idx, coeff] : red.eq[i].terms) {
        kkt(idx, n + i) = coeff;
        kkt(n + i, idx) = coeff;
      }
      kkt(n + i, n + i) = -opts.reg;
    }
  };

  // initial point: equality-regularized least-squares heuristic
  {
    assemble(Eigen::VectorXd::Ones(m));
    for (int i = 0; i < n; ++i) kkt(i, i) += 1.0;
    rhs.setZero();
    rhs.head(n) = -red.g;
    for (int i = 0; i < m; ++i)
      for (const auto& [idx, coeff] : red.in[i].terms)
        rhs(idx) += coeff * hin(i);
    rhs.tail(p) = beq;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    sol = lu.solve(rhs);
    out.x = sol.head(n);
    out.y = sol.tail(p);
    if (m > 0) {
      Eigen::VectorXd shat(m);
      for (int i = 0; i < m; ++i) shat(i) = hin(i) - row_dot(red.in[i], out.x);
      const double shift = std::max(0.0, -1.5 * shat.minCoeff());
      Eigen::VectorXd sbar = shat.array() + shift;
      Eigen::VectorXd zbar = Eigen::VectorXd::Ones(m);
      const double dot = sbar.dot(zbar);
      const double ds = 0.5 * dot / zbar.sum();
      const double dz = 0.5 * dot / std::max(sbar.sum(), 1e-12);
      out.s = sbar.array() + ds + 1e-3;
      out.z = zbar.array() + dz;
    }
  }

  if (m == 0) {
    // pure equality QP: the initial solve already honored H, redo without
    // the +I shift
    assemble(Eigen::VectorXd::Zero(0));
    rhs.head(n) = -red.g;
    rhs.tail(p) = beq;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    sol = lu.solve(rhs);
    resid = rhs - kkt * sol;
    sol += lu.solve(resid);
    out.x = sol.head(n);
    out.y = sol.tail(p);
    out.iterations = 1;
    double rp = 0.0;
    for (int i = 0; i < p; ++i)
      rp = std::max(rp, std::abs(row_dot(red.eq[i], out.x) - beq(i)));
    out.converged = rp / scale_p < 1e-7;
    out.infeasible_signal = !out.converged;
    return out;
  }

  Eigen::VectorXd rd(n), rp_eq(p), rp_in(m);
  Eigen::VectorXd dx_a(n), dy_a(p), dz_a(m), ds_a(m);
  Eigen::VectorXd dx(n), dy(p), dz(m), ds(m);

  double best_feas = kInf;
  int stall = 0;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    out.iterations = iter + 1;
    // residuals
    rd = red.H * out.x + red.g;
    for (int i = 0; i < p; ++i)
      for (const auto& [idx, coeff] : red.eq[i].terms)
        rd(idx) += coeff * out.y(i);
    for (int i = 0; i < m; ++i)
      for (const auto& [idx, coeff] : red.in[i].terms)
        rd(idx) += coeff * out.z(i);
    for (int i = 0; i < p; ++i) rp_eq(i) = row_dot(red.eq[i], out.x) - beq(i);
    for (int i = 0; i < m; ++i)
      rp_in(i) = row_dot(red.in[i], out.x) + out.s(i) - hin(i);

    const double mu = out.s.dot(out.z) / m;
    const double feas_p =
        std::max(p ? rp_eq.cwiseAbs().maxCoeff() : 0.0,
                 rp_in.cwiseAbs().maxCoeff()) /
        scale_p;
    const double feas_d = rd.cwiseAbs().maxCoeff() / scale_d;
    const double obj_scale = 1.0 + std::abs(0.5 * out.x.dot(red.H * out.x) +
                                            red.g.dot(out.x));

    if (feas_p < opts.tol_feas && feas_d < opts.tol_feas &&
        mu < opts.tol_gap * obj_scale) {
      out.converged = true;
      return out;
    }
    const double kkt_now = std::max({feas_p, feas_d, mu / obj_scale});
    if (kkt_now < out.best_kkt) {
      out.best_kkt = kkt_now;
      out.best_x = out.x;
      out.best_y = out.y;
      out.best_z = out.z;
      out.best_s = out.s;
    }
    // infeasibility signature: duals blow up, or complementarity collapses
    // while the primal residual is stuck
    if (feas_p < best_feas * 0.9) {
      best_feas = feas_p;
      stall = 0;
    } else {
      ++stall;
    }
    if (out.z.cwiseAbs().maxCoeff() > 1e7 * scale_d && feas_p > 1e-8) {
      out.infeasible_signal = true;
      return out;
    }
    if (stall > 10 && feas_p > 1e-8 && mu < 1e-10 * obj_scale) {
      out.infeasible_signal = true;
      return out;
    }
    if (stall > 20 && feas_p > 1e-8) {
      out.infeasible_signal = true;
      return out;
    }

    Eigen::VectorXd w = out.z.cwiseQuotient(out.s);
    assemble(w);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);

    auto solve_direction = [&](const Eigen::VectorXd& rsz,
                               Eigen::VectorXd& dx_o, Eigen::VectorXd& dy_o,
                               Eigen::VectorXd& dz_o, Eigen::VectorXd& ds_o) {
      rhs.head(n) = -rd;
      for (int i = 0; i < m; ++i) {
        const double v = w(i) * rp_in(i) - rsz(i) / out.s(i);
        for (const auto& [idx, coeff] : red.in[i].terms)
          rhs(idx) -= coeff * v;
      }
      rhs.tail(p) = -rp_eq;
      sol = lu.solve(rhs);
      resid = rhs - kkt * sol;
      sol += lu.solve(resid);
      dx_o = sol.head(n);
      dy_o = sol.tail(p);
      for (int i = 0; i < m; ++i) {
        const double gdx = row_dot(red.in[i], dx_o);
        ds_o(i) = -rp_in(i) - gdx;
        dz_o(i) = -(rsz(i) + out.z(i) * ds_o(i)) / out.s(i);
      }
    };

    // affine (predictor) direction
    Eigen::VectorXd rsz = out.s.cwiseProduct(out.z);
    solve_direction(rsz, dx_a, dy_a, dz_a, ds_a);

    auto max_step = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
      double a = 1.0;
      for (int i = 0; i < m; ++i)
        if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
      return a;
    };
    const double alpha_aff =
        std::min(max_step(out.s, ds_a), max_step(out.z, dz_a));
    const double mu_aff =
        (out.s + alpha_aff * ds_a).dot(out.z + alpha_aff * dz_a) / m;
    const double sigma = std::pow(mu_aff / mu, 3.0);

    // corrector
    rsz = out.s.cwiseProduct(out.z) + ds_a.cwiseProduct(dz_a);
    rsz.array() -= sigma * mu;
    solve_direction(rsz, dx, dy, dz, ds);

    const double alpha =
        std::min(1.0, 0.99 * std::min(max_step(out.s, ds), max_step(out.z, dz)));
    out.x += alpha * dx;
    out.y += alpha * dy;
    out.z += alpha * dz;
    out.s += alpha * ds;
  }
  return out;
}

QpResult finish(const QuadraticModel& model, const Reduced& red,
                const IpmOutcome& ipm) {
  QpResult res;
  res.status = QpStatus::optimal;
  res.iterations = ipm.iterations;
  res.x.resize(model.num_vars);
  for (int i = 0; i < model.num_vars; ++i)
    res.x(i) = model.fixed[i] ? *model.fixed[i] : 0.0;
  for (int i = 0; i < red.n; ++i) res.x(red.free_of_full[i]) = ipm.x(i);
  res.objective = model.objective(res.x);
  res.y_eq = ipm.y;
  res.z_in = ipm.z;

  // KKT residuals on the reduced problem
  Eigen::VectorXd rd = red.H * ipm.x + red.g;
  for (size_t i = 0; i < red.eq.size(); ++i)
    for (const auto& [idx, coeff] : red.eq[i].terms)
      rd(idx) += coeff * ipm.y(i);
  for (size_t i = 0; i < red.in.size(); ++i)
    for (const auto& [idx, coeff] : red.in[i].terms)
      rd(idx) += coeff * ipm.z(i);
  res.kkt_stationarity = red.n ? rd.cwiseAbs().maxCoeff() : 0.0;
  for (const auto& row : red.eq)
    res.kkt_equality =
        std::max(res.kkt_equality, std::abs(row_dot(row, ipm.x) - row.rhs));
  for (size_t i = 0; i < red.in.size(); ++i) {
    const double slack = red.in[i].rhs - row_dot(red.in[i], ipm.x);
    res.kkt_inequality = std::max(res.kkt_inequality, -slack);
    res.kkt_complementarity =
        std::max(res.kkt_complementarity, std::abs(slack * ipm.z(i)));
  }
  return res;
}

}  // namespace

QpResult solve_qp(const QuadraticModel& model, const QpOptions& opts) {
  const Reduced red = reduce(model, 1e-9);
  QpResult res;
  if (red.trivially_infeasible) {
    res.status = QpStatus::infeasible;
    return res;
  }
  if (red.n == 0) {
    // everything fixed and consistent
    res.status = QpStatus::optimal;
    res.x.resize(model.num_vars);
    for (int i = 0; i < model.num_vars; ++i)
      res.x(i) = model.fixed[i] ? *model.fixed[i] : 0.0;
    res.objective = model.objective(res.x);
    return res;
  }

  IpmOutcome ipm = run_ipm(red, opts);
  if (ipm.converged) return finish(model, red, ipm);
  // accept a near-converged iterate when it already meets the KKT contract
  auto accept_best = [&](IpmOutcome& o) {
    if (o.best_kkt > 1e-7) return false;
    o.x = o.best_x;
    o.y = o.best_y;
    o.z = o.best_z;
    o.s = o.best_s;
    return true;
  };
  if (!ipm.infeasible_signal && accept_best(ipm)) return finish(model, red, ipm);

  if (!opts.classify_infeasible) {
    res.status =
        ipm.infeasible_signal ? QpStatus::infeasible : QpStatus::iteration_limit;
    return res;
  }

  // scalar L-inf phase-1: min t s.t. eq rows, ineq rows relaxed by t.
  // t* > 0 certifies primal infeasibility.
  {
    Reduced p1 = red;
    const int t_var = p1.n++;
    Eigen::MatrixXd H1 = Eigen::MatrixXd::Zero(p1.n, p1.n);
    H1(t_var, t_var) = 1e-6;
    p1.H = std::move(H1);
    Eigen::VectorXd g1 = Eigen::VectorXd::Zero(p1.n);
    g1(t_var) = 1.0;
    p1.g = std::move(g1);
    for (auto& row : p1.in) row.terms.emplace_back(t_var, -1.0);
    LinearRow t_floor;
    t_floor.terms.emplace_back(t_var, -1.0);
    t_floor.rhs = 0.1;
    p1.in.push_back(std::move(t_floor));
    QpOptions popts = opts;
    popts.max_iters = 80;
    const IpmOutcome pipm = run_ipm(p1, popts);
    if (pipm.converged && pipm.x(t_var) > 1e-7) {
      res.status = QpStatus::infeasible;
      return res;
    }
    if (!pipm.converged && pipm.infeasible_signal) {
      // equalities alone are inconsistent
      res.status = QpStatus::infeasible;
      return res;
    }
  }

  // certified feasible but the direct pass stalled: one longer retry
  QpOptions retry = opts;
  retry.max_iters = opts.max_iters * 2;
  ipm = run_ipm(red, retry);
  if (ipm.converged || accept_best(ipm)) return finish(model, red, ipm);
  res.status = QpStatus::iteration_limit;
  return res;
}

}  // namespace stepstone
