#include "offloadsim/detail/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace offloadsim::milp::detail {

namespace {
constexpr double kTolReduced = 1e-9;   // pricing threshold
constexpr double kTolPivot = 1e-9;     // smallest acceptable pivot element
constexpr double kTolPrimal = 1e-9;    // basic bound violation threshold
constexpr double kTolDegenerate = 1e-11;
constexpr int kBlandTrigger = 40;      // degenerate pivots before Bland's rule
constexpr int kRefactorEvery = 100;
}  // namespace

LpCore build_core(const Problem& p) {
    LpCore core;
    core.ns = static_cast<int>(p.vars.size());
    core.m = static_cast<int>(p.cons.size());
    core.n = core.ns + core.m;
    core.maximize = p.sense == Sense::Maximize;

    core.cols.assign(core.n, {});
    core.lb.assign(core.n, 0.0);
    core.ub.assign(core.n, 0.0);
    core.cost.assign(core.n, 0.0);
    core.rhs.assign(core.m, 0.0);

    for (int j = 0; j < core.ns; ++j) {
        const Variable& v = p.vars[j];
        double lo = v.lb, hi = v.ub;
        if (v.kind == VarKind::Binary) {
            lo = std::max(lo, 0.0);
            hi = std::min(hi, 1.0);
        }
        core.lb[j] = lo;
        core.ub[j] = hi;
    }
    const double sign = core.maximize ? -1.0 : 1.0;
    for (const LinTerm& t : p.objective)
        if (t.coef != 0.0) core.cost[t.var] += sign * t.coef;

    for (int i = 0; i < core.m; ++i) {
        const Constraint& c = p.cons[i];
        core.rhs[i] = c.rhs;
        for (const LinTerm& t : c.terms)
            if (t.coef != 0.0) core.cols[t.var].emplace_back(i, t.coef);
        const int s = core.ns + i;
        core.cols[s].emplace_back(i, 1.0);
        switch (c.cmp) {
            case Cmp::Le:
                core.lb[s] = 0.0;
                core.ub[s] = kInf;
                break;
            case Cmp::Ge:
                core.lb[s] = -kInf;
                core.ub[s] = 0.0;
                break;
            case Cmp::Eq:
                core.lb[s] = 0.0;
                core.ub[s] = 0.0;
                break;
        }
    }
    // Merge duplicate (var, row) entries so columns are clean.
    for (auto& col : core.cols) {
        std::sort(col.begin(), col.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        size_t w = 0;
        for (size_t r = 0; r < col.size();) {
            int row = col[r].first;
            double sum = 0.0;
            while (r < col.size() && col[r].first == row) sum += col[r++].second;
            if (sum != 0.0) col[w++] = {row, sum};
        }
        col.resize(w);
    }
    return core;
}

void DenseSimplex::attach(const LpCore* core) {
    core_ = core;
    m_ = core->m;
    nt_ = core->n + m_;
    lo_.assign(nt_, 0.0);
    hi_.assign(nt_, 0.0);
    cost1_.assign(nt_, 0.0);
    cost2_.assign(nt_, 0.0);
    for (int j = 0; j < core->n; ++j) cost2_[j] = core->cost[j];
    art_sign_.assign(m_, 0);
    vstat_.assign(nt_, AtLower);
    basic_.clear();
    binv_.clear();
    xb_.assign(m_, 0.0);
    d_.assign(nt_, 0.0);
    work_col_.assign(m_, 0.0);
    work_row_.assign(m_, 0.0);
    work_alpha_.assign(nt_, 0.0);
    pivot_count = 0;
}

const std::vector<std::pair<int, double>>& DenseSimplex::column(int j) const {
    if (j < core_->n) return core_->cols[j];
    // Artificial columns are materialized lazily as single-entry vectors.
    static thread_local std::vector<std::pair<int, double>> art;
    const int row = j - core_->n;
    art.assign(1, {row, static_cast<double>(art_sign_[row] == 0 ? 1 : art_sign_[row])});
    return art;
}

double DenseSimplex::nb_value(int j) const {
    switch (vstat_[j]) {
        case AtLower: return lo_[j];
        case AtUpper: return hi_[j];
        default: return 0.0;
    }
}

double DenseSimplex::value_of(int col) const {
    if (vstat_[col] == Basic) {
        for (int i = 0; i < m_; ++i)
            if (basic_[i] == col) return xb_[i];
        return 0.0;
    }
    return nb_value(col);
}

void DenseSimplex::set_structural_bounds(const std::vector<double>& lo,
                                         const std::vector<double>& hi) {
    for (int j = 0; j < core_->ns; ++j) {
        lo_[j] = lo[j];
        hi_[j] = hi[j];
    }
    for (int i = 0; i < m_; ++i) {
        const int s = core_->ns + i;
        lo_[s] = core_->lb[s];
        hi_[s] = core_->ub[s];
    }
    // Artificial bounds are managed by solve_from_scratch.
}

void DenseSimplex::compute_xb() {
    std::vector<double>& r = work_row_;
    r.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) r[i] = core_->rhs[i];
    for (int j = 0; j < nt_; ++j) {
        if (vstat_[j] == Basic) continue;
        const double v = nb_value(j);
        if (v == 0.0) continue;
        for (const auto& [row, a] : column(j)) r[row] -= a * v;
    }
    for (int i = 0; i < m_; ++i) {
        double s = 0.0;
        const double* brow = &binv_[static_cast<size_t>(i) * m_];
        for (int k = 0; k < m_; ++k) s += brow[k] * r[k];
        xb_[i] = s;
    }
}

void DenseSimplex::compute_reduced() {
    // y = c_B' B^-1, then d_j = c_j - y.A_j.
    std::vector<double> y(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
        const double cb = (*cost_)[basic_[k]];
        if (cb == 0.0) continue;
        const double* brow = &binv_[static_cast<size_t>(k) * m_];
        for (int i = 0; i < m_; ++i) y[i] += cb * brow[i];
    }
    for (int j = 0; j < nt_; ++j) {
        if (vstat_[j] == Basic) {
            d_[j] = 0.0;
            continue;
        }
        double dj = (*cost_)[j];
        for (const auto& [row, a] : column(j)) dj -= y[row] * a;
        d_[j] = dj;
    }
}

bool DenseSimplex::factorize() {
    // Gauss-Jordan inversion of the basis matrix with partial pivoting.
    std::vector<double> B(static_cast<size_t>(m_) * m_, 0.0);
    for (int k = 0; k < m_; ++k)
        for (const auto& [row, a] : column(basic_[k])) B[static_cast<size_t>(row) * m_ + k] = a;
    binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<size_t>(i) * m_ + i] = 1.0;

    std::vector<int> perm(m_);
    for (int i = 0; i < m_; ++i) perm[i] = i;
    for (int col = 0; col < m_; ++col) {
        int piv = col;
        double best = std::fabs(B[static_cast<size_t>(col) * m_ + col]);
        for (int i = col + 1; i < m_; ++i) {
            const double v = std::fabs(B[static_cast<size_t>(i) * m_ + col]);
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < 1e-12) return false;
        if (piv != col) {
            for (int k = 0; k < m_; ++k) {
                std::swap(B[static_cast<size_t>(piv) * m_ + k], B[static_cast<size_t>(col) * m_ + k]);
                std::swap(binv_[static_cast<size_t>(piv) * m_ + k],
                          binv_[static_cast<size_t>(col) * m_ + k]);
            }
        }
        const double inv = 1.0 / B[static_cast<size_t>(col) * m_ + col];
        for (int k = 0; k < m_; ++k) {
            B[static_cast<size_t>(col) * m_ + k] *= inv;
            binv_[static_cast<size_t>(col) * m_ + k] *= inv;
        }
        for (int i = 0; i < m_; ++i) {
            if (i == col) continue;
            const double f = B[static_cast<size_t>(i) * m_ + col];
            if (f == 0.0) continue;
            for (int k = 0; k < m_; ++k) {
                B[static_cast<size_t>(i) * m_ + k] -= f * B[static_cast<size_t>(col) * m_ + k];
                binv_[static_cast<size_t>(i) * m_ + k] -=
                    f * binv_[static_cast<size_t>(col) * m_ + k];
            }
        }
    }
    pivots_since_factor_ = 0;
    return true;
}

void DenseSimplex::pivot_update(int r, const std::vector<double>& w) {
    // Product-form update: B_new^-1 = E B^-1 with the eta column from w.
    double* rrow = &binv_[static_cast<size_t>(r) * m_];
    const double inv = 1.0 / w[r];
    for (int k = 0; k < m_; ++k) rrow[k] *= inv;
    for (int i = 0; i < m_; ++i) {
        if (i == r) continue;
        const double f = w[i];
        if (f == 0.0) continue;
        double* irow = &binv_[static_cast<size_t>(i) * m_];
        for (int k = 0; k < m_; ++k) irow[k] -= f * rrow[k];
    }
    ++pivots_since_factor_;
    ++pivot_count;
}

void DenseSimplex::update_reduced_after_pivot(int r, int entering, int leaving, double theta,
                                              const std::vector<double>& rho) {
    if (theta != 0.0) {
        for (int q = 0; q < nt_; ++q) {
            if (q == entering || vstat_[q] == Basic) continue;
            if (q == leaving) continue;
            double alpha = 0.0;
            for (const auto& [row, a] : column(q)) alpha += rho[row] * a;
            if (alpha != 0.0) d_[q] -= theta * alpha;
        }
    }
    d_[leaving] = -theta;
    d_[entering] = 0.0;
}

void DenseSimplex::maybe_refactor() {
    if (pivots_since_factor_ < kRefactorEvery) return;
    if (factorize()) {
        compute_xb();
        compute_reduced();
    }
}

LpStatus DenseSimplex::primal_loop(int64_t iter_limit) {
    degen_run_ = 0;
    bland_ = false;
    for (int64_t iter = 0; iter < iter_limit; ++iter) {
        maybe_refactor();

        // Pricing.
        int enter = -1;
        double best = kTolReduced;
        int dir = 0;
        for (int j = 0; j < nt_; ++j) {
            if (vstat_[j] == Basic) continue;
            const double dj = d_[j];
            int cand_dir = 0;
            if (vstat_[j] == AtLower && lo_[j] < hi_[j] && dj < -kTolReduced) cand_dir = 1;
            else if (vstat_[j] == AtUpper && lo_[j] < hi_[j] && dj > kTolReduced) cand_dir = -1;
            else if (vstat_[j] == FreeNB && std::fabs(dj) > kTolReduced) cand_dir = dj < 0 ? 1 : -1;
            if (cand_dir == 0) continue;
            if (bland_) {
                enter = j;
                dir = cand_dir;
                break;
            }
            if (std::fabs(dj) > best) {
                best = std::fabs(dj);
                enter = j;
                dir = cand_dir;
            }
        }
        if (enter < 0) return LpStatus::Optimal;

        // Column of the entering variable through the basis inverse.
        std::vector<double>& w = work_col_;
        std::fill(w.begin(), w.end(), 0.0);
        for (const auto& [row, a] : column(enter))
            for (int i = 0; i < m_; ++i) w[i] += binv_[static_cast<size_t>(i) * m_ + row] * a;

        // Ratio test with bound flips.
        double span = kInf;
        if (lo_[enter] > -kInf && hi_[enter] < kInf) span = hi_[enter] - lo_[enter];
        double tbest = span;
        int leave_row = -1;
        for (int i = 0; i < m_; ++i) {
            const double coeff = dir * w[i];
            const int b = basic_[i];
            double t;
            if (coeff > kTolPivot) {
                if (lo_[b] <= -kInf) continue;
                t = (xb_[i] - lo_[b]) / coeff;
            } else if (coeff < -kTolPivot) {
                if (hi_[b] >= kInf) continue;
                t = (hi_[b] - xb_[i]) / (-coeff);
            } else {
                continue;
            }
            if (t < 0.0) t = 0.0;
            bool take = false;
            if (t < tbest - 1e-12) {
                take = true;
            } else if (t <= tbest + 1e-12 && leave_row >= 0) {
                if (bland_) {
                    take = basic_[i] < basic_[leave_row];
                } else {
                    take = std::fabs(w[i]) > std::fabs(w[leave_row]);
                }
            } else if (t <= tbest + 1e-12 && leave_row < 0 && t < span) {
                take = true;
            }
            if (take) {
                tbest = std::min(t, tbest);
                leave_row = i;
            }
        }

        if (leave_row < 0) {
            if (tbest >= kInf) return LpStatus::Unbounded;
            // Bound flip: the entering variable runs to its other bound.
            for (int i = 0; i < m_; ++i) xb_[i] -= dir * tbest * w[i];
            vstat_[enter] = vstat_[enter] == AtUpper ? AtLower : AtUpper;
            ++pivots_since_factor_;
            continue;
        }

        if (tbest <= kTolDegenerate) {
            if (++degen_run_ > kBlandTrigger) bland_ = true;
        } else {
            degen_run_ = 0;
            bland_ = false;
        }

        const int leave = basic_[leave_row];
        const double enter_val = nb_value(enter) + dir * tbest;
        vstat_[leave] = dir * w[leave_row] > 0 ? AtLower : AtUpper;

        for (int i = 0; i < m_; ++i)
            if (i != leave_row) xb_[i] -= dir * tbest * w[i];
        xb_[leave_row] = enter_val;
        basic_[leave_row] = enter;
        vstat_[enter] = Basic;

        std::vector<double> rho(&binv_[static_cast<size_t>(leave_row) * m_],
                                &binv_[static_cast<size_t>(leave_row) * m_] + m_);
        const double theta = d_[enter] / w[leave_row];
        pivot_update(leave_row, w);
        update_reduced_after_pivot(leave_row, enter, leave, theta, rho);
    }
    return LpStatus::Numeric;
}

LpStatus DenseSimplex::dual_loop(int64_t iter_limit, double cutoff) {
    for (int64_t iter = 0; iter < iter_limit; ++iter) {
        maybe_refactor();

        if (cutoff < kInf && objective_internal() > cutoff) return LpStatus::CutoffReached;

        // Most violated basic variable leaves.
        int r = -1;
        double worst = kTolPrimal;
        bool below = false;
        for (int i = 0; i < m_; ++i) {
            const int b = basic_[i];
            const double lov = lo_[b] - xb_[i];
            const double upv = xb_[i] - hi_[b];
            if (lov > worst) {
                worst = lov;
                r = i;
                below = true;
            }
            if (upv > worst) {
                worst = upv;
                r = i;
                below = false;
            }
        }
        if (r < 0) return LpStatus::Optimal;

        const double* rho = &binv_[static_cast<size_t>(r) * m_];
        std::vector<double>& alpha = work_alpha_;
        int enter = -1;
        double best_ratio = kInf;
        double best_alpha = 0.0;
        for (int q = 0; q < nt_; ++q) {
            if (vstat_[q] == Basic) continue;
            double a = 0.0;
            for (const auto& [row, c] : column(q)) a += rho[row] * c;
            alpha[q] = a;
            if (lo_[q] >= hi_[q]) continue;  // fixed columns cannot move
            if (std::fabs(a) < kTolPivot) continue;
            bool ok = false;
            if (vstat_[q] == FreeNB) {
                ok = true;
            } else if (below) {
                ok = (vstat_[q] == AtLower && a < 0) || (vstat_[q] == AtUpper && a > 0);
            } else {
                ok = (vstat_[q] == AtLower && a > 0) || (vstat_[q] == AtUpper && a < 0);
            }
            if (!ok) continue;
            const double ratio = std::fabs(d_[q]) / std::fabs(a);
            bool take = ratio < best_ratio - 1e-12;
            if (!take && ratio <= best_ratio + 1e-12 && enter >= 0)
                take = std::fabs(a) > std::fabs(best_alpha);
            if (!take && enter < 0) take = true;
            if (take) {
                best_ratio = std::min(ratio, best_ratio);
                enter = q;
                best_alpha = a;
            }
        }
        if (enter < 0) return LpStatus::Infeasible;

        const int leave = basic_[r];
        const double bound = below ? lo_[leave] : hi_[leave];
        const double delta = (xb_[r] - bound) / best_alpha;
        const double theta = d_[enter] / best_alpha;

        std::vector<double>& w = work_col_;
        std::fill(w.begin(), w.end(), 0.0);
        for (const auto& [row, a] : column(enter))
            for (int i = 0; i < m_; ++i) w[i] += binv_[static_cast<size_t>(i) * m_ + row] * a;

        const double enter_val = nb_value(enter) + delta;
        for (int i = 0; i < m_; ++i)
            if (i != r) xb_[i] -= w[i] * delta;
        xb_[r] = enter_val;
        basic_[r] = enter;
        vstat_[leave] = below ? AtLower : AtUpper;
        vstat_[enter] = Basic;

        pivot_update(r, w);
        // Reduced costs move by theta along the pivot row.
        if (theta != 0.0) {
            for (int q = 0; q < nt_; ++q) {
                if (q == enter || q == leave || vstat_[q] == Basic) continue;
                const double a = alpha[q];
                if (a != 0.0) d_[q] -= theta * a;
            }
        }
        d_[leave] = -theta;
        d_[enter] = 0.0;
    }
    return LpStatus::NeedFallback;
}

LpStatus DenseSimplex::solve_from_scratch(const std::vector<double>& lo,
                                          const std::vector<double>& hi) {
    dual_ready_ = false;
    set_structural_bounds(lo, hi);
    for (int j = 0; j < core_->n; ++j)
        if (lo_[j] > hi_[j]) return LpStatus::Infeasible;

    // Nonbasic start: every structural at its bound nearest zero.
    for (int j = 0; j < core_->n; ++j) {
        if (lo_[j] > -kInf) vstat_[j] = AtLower;
        else if (hi_[j] < kInf) vstat_[j] = AtUpper;
        else vstat_[j] = FreeNB;
    }
    for (int i = 0; i < m_; ++i) {
        const int a = core_->n + i;
        art_sign_[i] = 0;
        lo_[a] = 0.0;
        hi_[a] = 0.0;
        vstat_[a] = AtLower;
    }

    // Residual per row with all structurals at their bounds and slacks at 0.
    std::vector<double> r(m_, 0.0);
    for (int i = 0; i < m_; ++i) r[i] = core_->rhs[i];
    for (int j = 0; j < core_->ns; ++j) {
        const double v = nb_value(j);
        if (v == 0.0) continue;
        for (const auto& [row, a] : core_->cols[j]) r[row] -= a * v;
    }

    basic_.assign(m_, -1);
    binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
    bool need_phase1 = false;
    for (int i = 0; i < m_; ++i) {
        const int s = core_->ns + i;
        if (r[i] >= lo_[s] && r[i] <= hi_[s]) {
            basic_[i] = s;
            vstat_[s] = Basic;
            xb_[i] = r[i];
            binv_[static_cast<size_t>(i) * m_ + i] = 1.0;
        } else {
            // Slack pinned at the bound nearest the residual; an artificial
            // absorbs the rest.
            const double sval = r[i] < lo_[s] ? lo_[s] : hi_[s];
            vstat_[s] = r[i] < lo_[s] ? AtLower : AtUpper;
            const double rest = r[i] - sval;
            const int a = core_->n + i;
            art_sign_[i] = rest >= 0 ? 1 : -1;
            lo_[a] = 0.0;
            hi_[a] = kInf;
            basic_[i] = a;
            vstat_[a] = Basic;
            xb_[i] = std::fabs(rest);
            binv_[static_cast<size_t>(i) * m_ + i] = art_sign_[i];
            need_phase1 = true;
        }
    }
    pivots_since_factor_ = 0;

    const int64_t iter_limit = 20000 + 200LL * (m_ + core_->n);
    if (need_phase1) {
        std::fill(cost1_.begin(), cost1_.end(), 0.0);
        for (int i = 0; i < m_; ++i)
            if (art_sign_[i] != 0) cost1_[core_->n + i] = 1.0;
        cost_ = &cost1_;
        compute_reduced();
        const LpStatus st = primal_loop(iter_limit);
        if (st == LpStatus::Numeric) return st;
        if (st == LpStatus::Unbounded) return LpStatus::Numeric;
        double scale = 1.0;
        for (int i = 0; i < m_; ++i) scale = std::max(scale, std::fabs(core_->rhs[i]));
        if (objective_internal() > 1e-7 * scale) return LpStatus::Infeasible;
        // Lock artificials out of the problem for phase 2.
        for (int i = 0; i < m_; ++i) {
            const int a = core_->n + i;
            hi_[a] = 0.0;
            if (vstat_[a] != Basic) vstat_[a] = AtLower;
        }
    }

    cost_ = &cost2_;
    compute_reduced();
    const LpStatus st = primal_loop(iter_limit);
    dual_ready_ = st == LpStatus::Optimal;
    return st;
}

LpStatus DenseSimplex::reoptimize(const std::vector<double>& lo, const std::vector<double>& hi,
                                  double cutoff) {
    if (basic_.empty() || !dual_ready_) return LpStatus::NeedFallback;
    set_structural_bounds(lo, hi);
    for (int j = 0; j < core_->ns; ++j)
        if (lo_[j] > hi_[j]) return LpStatus::Infeasible;
    cost_ = &cost2_;

    // Re-anchor nonbasic variables whose resting bound moved or vanished.
    for (int j = 0; j < nt_; ++j) {
        if (vstat_[j] == Basic) continue;
        if (vstat_[j] == AtLower && lo_[j] <= -kInf)
            vstat_[j] = hi_[j] < kInf ? AtUpper : FreeNB;
        else if (vstat_[j] == AtUpper && hi_[j] >= kInf)
            vstat_[j] = lo_[j] > -kInf ? AtLower : FreeNB;
    }
    compute_xb();
    return dual_loop(300 + 6LL * m_, cutoff);
}

double DenseSimplex::objective_internal() const {
    double s = 0.0;
    for (int j = 0; j < nt_; ++j) {
        const double c = (*cost_)[j];
        if (c == 0.0) continue;
        s += c * (vstat_[j] == Basic ? 0.0 : nb_value(j));
    }
    for (int i = 0; i < m_; ++i) {
        const double c = (*cost_)[basic_[i]];
        if (c != 0.0) s += c * xb_[i];
    }
    return s;
}

void DenseSimplex::extract_structurals(std::vector<double>& out) const {
    out.assign(core_->ns, 0.0);
    for (int j = 0; j < core_->ns; ++j)
        if (vstat_[j] != Basic) out[j] = nb_value(j);
    for (int i = 0; i < m_; ++i)
        if (basic_[i] < core_->ns) out[basic_[i]] = xb_[i];
}

double DenseSimplex::max_scaled_residual() const {
    std::vector<double> x(nt_, 0.0);
    for (int j = 0; j < nt_; ++j)
        if (vstat_[j] != Basic) x[j] = nb_value(j);
    for (int i = 0; i < m_; ++i) x[basic_[i]] = xb_[i];

    double worst = 0.0;
    std::vector<double> act(m_, 0.0);
    std::vector<double> mag(m_, 0.0);
    for (int j = 0; j < nt_; ++j) {
        if (x[j] == 0.0) continue;
        for (const auto& [row, a] : column(j)) {
            act[row] += a * x[j];
            mag[row] = std::max(mag[row], std::fabs(a * x[j]));
        }
    }
    for (int i = 0; i < m_; ++i) {
        const double scale = std::max({1.0, std::fabs(core_->rhs[i]), mag[i]});
        worst = std::max(worst, std::fabs(act[i] - core_->rhs[i]) / scale);
    }
    // Bound violations of basic variables, same scaling idea.
    for (int i = 0; i < m_; ++i) {
        const int b = basic_[i];
        const double scale = std::max(1.0, std::fabs(xb_[i]));
        if (lo_[b] > -kInf) worst = std::max(worst, (lo_[b] - xb_[i]) / scale);
        if (hi_[b] < kInf) worst = std::max(worst, (xb_[i] - hi_[b]) / scale);
    }
    return worst;
}

bool DenseSimplex::refresh() {
    if (basic_.empty()) return false;
    if (!factorize()) return false;
    compute_xb();
    if (cost_) compute_reduced();
    return true;
}

}  // namespace offloadsim::milp::detail
