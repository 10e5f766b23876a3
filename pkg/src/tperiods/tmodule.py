"""t-module data (phi_t, dphi_t), exponential/logarithm skew series, their
evaluation with precision control, and the local-isometry radius.

The coefficient matrices of phi_t = sum A_i tau^i live either over K =
F_q(theta) exactly (closed-form models) or over the tracked local model
(lattice-built modules); all recursions below are written once against the
domain adapter and stay exact in both senses.

The order-n coefficient Q_n of the exponential solves the Sylvester equation

    Q_n (dphi_t)^(n) - A_0 Q_n = sum_{i=1..min(n,s)} A_i Q_{n-i}^(i),

where ^(i) twists entries by q^i.  Writing dphi_t = theta + N with N
nilpotent, the Sylvester operator is (theta^(q^n) - theta) (id + nilpotent),
so its inverse is a finite geometric series -- no elimination and, over K, a
single shared denominator per matrix.

Coefficients are built lazily: degree growth is exponential in the order, but
so are the valuations, and every consumer first consults the integer
valuation-bound recursion below to decide whether an order is visible at the
working precision at all.
"""

from __future__ import annotations

from fractions import Fraction

from .localfield import LocalFieldCfg, PINF
from .ratfunc import QPoly, RatFunc
from .ktalgebra import Matrix, SkewPoly


class TModuleError(Exception):
    pass


def _mat_is_zero(m: Matrix) -> bool:
    return all(a.is_zero() for r in m.rows for a in r)


class TModuleDef:
    """Dimension-d t-module: phi_t = A_0 + A_1 tau + ... + A_s tau^s with
    A_0 = theta + N, N nilpotent (verified: N^d = 0)."""

    def __init__(self, dom, mats, r: int, name: str = "t-module"):
        if not mats:
            raise TModuleError("phi_t needs at least the tau^0 coefficient")
        self.dom = dom
        self.mats = [m if isinstance(m, Matrix) else Matrix(m) for m in mats]
        d = self.mats[0].nrows
        if any(m.nrows != d or m.ncols != d for m in self.mats):
            raise TModuleError("phi_t coefficients must be square of equal size")
        self.d = d
        self.r = r
        self.s = len(self.mats) - 1
        self.name = name
        if _mat_is_zero(self.mats[-1]) and self.s > 0:
            raise TModuleError("leading tau-coefficient of phi_t is zero")
        theta = dom.theta()
        self.N = self.mats[0] - Matrix.identity(d, theta, dom.zero())
        power = self.N
        for _ in range(d - 1):
            power = power * self.N
        if not _mat_is_zero(power):
            raise TModuleError("dphi_t - theta is not nilpotent of order d")
        self._exp_state: _ExpState | None = None
        self._local_cache: dict = {}
        self._bound_cache: dict = {}

    # -- structural helpers -------------------------------------------------------

    def is_drinfeld(self) -> bool:
        return self.d == 1

    def phi_skew(self) -> SkewPoly:
        return SkewPoly(list(self.mats))

    def dphi_skew(self) -> SkewPoly:
        return SkewPoly([self.mats[0]])

    def dphi_inverse(self) -> Matrix:
        """(theta + N)^(-1) = sum_{k<d} (-1)^k theta^(-k-1) N^k, exact."""
        dom = self.dom
        theta_inv = dom.inv(dom.theta())
        acc = Matrix.identity(self.d, theta_inv, dom.zero())
        power = Matrix.identity(self.d, dom.one(), dom.zero())
        for k in range(1, self.d):
            power = power * self.N
            coef = theta_inv ** (k + 1)
            if k % 2 == 1:
                coef = -coef
            acc = acc + power.scale(coef)
        return acc

    def exp_state(self) -> "_ExpState":
        if self._exp_state is None:
            self._exp_state = _ExpState(self)
        return self._exp_state

    # -- local evaluation ----------------------------------------------------------

    def local_mats(self, cfg: LocalFieldCfg):
        key = ("mats", id(cfg))
        if key not in self._local_cache:
            self._local_cache[key] = [m.map(lambda x: self.dom.to_local(x, cfg))
                                      for m in self.mats]
        return self._local_cache[key]

    def dphi_local(self, cfg: LocalFieldCfg) -> Matrix:
        return self.local_mats(cfg)[0]

    def dphi_inv_local(self, cfg: LocalFieldCfg) -> Matrix:
        key = ("dphi_inv", id(cfg))
        if key not in self._local_cache:
            self._local_cache[key] = self.dphi_inverse().map(
                lambda x: self.dom.to_local(x, cfg))
        return self._local_cache[key]

    def phi_point(self, cfg: LocalFieldCfg, vec):
        """phi_t applied to a point of E(C_infty): sum A_i vec^(q^i)."""
        mats = self.local_mats(cfg)
        out = mats[0].apply(vec)
        cur = vec
        for i in range(1, self.s + 1):
            cur = [x.twist(1) for x in cur]
            term = mats[i].apply(cur)
            out = [a + b for a, b in zip(out, term)]
        return out

    def to_json(self):
        return {
            "name": self.name,
            "d": self.d,
            "r": self.r,
            "s": self.s,
            "mats": [[[x.to_json() if hasattr(x, "to_json") else x.to_json_dict()
                       for x in row] for row in m.rows] for m in self.mats],
        }

    def __repr__(self):
        return f"TModuleDef({self.name}, d={self.d}, r={self.r}, s={self.s})"


# -- exponential / logarithm state -----------------------------------------------------


def _exact_poly_mats(E: TModuleDef):
    """phi_t coefficient matrices and N as QPoly matrices, or None when some
    entry is genuinely rational (the generic path handles those)."""
    if E.dom.kind != "exact":
        return None
    out = []
    for m in list(E.mats) + [E.N]:
        rows = []
        for r in m.rows:
            row = []
            for x in r:
                if x.den.degree() != 0:
                    return None
                c = x.den.leading()
                num = x.num if c == x.num.ctx.one() else x.num.scale(c.inv())
                row.append(num)
            rows.append(row)
        out.append(Matrix(rows))
    return out[:-1], out[-1]


def _poly_mat_twist(m: Matrix, k: int) -> Matrix:
    return m.map(lambda x: x.twist(k))


def _dm_add(a, b):
    (na, da), (nb, db) = a, b
    if da == db:
        return (na + nb, da)
    return (na.map(lambda x: x * db) + nb.map(lambda x: x * da), da * db)


class _ExpState:
    """Incrementally built exponential/logarithm coefficients.

    Over K the recursion runs on shared-denominator QPoly matrices (pairs);
    every order also materializes an unreduced RatFunc matrix view.  Over the
    local model everything is element-wise."""

    def __init__(self, E: TModuleDef):
        self.E = E
        self.exact = _exact_poly_mats(E)
        dom = E.dom
        d = E.d
        if self.exact is not None:
            ctx = dom.ctx
            one = QPoly.const(ctx, 1)
            ident = Matrix([[one if i == j else QPoly.zero(ctx) for j in range(d)]
                            for i in range(d)])
            self.qpairs = [(ident, one)]
            self.ppairs = [(ident, one)]
            self._thq = QPoly.theta(ctx)
        else:
            self.qpairs = None
            self.ppairs = None
        ident_dom = Matrix.identity(d, dom.one(), dom.zero())
        self.Q = [ident_dom]
        self.P = [ident_dom]

    def ensure_q(self, n: int):
        while len(self.Q) <= n:
            self._extend_q()

    def ensure_p(self, n: int):
        self.ensure_q(n)
        while len(self.P) <= n:
            self._extend_p()

    def _extend_q(self):
        E = self.E
        n = len(self.Q)
        if self.exact is not None:
            amats, nmat = self.exact
            ctx = E.dom.ctx
            d = E.d
            one = QPoly.const(ctx, 1)
            zero_m = Matrix.filled(d, d, QPoly.zero(ctx))
            rhs = None
            for i in range(1, min(n, E.s) + 1):
                if _mat_is_zero(amats[i]):
                    continue
                ni, di = self.qpairs[n - i]
                term = (amats[i] * _poly_mat_twist(ni, i), di.twist(i))
                rhs = term if rhs is None else _dm_add(rhs, term)
            if rhs is None:
                rhs = (zero_m, one)
            c = self._thq.twist(n) - self._thq
            n_tw = _poly_mat_twist(nmat, n)
            K2 = 2 * d - 1
            acc = rhs[0]
            cur = rhs[0]
            done_k = 0
            for k in range(1, K2):
                cur = cur * n_tw - nmat * cur
                acc = acc.map(lambda x: x * c)
                done_k = k
                if _mat_is_zero(cur):
                    break
                if k % 2 == 1:
                    acc = acc - cur
                else:
                    acc = acc + cur
            if done_k < K2 - 1:
                rest = c ** (K2 - 1 - done_k)
                acc = acc.map(lambda x: x * rest)
            den = rhs[1] * (c ** K2)
            self.qpairs.append((acc, den))
            self.Q.append(acc.map(lambda x, dd=den: RatFunc(x, dd, reduce=False)))
            return
        dom = E.dom
        d = E.d
        theta = dom.theta()
        zero = Matrix.identity(d, dom.zero(), dom.zero())
        rhs = zero
        for i in range(1, min(n, E.s) + 1):
            rhs = rhs + E.mats[i] * self.Q[n - i].twist(i)
        c = theta.twist(n) - theta
        if dom.is_zero(c):
            raise TModuleError("Sylvester operator is singular; corrupted input")
        cinv = dom.inv(c)
        n_tw = E.N.twist(n)
        acc = rhs.scale(cinv)
        cur = rhs
        coef = cinv
        for k in range(1, 2 * d - 1):
            cur = cur * n_tw - E.N * cur
            if _mat_is_zero(cur):
                break
            coef = coef * cinv
            term = cur.scale(coef)
            if k % 2 == 1:
                term = -term
            acc = acc + term
        self.Q.append(acc)

    def _extend_p(self):
        """P_n = -sum_{i<n} P_i Q_{n-i}^(i), the compositional inverse."""
        E = self.E
        n = len(self.P)
        if self.exact is not None:
            acc = None
            for i in range(0, n):
                pi_n, pi_d = self.ppairs[i]
                qi_n, qi_d = self.qpairs[n - i]
                term = (pi_n * _poly_mat_twist(qi_n, i), pi_d * qi_d.twist(i))
                acc = term if acc is None else _dm_add(acc, term)
            self.ppairs.append((-acc[0], acc[1]))
            num, den = self.ppairs[-1]
            self.P.append(num.map(lambda x, dd=den: RatFunc(x, dd, reduce=False)))
            return
        dom = E.dom
        zero = Matrix.identity(E.d, dom.zero(), dom.zero())
        acc = zero
        for i in range(0, n):
            acc = acc + self.P[i] * self.Q[n - i].twist(i)
        self.P.append(-acc)


class ExpLogSeries:
    """View of the exponential sum Q_j tau^j and logarithm sum P_j tau^j with
    Q_0 = P_0 = I through tau-order J."""

    def __init__(self, E: TModuleDef, J: int):
        self.E = E
        self.J = J

    @property
    def Q(self):
        self.E.exp_state().ensure_q(self.J)
        return self.E.exp_state().Q[: self.J + 1]

    @property
    def P(self):
        self.E.exp_state().ensure_p(self.J)
        return self.E.exp_state().P[: self.J + 1]

    def exp_skew(self) -> SkewPoly:
        return SkewPoly(list(self.Q))

    def log_skew(self) -> SkewPoly:
        return SkewPoly(list(self.P))


def exp_series(E: TModuleDef, J: int) -> ExpLogSeries:
    if J < 1:
        raise TModuleError("series order J must be >= 1")
    return ExpLogSeries(E, J)


def log_series(E: TModuleDef, J: int) -> ExpLogSeries:
    series = exp_series(E, J)
    series.P  # force construction
    return series


# -- valuation bounds (cheap integer recursion, no coefficient construction) -----------


def _min_val_matrix(E: TModuleDef, cfg: LocalFieldCfg, m: Matrix):
    v = PINF
    for row in m.rows:
        for x in row:
            xv, _ = E.dom.local_valuation(x, cfg)
            if xv < v:
                v = xv
    return v


def exp_val_bounds(E: TModuleDef, cfg: LocalFieldCfg, J: int):
    """Lower bounds on the z-valuation of Q_j(theta), from the Sylvester
    recursion: the inverse contributes at least ram*q^n - nilpotent slack."""
    key = ("qb", id(cfg))
    got = E._bound_cache.get(key, [])
    if len(got) > J:
        return got
    q = E.dom.q
    ram = cfg.ram
    va = [_min_val_matrix(E, cfg, m) for m in E.mats]
    vn = _min_val_matrix(E, cfg, E.N)
    K2 = 2 * E.d - 1
    v = got if got else [0]
    for n in range(len(v), J + 1):
        rhs = PINF
        for i in range(1, min(n, E.s) + 1):
            if va[i] == PINF or v[n - i] == PINF:
                continue
            cand = va[i] + (q ** i) * v[n - i]
            rhs = min(rhs, cand)
        if rhs == PINF:
            v.append(PINF)
            continue
        solve = min(
            (k * (vn if (vn != PINF and vn < 0) else 0)
             * (q ** n if (vn != PINF and vn < 0) else 1))
            + (k + 1) * ram * (q ** n)
            for k in range(K2))
        v.append(rhs + solve)
    E._bound_cache[key] = v
    return v


def log_val_bounds(E: TModuleDef, cfg: LocalFieldCfg, J: int):
    """Lower bounds for P_j(theta) from P_n = -sum P_i Q_{n-i}^(i)."""
    key = ("pb", id(cfg))
    got = E._bound_cache.get(key, [])
    if len(got) > J:
        return got
    q = E.dom.q
    qb = exp_val_bounds(E, cfg, J)
    v = got if got else [0]
    for n in range(len(v), J + 1):
        best = PINF
        for i in range(0, n):
            if v[i] == PINF or qb[n - i] == PINF:
                continue
            best = min(best, v[i] + (q ** i) * qb[n - i])
        v.append(best)
    E._bound_cache[key] = v
    return v


def exp_functional_residuals(E: TModuleDef, J: int):
    """Coefficients of e o dphi_t - phi_t o e through tau-order J, recomputed
    from the generic composition rule (independent of the solve that built Q).

    Over K this returns exact zero matrices when the functional equation
    holds; over the local model the entries are zero-to-precision."""
    state = E.exp_state()
    state.ensure_q(J)
    if state.exact is not None:
        amats, _ = state.exact
        out = []
        for n in range(J + 1):
            qn, qd = state.qpairs[n]
            lhs = (qn * _poly_mat_twist(amats[0], n), qd)
            rhs = None
            for i in range(0, min(n, E.s) + 1):
                ni, di = state.qpairs[n - i]
                term = (amats[i] * _poly_mat_twist(ni, i), di.twist(i))
                rhs = term if rhs is None else _dm_add(rhs, term)
            diff = _dm_add(lhs, (-rhs[0], rhs[1]))
            out.append(diff[0].map(lambda x, dd=diff[1]: RatFunc(x, dd, reduce=False)))
        return out
    series = exp_series(E, J)
    lhs = series.exp_skew() * E.dphi_skew()
    rhs = E.phi_skew() * series.exp_skew()
    diff = lhs - rhs
    return [diff.coeff(n) for n in range(J + 1)]


def log_exp_compose_residuals(E: TModuleDef, J: int):
    """Coefficients of (log o exp - id) through tau-order J."""
    series = log_series(E, J)
    comp = series.log_skew() * series.exp_skew()
    ident = Matrix.identity(E.d, E.dom.one(), E.dom.zero())
    out = []
    for n in range(J + 1):
        c = comp.coeff(n)
        if n == 0:
            c = c - ident
        out.append(c)
    return out


# -- evaluation ---------------------------------------------------------------------


def _vec_val(vec):
    return min(x.valuation_lb() for x in vec)


def vec_q_norm_exp(cfg: LocalFieldCfg, vec) -> Fraction:
    """log_q of the max-norm of a coordinate vector (None for zero vectors)."""
    v = _vec_val(vec)
    if v == PINF:
        return None
    return -Fraction(int(v), cfg.ram)


def local_matrix(E: TModuleDef, cfg: LocalFieldCfg, tag: str, getter, j: int,
                 prec: int) -> Matrix:
    """Evaluated coefficient matrix at (at least) the requested absolute
    precision, cached per tau-order."""
    cache = E._local_cache.setdefault((tag, id(cfg)), {})
    got = cache.get(j)
    if got is None or got[0] < prec:
        m = getter(j).map(lambda c: E.dom.to_local(c, cfg, prec))
        cache[j] = (prec, m)
        return m
    return got[1]


def _matrix_valuation_lb(E: TModuleDef, cfg: LocalFieldCfg, m: Matrix):
    return _min_val_matrix(E, cfg, m)


def _eval_skew_series(E: TModuleDef, cfg: LocalFieldCfg, tag: str, getter, bounds,
                      x, J: int, context: str):
    """sum coeff_j(theta) x^(q^j), stopping once terms sit strictly below the
    accumulated precision with decreasing norms.

    The integer bound list screens invisible orders before any coefficient is
    built, and coefficients are evaluated at precision ~ default + q^j |val x|
    so large-norm arguments do not erode the target precision."""
    if _vec_val(x) == PINF:
        return list(x), min(a.prec for a in x)
    q = E.dom.q
    vx = int(_vec_val(x))
    acc = list(x)
    cur = x
    prev_val = _vec_val(x)
    for j in range(1, J + 1):
        cur = [c.twist(1) for c in cur]
        aprec = min(a.prec for a in acc)
        vb = bounds[j]
        bound = (vb + q ** j * vx) if vb != PINF else PINF
        if bound >= aprec and bound > prev_val:
            return acc, aprec
        prec_need = cfg.default_prec + max(0, -vx) * q ** j
        term = local_matrix(E, cfg, tag, getter, j, prec_need).apply(cur)
        acc = [a + b for a, b in zip(acc, term)]
        tval = _vec_val(term)
        aprec = min(a.prec for a in acc)
        if tval >= aprec and (tval == PINF or tval > prev_val):
            return acc, aprec
        if tval != PINF:
            prev_val = tval
    raise TModuleError(
        f"{context}: series did not certify convergence within J={J} terms; "
        f"raise the series order")


def _q_getter(E: TModuleDef):
    state = E.exp_state()

    def get(j):
        state.ensure_q(j)
        return state.Q[j]

    return get


def _p_getter(E: TModuleDef):
    state = E.exp_state()

    def get(j):
        state.ensure_p(j)
        return state.P[j]

    return get


def eval_exp(E: TModuleDef, cfg: LocalFieldCfg, x, J: int = 12):
    """Evaluate the exponential at a Lie-algebra vector.  Returns (value,
    achieved absolute precision)."""
    if len(x) != E.d:
        raise TModuleError("argument dimension mismatch")
    return _eval_skew_series(E, cfg, "expQ", _q_getter(E), exp_val_bounds(E, cfg, J),
                             x, J, "eval_exp")


def eval_log(E: TModuleDef, cfg: LocalFieldCfg, x, J: int = 12):
    """Evaluate the logarithm; the argument must lie strictly inside the
    isometry radius."""
    if len(x) != E.d:
        raise TModuleError("argument dimension mismatch")
    eps, _ = isometry_radius(E, cfg, J)
    nx = vec_q_norm_exp(cfg, x)
    if nx is not None and nx >= eps:
        raise TModuleError(
            f"eval_log outside the isometry radius: log_q|x| = {nx} >= {eps}")
    return _eval_skew_series(E, cfg, "logP", _p_getter(E), log_val_bounds(E, cfg, J),
                             x, J, "eval_log")


def isometry_radius(E: TModuleDef, cfg: LocalFieldCfg, J: int = 12):
    """(log_q epsilon, boundary_flag): epsilon = min_j ||Q_j||^(-1/(q^j - 1)),
    the certified bi-isometry radius of the exponential.

    Exact candidates are computed for small orders; beyond those the bound
    recursion certifies that the candidates can only grow.  boundary_flag is
    set when the minimizer sits at j = J or a norm is only precision-bounded."""
    q = E.dom.q
    bounds = exp_val_bounds(E, cfg, J)
    state = E.exp_state()
    best = None
    best_j = None
    uncertified = False
    for j in range(1, J + 1):
        denom = cfg.ram * (q ** j - 1)
        if bounds[j] != PINF and best is not None:
            if Fraction(int(bounds[j]), denom) >= best:
                continue  # certified not to lower the minimum
        state.ensure_q(j)
        vals = []
        exact = True
        for row in state.Q[j].rows:
            for x in row:
                v, ok = E.dom.local_valuation(x, cfg)
                exact = exact and ok
                vals.append(v)
        v = min(vals)
        if v == PINF or not exact:
            uncertified = uncertified or not exact
            continue
        cand = Fraction(int(v), denom)
        if best is None or cand < best:
            best, best_j = cand, j
    if best is None:
        return Fraction(10 ** 9), True
    return best, best_j == J or uncertified


def check_torsion_system(E: TModuleDef, cfg: LocalFieldCfg, h, depth: int):
    """Verify that the t-coefficients of h form a compatible torsion system:
    phi_t(e_0) ~ 0 and phi_t(e_{i+1}) ~ e_i for i < depth.  Report only."""
    series = [h] if not isinstance(h, (list, tuple)) else list(h)
    D = min(s.t_prec for s in series)
    if depth + 2 > D:
        raise TModuleError("torsion check needs depth + 2 t-coefficients")
    rows = []
    worst = PINF
    worst_index = None
    for i in range(depth + 1):
        e_i = [s.coeffs[i] for s in series]
        if i == 0:
            res = E.phi_point(cfg, e_i)
            v = _vec_val(res)
            rows.append({"index": 0, "relation": "phi_t(e_0) = 0",
                         "residual_valuation": _fmt_val(v)})
            if v < worst:
                worst, worst_index = v, 0
        if i < depth:
            img = E.phi_point(cfg, [s.coeffs[i + 1] for s in series])
            res = [a - b for a, b in zip(img, e_i)]
            v = _vec_val(res)
            rows.append({"index": i + 1, "relation": f"phi_t(e_{i + 1}) = e_{i}",
                         "residual_valuation": _fmt_val(v)})
            if v < worst:
                worst, worst_index = v, i + 1
    return {
        "depth": depth,
        "rows": rows,
        "worst_residual_valuation": _fmt_val(worst),
        "worst_index": worst_index,
    }


def _fmt_val(v):
    return "inf" if v == PINF else int(v)
