"""t-motive data, Anderson generating functions, the lattice isomorphism and
its inverse, and period extraction as special values of prolongations.

The pipeline implemented here:

  1. A motive carries Theta (the twisted action on a fixed basis m of
     Hom(E, G_a)) and A with kappa = A m expressing the coordinate functions.
  2. delta sends a period lambda to the generating series
     sum e(dphi_t^{-i-1} lambda) t^i, an element of H (both t-actions agree);
     its germ at t = theta has principal part -sum (t-theta)^{-k-1} N^k lambda,
     so residues invert delta.
  3. Smith normal form of Theta produces B and sparse coordinate rows
     (i_j, gamma_j); the period matrix is read off as hyperderivatives
     d^(gamma_j - 1) of rows of R^{-1} = B Theta Upsilon^{-1} at t = theta,
     equivalently entries of the last column-block of the prolongation
     rho_[d-1](R^{-1}) at theta.

Twisted germs: the expansion of tau^k(delta(lambda)) around theta follows the
same split as the k = 0 case, with twisted exponential coefficients and
twisted nilpotent parts; for k >= 1 every term is regular at theta.  This is
what provides germs for the rows tau^(i-1)(g_j) of Drinfeld trivializations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .localfield import LocalFieldCfg, LocalNum, PINF
from .ratfunc import QPoly
from .ktalgebra import (Matrix, KtPoly, LocalScalars, kt_det,
                        kt_inv_unimodular, smith_normal_form, factor_t_power)
from .tate import (TateSeries, ThetaGerm, tate_from_ktpoly, germ_from_ktpoly,
                   prolong, residue, TateError)
from .tmodule import (TModuleDef, eval_exp, eval_log,
                      isometry_radius, vec_q_norm_exp, local_matrix,
                      exp_val_bounds, _q_getter, _vec_val, _fmt_val)


class MotiveError(Exception):
    pass


class MotiveDef:
    """Theta with tau(m) = Theta m, and A with kappa = A m; det(Theta) must be
    a unit times (t - theta)^s, s >= 1 (verified at construction)."""

    def __init__(self, E: TModuleDef, theta_mat: Matrix, a_mat: Matrix):
        self.E = E
        self.r = theta_mat.nrows
        if theta_mat.ncols != self.r:
            raise MotiveError("Theta must be square")
        if a_mat.nrows != E.d or a_mat.ncols != self.r:
            raise MotiveError("A must be d x r")
        self.Theta = theta_mat
        self.A = a_mat
        dom = E.dom
        det = kt_det(theta_mat)
        fact = factor_t_power(det, KtPoly.t_minus_theta(dom))
        if fact is None or fact[1] < 1:
            raise MotiveError("det(Theta) is not c (t-theta)^s with s >= 1")
        self.det_const, self.det_power = fact
        self._coordinate_data = None

    @property
    def dom(self):
        return self.E.dom

    def to_json(self):
        return {
            "r": self.r,
            "det_power": self.det_power,
            "Theta": [[p.to_json() for p in row] for row in self.Theta.rows],
            "A": [[p.to_json() for p in row] for row in self.A.rows],
        }


def check_motive_relation(M: MotiveDef):
    """Exact consistency of (phi_t, Theta, A):
        t A = A_0 A + sum_i A_i tau^i(A) tau^(i-1)(Theta) ... tau(Theta) Theta.
    Returns the worst residual (exactly zero over K; zero-to-precision over
    the local model)."""
    E = M.E
    dom = E.dom
    lhs = M.A.map(lambda p: p.shift(1))
    prod = Matrix.identity(M.r, KtPoly.const(dom, dom.one()), KtPoly.zero(dom))
    rhs = None
    for i in range(0, E.s + 1):
        const = E.mats[i].map(lambda c: KtPoly.const(dom, c))
        term = const * M.A.twist(i) * prod
        rhs = term if rhs is None else rhs + term
        prod = prod.twist(1) * M.Theta  # tau^i(Theta)...Theta for the next i
    resid = lhs - rhs
    worst = PINF
    for row in resid.rows:
        for p in row:
            for c in p.coeffs:
                v, _ = dom.local_valuation(c, _any_cfg(dom))
                if v < worst:
                    worst = v
    return {"residual_valuation": _fmt_val(worst),
            "exact_zero": all(p.is_zero() for row in resid.rows for p in row)}


def _any_cfg(dom):
    if isinstance(dom, LocalScalars):
        return dom.cfg
    # exact domain: valuations are degree data; any ramification-1 view works
    class _V:
        ram = 1
    return _V()


# -- Anderson generating functions -----------------------------------------------------


def agf(E: TModuleDef, cfg: LocalFieldCfg, lam, D: int = 40, J: int = 12):
    """delta(lambda): the vector of d Tate series whose t^i coefficient is
    e(dphi_t^{-i-1} lambda).  Refuses input that does not exp-vanish."""
    lam = list(lam)
    if len(lam) != E.d:
        raise MotiveError("lambda has wrong dimension")
    val, prec = eval_exp(E, cfg, lam, J)
    if not all(x.is_zero() for x in val):
        raise MotiveError(
            f"exp(lambda) is not zero to precision (worst valuation "
            f"{_fmt_val(_vec_val(val))}); input is not in the period lattice")
    dphi_inv = E.dphi_inv_local(cfg)
    coeffs = []
    x = lam
    for _ in range(D):
        x = dphi_inv.apply(x)
        e_i, _ = eval_exp(E, cfg, x, J)
        coeffs.append(e_i)
    return [TateSeries(cfg, [coeffs[i][c] for i in range(D)]) for c in range(E.d)]


def phi_series(E: TModuleDef, cfg: LocalFieldCfg, h):
    """phi_t applied coefficient-wise to a vector of Tate series."""
    h = [h] if isinstance(h, TateSeries) else list(h)
    mats = E.local_mats(cfg)
    D = min(s.t_prec for s in h)
    phi_h = [TateSeries.zero(cfg, D) for _ in range(E.d)]
    for i in range(0, E.s + 1):
        twisted = [s.twist(i).truncate(D) for s in h]
        for a in range(E.d):
            acc = phi_h[a]
            for b in range(E.d):
                c = mats[i][a, b]
                if c.is_exact_zero():
                    continue
                acc = acc + twisted[b].scale(c)
            phi_h[a] = acc
    return phi_h


def check_H_membership(E: TModuleDef, cfg: LocalFieldCfg, h):
    """Residual report for phi_t(h) = h * t, coefficient-wise."""
    h = [h] if isinstance(h, TateSeries) else list(h)
    if len(h) != E.d:
        raise MotiveError("h has wrong dimension")
    D = min(s.t_prec for s in h)
    phi_h = phi_series(E, cfg, h)
    t_h = [s.shift_t(1).truncate(D) for s in h]
    worst = PINF
    floor = PINF
    per_coord = []
    for a in range(E.d):
        resid = phi_h[a] - t_h[a]
        # the t^0 coefficient of h*t is 0; the comparison is valid through D-1
        v = resid.worst_valuation()
        per_coord.append(_fmt_val(v))
        worst = min(worst, v)
        floor = min(floor, resid.precision_floor())
    return {
        "worst_residual_valuation": _fmt_val(worst),
        "per_coordinate": per_coord,
        "precision_floor": _fmt_val(floor),
        "member": worst == PINF or (floor != PINF and worst >= floor),
    }


def _twisted_resolvent_inverse(E: TModuleDef, cfg: LocalFieldCfg, i: int) -> Matrix:
    """((theta^(q^i) - theta) I + N^(i))^(-1) over the local model, exact via
    the nilpotent geometric series."""
    dom_loc = E.dphi_local(cfg)
    d = E.d
    ident = Matrix.identity(d, cfg.one(), cfg.zero(PINF))
    n_loc = dom_loc - Matrix.identity(d, cfg.theta, cfg.zero(PINF))
    n_tw = n_loc.twist(i)
    c = cfg.theta.twist(i) - cfg.theta
    cinv = c.inv()
    acc = ident.scale(cinv)
    power = ident
    coef = cinv
    for k in range(1, d):
        power = power * n_tw
        coef = coef * cinv
        term = power.scale(coef)
        if k % 2 == 1:
            term = -term
        acc = acc + term
    return acc


def agf_twisted_germ(E: TModuleDef, cfg: LocalFieldCfg, lam, k: int = 0,
                     g_order: int | None = None, J: int = 12):
    """Germ at t = theta of tau^k(delta(lambda)) as a vector of d ThetaGerms.

    k = 0 carries the principal part -sum_{u<d} (t-theta)^(-u-1) N^u lambda;
    every twisted term (k + j >= 1) is regular and expands through the
    resolvent powers of dphi^(k+j) - theta."""
    lam = list(lam)
    if g_order is None:
        g_order = 2 * E.d
    d = E.d
    qbounds = exp_val_bounds(E, cfg, J)
    getq = _q_getter(E)
    vlam = _vec_val(lam)
    vlam_i = 0 if vlam == PINF else min(0, int(vlam))
    n_loc = E.dphi_local(cfg) - Matrix.identity(d, cfg.theta, cfg.zero(PINF))
    # coefficient accumulators for exponents -d .. g_order-1
    lo = -d if k == 0 else 0
    cols = [[cfg.zero(PINF) for _ in range(d)] for _ in range(g_order - lo)]
    if k == 0:
        vec = lam
        for u in range(d):
            cols[d - 1 - u] = [cols[d - 1 - u][c] - vec[c] for c in range(d)]
            vec = n_loc.apply(vec)
        j_start = 1
    else:
        j_start = 0
    history = []
    decayed = False
    for j in range(j_start, J + 1):
        i = k + j
        floor_now = min(c.prec for col in cols for c in col)
        vq_lb = qbounds[j]
        if vq_lb == PINF:
            decayed = True
            break
        bound = vq_lb + (cfg.base.q ** i) * (vlam_i + cfg.ram)
        if len(history) >= 1 and bound > history[-1] and bound >= floor_now:
            decayed = True
            break
        prec_need = cfg.default_prec + max(0, -vlam_i) * (cfg.base.q ** i)
        qj = local_matrix(E, cfg, "expQ", getq, j, prec_need)
        w = [x.twist(i) for x in lam]
        minv = _twisted_resolvent_inverse(E, cfg, i)
        ej = qj.twist(k) if k else qj
        term_val = PINF
        y = w
        for ell in range(g_order):
            y = minv.apply(y)
            contrib = ej.apply(y)
            idx = ell - lo
            cols[idx] = [cols[idx][c] + contrib[c] for c in range(d)]
            tv = _vec_val(contrib)
            if tv < term_val:
                term_val = tv
        if term_val == PINF:
            decayed = True
            break
        history.append(term_val)
        floor_now = min(c.prec for col in cols for c in col)
        # early small-j terms may plateau; stop once two successive terms sit
        # strictly above the accumulated precision with growing valuations
        if len(history) >= 2 and history[-1] > history[-2] and history[-1] >= floor_now:
            decayed = True
            break
    if not decayed:
        floor = min(c.prec for col in cols for c in col)
        last = history[-1] if history else PINF
        if last != PINF and last < floor:
            raise MotiveError(
                "analytic part of the twisted germ did not fall below the working "
                "precision within J terms; raise the series order J")
    out = []
    for c in range(d):
        out.append(ThetaGerm(cfg, lo, [cols[idx][c] for idx in range(len(cols))],
                             g_order))
    return out


def agf_germ(E: TModuleDef, cfg: LocalFieldCfg, lam, g_order: int | None = None,
             J: int = 12):
    """Germ of delta(lambda) at t = theta (the k = 0 twisted germ)."""
    return agf_twisted_germ(E, cfg, lam, 0, g_order, J)


def inverse_delta(E: TModuleDef, cfg: LocalFieldCfg, h, J: int = 12,
                  cross_check: bool = True):
    """Recover lambda from h in H as dphi_t^(M+1)(log(e_M)).

    Admissibility of M follows the uniqueness argument behind the tail
    construction: with eps the isometry radius and eps0 = eps / ||dphi_t||
    (so that dphi_t maps the small ball into the isometry ball), every
    coefficient e_i for i >= M must satisfy ||e_i|| < eps0.  A single small
    coefficient is not enough -- near a lattice translate its in-ball
    logarithm recovers the wrong period.  Stability is then re-verified at
    M+1 and M+2 and (optionally) against the germ residue of the result."""
    h = [h] if isinstance(h, TateSeries) else list(h)
    membership = check_H_membership(E, cfg, h)
    if not membership["member"]:
        raise MotiveError(
            f"h fails H-membership (worst residual valuation "
            f"{membership['worst_residual_valuation']}); refusing inversion")
    if all(s.is_zero() for s in h):
        return [cfg.zero(s.coeffs[0].prec) for s in h], {
            "M": None, "consistency_valuation": "inf", "membership": membership}
    D = min(s.t_prec for s in h)
    eps, _ = isometry_radius(E, cfg, J)
    dphi = E.dphi_local(cfg)
    dphi_norm = -min(x.valuation_lb() for row in dphi.rows for x in row)
    eps0 = eps - Fraction(int(dphi_norm), cfg.ram)
    norms = []
    for M in range(D):
        e_M = [s.coeffs[M] for s in h]
        nrm = vec_q_norm_exp(cfg, e_M)
        norms.append(nrm if nrm is not None else Fraction(-10 ** 9))
    start = None
    for M in range(D - 2):
        if all(n < eps0 for n in norms[M:]):
            start = M
            break
    if start is None:
        raise MotiveError("no tail of h stays inside the contracted isometry ball; "
                          "raise the t-truncation")
    lam_at = []
    for M in (start, start + 1, start + 2):
        e_M = [s.coeffs[M] for s in h]
        y, _ = eval_log(E, cfg, e_M, J)
        for _ in range(M + 1):
            y = dphi.apply(y)
        lam_at.append(y)
    agree = PINF
    for a, b in ((0, 1), (1, 2)):
        for x, yv in zip(lam_at[a], lam_at[b]):
            d_ = (x - yv).valuation_lb()
            agree = min(agree, d_)
            if not (x - yv).is_zero():
                raise MotiveError(
                    f"tail inversion unstable between M={start + a} and M={start + b} "
                    f"(difference valuation {_fmt_val((x - yv).valuation_lb())})")
    report = {"M": start, "consistency_valuation": _fmt_val(agree),
              "membership": membership}
    lam = lam_at[0]
    if cross_check:
        germ = agf_germ(E, cfg, lam)
        res_val = [residue(g) for g in germ]
        worst = min(((-r) - x).valuation_lb() for r, x in zip(res_val, lam))
        report["germ_residue_agreement_valuation"] = _fmt_val(worst)
        if any(not ((-r) - x).is_zero() for r, x in zip(res_val, lam)):
            raise MotiveError("recovered lambda disagrees with the germ residue route")
    return lam, report


# -- trivializations -----------------------------------------------------------------


@dataclass
class Trivialization:
    upsilon_inv: Matrix            # r x r TateSeries
    germs: Matrix                  # r x r ThetaGerm
    provenance: str                # closed-form | built-from-lattice | user-supplied
    tau_residual_valuation: object = None
    tau_residual_floor: object = None
    _upsilon: Matrix | None = field(default=None, repr=False)

    def upsilon(self) -> Matrix:
        """Upsilon itself (series inverse of the stored Upsilon^(-1), cached)."""
        if self._upsilon is None:
            self._upsilon = ts_mat_inv(self.upsilon_inv)
        return self._upsilon


def ts_mat_from_kt(m: Matrix, cfg: LocalFieldCfg, D: int) -> Matrix:
    return m.map(lambda p: tate_from_ktpoly(p, cfg, D))


def germ_mat_from_kt(m: Matrix, cfg: LocalFieldCfg) -> Matrix:
    return m.map(lambda p: germ_from_ktpoly(p, cfg))


def ts_mat_inv(m: Matrix) -> Matrix:
    """Inverse of a TateSeries matrix by adjugate over the series ring."""
    n = m.nrows
    cfg = m[0, 0].cfg
    D = min(s.t_prec for row in m.rows for s in row)
    if n == 1:
        return Matrix([[m[0, 0].inv()]])
    adj = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = Matrix([r[:i] + r[i + 1:] for k, r in enumerate(m.rows) if k != j])
            c = _ts_det(minor)
            if (i + j) % 2 == 1:
                c = -c
            row.append(c)
        adj.append(row)
    det = _ts_det(m)
    dinv = det.inv()
    return Matrix(adj).map(lambda s: s * dinv)


def _ts_det(m: Matrix) -> TateSeries:
    n = m.nrows
    if n == 1:
        return m[0, 0]
    acc = None
    for j in range(n):
        minor = Matrix([r[:j] + r[j + 1:] for r in m.rows[1:]])
        term = m[0, j] * _ts_det(minor)
        if j % 2 == 1:
            term = -term
        acc = term if acc is None else acc + term
    return acc


def tau_difference_residual(M: MotiveDef, cfg: LocalFieldCfg, ups_inv: Matrix):
    """Residual of tau(Upsilon^{-1}) = Theta Upsilon^{-1} (the defining
    tau-difference system)."""
    D = min(s.t_prec for row in ups_inv.rows for s in row)
    theta_ts = ts_mat_from_kt(M.Theta, cfg, D)
    resid = ups_inv.twist(1).map(lambda s: s.truncate(D)) - theta_ts * ups_inv
    worst = min(s.worst_valuation() for row in resid.rows for s in row)
    floor = min(s.precision_floor() for row in resid.rows for s in row)
    return _fmt_val(worst), _fmt_val(floor)


def build_trivialization_from_lattice(M: MotiveDef, cfg: LocalFieldCfg, lattice,
                                      D: int = 40, J: int = 12,
                                      g_order: int | None = None) -> Trivialization:
    """Drinfeld-only: Upsilon^{-1}[i][j] = tau^(i-1)(g_j) for the Anderson
    generating functions g_j of the lattice basis; germs come from the twisted
    germ expansion.  Validates invertibility and the tau-difference system."""
    E = M.E
    if E.d != 1:
        raise MotiveError("lattice trivializations are built for Drinfeld modules only")
    r = M.r
    if len(lattice) != r:
        raise MotiveError(f"need {r} lattice generators, got {len(lattice)}")
    gs = []
    for lam in lattice:
        vec = lam if isinstance(lam, (list, tuple)) else [lam]
        gs.append(agf(E, cfg, vec, D, J)[0])
    ups_inv = Matrix([[gs[j].twist(i) for j in range(r)] for i in range(r)])
    germs = Matrix([[agf_twisted_germ(E, cfg, [_lam_vec(lattice[j])], i, g_order, J)[0]
                     for j in range(r)] for i in range(r)])
    det = _ts_det(ups_inv)
    if det.is_zero():
        raise MotiveError("det(Upsilon^{-1}) is zero to precision: lattice generators "
                          "are F_q[t]-dependent at this truncation")
    worst, floor = tau_difference_residual(M, cfg, ups_inv)
    triv = Trivialization(ups_inv, germs, "built-from-lattice", worst, floor)
    return triv


def _lam_vec(lam):
    return lam if not isinstance(lam, (list, tuple)) else lam[0]


def make_closed_form_trivialization(M: MotiveDef, cfg: LocalFieldCfg,
                                    ups_inv: Matrix, germs: Matrix,
                                    provenance: str = "closed-form") -> Trivialization:
    worst, floor = tau_difference_residual(M, cfg, ups_inv)
    triv = Trivialization(ups_inv, germs, provenance, worst, floor)
    return triv


def user_trivialization(M: MotiveDef, cfg: LocalFieldCfg, ups_inv: Matrix,
                        germs: Matrix, slack: int = 5) -> Trivialization:
    """Accept a user-supplied Upsilon^{-1} only when it satisfies the defining
    tau-difference system to its precision floor."""
    worst, floor = tau_difference_residual(M, cfg, ups_inv)
    if worst != "inf" and (floor == "inf" or worst < floor - slack):
        raise MotiveError(
            f"user trivialization fails tau(Upsilon^-1) = Theta Upsilon^-1 "
            f"(worst residual valuation {worst}, floor {floor})")
    return Trivialization(ups_inv, germs, "user-supplied", worst, floor)


# -- coordinate data (Smith normal form route) ------------------------------------------


@dataclass
class CoordinateData:
    B: Matrix                     # GL_r(K[t]) with B Theta = D V^{-1}
    rows: list                    # [(i_j, gamma_j)] per coordinate, 1-based rows
    alphas: list                  # elementary divisor exponents
    A_new: Matrix                 # coordinate functions in the SNF basis
    basis_change: Matrix          # V^{-1}


def coordinate_data(M: MotiveDef) -> CoordinateData:
    """Smith normal form of Theta: B Theta = diag((t-theta)^alpha_i) V^{-1};
    coordinate rows (i_j, gamma_j) with 0 < gamma_j <= alpha_{i_j}, enumerated
    per divisor with ascending powers (t-theta)^beta, i.e. gamma descending."""
    if M._coordinate_data is not None:
        return M._coordinate_data
    dom = M.dom
    u, d, v = smith_normal_form(M.Theta)
    tmth = KtPoly.t_minus_theta(dom)
    alphas = []
    for i in range(M.r):
        fact = factor_t_power(d[i, i], tmth)
        if fact is None:
            raise MotiveError(
                f"elementary divisor {i} is not a power of (t-theta): not a valid "
                f"motive over K")
        c, a = fact
        if not dom.is_zero(c - dom.one()):
            raise MotiveError("Smith form divisor is not monic after normalization")
        alphas.append(a)
    if sum(alphas) != M.det_power:
        raise MotiveError("elementary divisors do not multiply to det(Theta)")
    if sum(alphas) != M.E.d:
        raise MotiveError(
            f"sum of divisor exponents {sum(alphas)} != dimension {M.E.d}; "
            f"the declared t-module/motive pair is inconsistent")
    vinv = kt_inv_unimodular(v)
    rows = []
    a_rows = []
    for i in range(M.r):
        for beta in range(alphas[i]):
            rows.append((i + 1, alphas[i] - beta))
            fac = tmth ** beta
            a_rows.append([fac * vinv[i, j] for j in range(M.r)])
    cd = CoordinateData(B=u, rows=rows, alphas=alphas, A_new=Matrix(a_rows),
                        basis_change=vinv)
    M._coordinate_data = cd
    return cd


# -- period extraction ---------------------------------------------------------------


@dataclass
class PeriodReport:
    periods: Matrix               # d x r LocalNum, columns = lattice basis
    provenance: list              # per coordinate row: {row, gamma, order}
    residuals: dict
    precision: dict
    coordinate_system_changed: bool
    signs: dict

    def to_json(self):
        return {
            "periods": [[x.to_json_dict() for x in row] for row in self.periods.rows],
            "provenance": self.provenance,
            "residuals": self.residuals,
            "precision": self.precision,
            "coordinate_system_changed": self.coordinate_system_changed,
            "signs": self.signs,
        }

    def render_text(self) -> str:
        lines = ["period matrix (rows = coordinates, columns = lattice basis):"]
        for i, row in enumerate(self.periods.rows):
            prov = self.provenance[i]
            lines.append(f"  row {i + 1} (R^-1 row {prov['row']}, "
                         f"d^{prov['hyperderivative_order']}):")
            for j, x in enumerate(row):
                lines.append(f"    col {j + 1}: {x!r}")
        lines.append(f"residuals: {self.residuals}")
        lines.append(f"precision: {self.precision}")
        lines.append(f"signs: {self.signs}")
        return "\n".join(lines)


def extract_periods(M: MotiveDef, T: Trivialization, cfg: LocalFieldCfg,
                    J: int = 12) -> PeriodReport:
    """Period matrix via residues of A' B Theta Upsilon^{-1} dt, computed as
    hyperderivative values d^(gamma_j - 1)(R^{-1})_{i_j} |_{t=theta} and
    verified against the prolongation submatrix and the direct residue route.

    The reported values follow the residue convention literally; columns are
    period-lattice basis vectors (each column and its negative both exp-vanish
    since the lattice is symmetric -- the report records both norms)."""
    E = M.E
    cd = coordinate_data(M)
    d, r = E.d, M.r
    btheta = cd.B * M.Theta
    bt_germ = germ_mat_from_kt(btheta, cfg)
    rinv_germ = bt_germ * T.germs
    # regularity of R^{-1} at theta
    pole_floor = PINF
    for row in rinv_germ.rows:
        for g in row:
            kind, e, fl = g.regular_part_floor()
            if kind == "pole":
                raise MotiveError(
                    f"R^{{-1}} has a pole at t=theta (u^{e} coefficient nonzero): "
                    f"invalid trivialization or exhausted precision")
            if fl != PINF:
                pole_floor = min(pole_floor, fl)
    entries = []
    residue_agreement = PINF
    for (i_j, gamma) in cd.rows:
        germ_row = rinv_germ.rows[i_j - 1]
        row_vals = []
        for k in range(r):
            val = germ_row[k].hyperderive(gamma - 1).eval_at_theta()
            # independent residue route: res((t-theta)^(-gamma) R^{-1}_{i_j,k})
            res = residue(germ_row[k].shift(-gamma))
            agree = (val - res).valuation_lb()
            residue_agreement = min(residue_agreement, agree)
            if not (val - res).is_zero():
                raise MotiveError(
                    "hyperderivative and residue routes disagree on a period entry")
            row_vals.append(val)
        entries.append(row_vals)
    periods = Matrix(entries)
    # prolongation check: each entry appears in the last r columns of
    # rho_[d-1](R^{-1}) evaluated at theta
    rho = prolong(rinv_germ, d - 1)
    prolongation_agreement = PINF
    for jrow, (i_j, gamma) in enumerate(cd.rows):
        block = d - gamma  # block row holding d^(gamma-1)
        for k in range(r):
            g = rho[block * r + (i_j - 1), (d - 1) * r + k]
            v = g.eval_at_theta()
            agree = (v - periods[jrow, k]).valuation_lb()
            prolongation_agreement = min(prolongation_agreement, agree)
            if not (v - periods[jrow, k]).is_zero():
                raise MotiveError("prolongation submatrix disagrees with period matrix")
    coord_changed = not _mat_eq(cd.A_new, M.A)
    signs = {"convention": "residue", "columns": []}
    worst_exp = PINF
    if not coord_changed:
        for k in range(r):
            col = periods.col(k)
            v_plus, _ = eval_exp(E, cfg, col, J)
            v_minus, _ = eval_exp(E, cfg, [-x for x in col], J)
            plus_zero = all(x.is_zero() for x in v_plus)
            minus_zero = all(x.is_zero() for x in v_minus)
            signs["columns"].append({
                "plus_exp_valuation": _fmt_val(_vec_val(v_plus)),
                "minus_exp_valuation": _fmt_val(_vec_val(v_minus)),
                "plus_vanishes": plus_zero,
                "minus_vanishes": minus_zero,
            })
            if not plus_zero and not minus_zero:
                raise MotiveError(
                    f"neither sign of period column {k + 1} exp-vanishes: precision "
                    f"exhausted or invalid trivialization")
            worst_exp = min(worst_exp, _vec_val(v_plus))
    h_check = check_motive_H_columns(M, T, cfg)
    prec_floor = min((x.prec for row in periods.rows for x in row), default=PINF)
    report = PeriodReport(
        periods=periods,
        provenance=[{"row": i_j, "gamma": gamma, "hyperderivative_order": gamma - 1}
                    for (i_j, gamma) in cd.rows],
        residuals={
            "residue_vs_hyperderivative_valuation": _fmt_val(residue_agreement),
            "prolongation_agreement_valuation": _fmt_val(prolongation_agreement),
            "exp_vanishing_valuation": _fmt_val(worst_exp),
            "tau_difference_valuation": T.tau_residual_valuation,
            "H_membership_worst": h_check["worst_residual_valuation"],
            "polar_junk_floor": _fmt_val(pole_floor),
        },
        precision={"period_floor": _fmt_val(prec_floor)},
        coordinate_system_changed=coord_changed,
        signs=signs,
    )
    return report


def _mat_eq(a: Matrix, b: Matrix) -> bool:
    if a.nrows != b.nrows or a.ncols != b.ncols:
        return False
    return all((a[i, j] - b[i, j]).is_zero()
               for i in range(a.nrows) for j in range(a.ncols))


def check_motive_H_columns(M: MotiveDef, T: Trivialization, cfg: LocalFieldCfg):
    """Columns of A Upsilon^{-1} lie in H (membership residual report)."""
    D = min(s.t_prec for row in T.upsilon_inv.rows for s in row)
    a_ts = ts_mat_from_kt(M.A, cfg, D)
    h_mat = a_ts * T.upsilon_inv
    worst = PINF
    floor = PINF
    for k in range(M.r):
        rep = check_H_membership(M.E, cfg, h_mat.col(k))
        w = rep["worst_residual_valuation"]
        f = rep["precision_floor"]
        if w != "inf":
            worst = min(worst, w)
        if f != "inf":
            floor = min(floor, f)
    return {"worst_residual_valuation": _fmt_val(worst) if worst != PINF else "inf",
            "precision_floor": _fmt_val(floor) if floor != PINF else "inf"}


# -- ABP-condition predicate -----------------------------------------------------------


def check_abp_conditions(M: MotiveDef, T: Trivialization, C: Matrix, l: int,
                         cfg: LocalFieldCfg):
    """sigma-free verification that (rho_[l](Theta~), rho_[l](R)) meets the
    two conditions: determinant shape c (t-theta)^(s(l+1)) and the twisted
    equation rho_[l](R) = tau(rho_[l](R)) tau(rho_[l](Theta~)), where
    Theta~ = C Theta sigma(C)^{-1} and R = tau(Upsilon) C^{-1}.

    Everything runs on the tau-side: tau(Theta~) = tau(C) tau(Theta) C^{-1}
    over K[t] exactly, and the determinant shape is checked after clearing the
    constant sigma(det C) factor."""
    dom = M.dom
    det_c = kt_det(C)
    if det_c.degree() != 0 or det_c.is_zero():
        raise MotiveError("C is not unimodular over K[t]")
    det_shape = factor_t_power(kt_det(C * M.Theta), KtPoly.t_minus_theta(dom))
    ok_det = det_shape is not None and det_shape[1] >= 1
    s_l = det_shape[1] * (l + 1) if ok_det else None
    cinv = kt_inv_unimodular(C)
    tau_theta_tilde = C.twist(1) * M.Theta.twist(1) * cinv
    # exact prolonged determinant: det rho_l(tau(Theta~)) = c' (t - theta^q)^(s_l)
    rho_tt = prolong(tau_theta_tilde, l)
    root_tw = KtPoly(dom, [-dom.theta().twist(1), dom.one()])
    det_rho = factor_t_power(kt_det(rho_tt), root_tw)
    ok_rho = det_rho is not None and ok_det and det_rho[1] == s_l
    # twisted equation over the series ring
    ups = T.upsilon()
    D = min(s.t_prec for row in ups.rows for s in row)
    cinv_ts = ts_mat_from_kt(cinv, cfg, D)
    R = ups.twist(1) * cinv_ts
    rho_R = prolong(R, l)
    rho_R_tw = rho_R.twist(1)
    tt_ts = ts_mat_from_kt(tau_theta_tilde, cfg, D)
    rho_tt_ts = prolong(tt_ts, l)
    # hyperderivatives shorten series; align truncations before comparing
    min_D = min(s.t_prec for row in rho_R_tw.rows for s in row)
    resid = (rho_R.map(lambda s: s.truncate(min_D))
             - (rho_R_tw.map(lambda s: s.truncate(min_D))
                * rho_tt_ts.map(lambda s: s.truncate(min_D))))
    worst = min(s.worst_valuation() for row in resid.rows for s in row)
    floor = min(s.precision_floor() for row in resid.rows for s in row)
    passed = bool(ok_rho) and (worst == PINF or (floor != PINF and worst >= floor - 5))
    return {
        "det_constant_C": not det_c.is_zero() and det_c.degree() == 0,
        "det_shape_ok": bool(ok_det),
        "s": det_shape[1] if ok_det else None,
        "s_l": s_l,
        "det_rho_shape_ok": bool(ok_rho),
        "twisted_equation_residual_valuation": _fmt_val(worst),
        "twisted_equation_floor": _fmt_val(floor),
        "passed": passed,
    }


# -- lattice recovery (basis change over F_q[t]) ----------------------------------------


def lattice_basis_change(cfg: LocalFieldCfg, recovered, lattice, deg_bound: int = 4,
                         window: int | None = None):
    """For d = 1: express each recovered period as an F_q[theta]-combination
    of the input lattice generators by solving an F_p-linear system on the
    z-digit windows.  Returns (W, residual_valuation) with W[i][j] the QPoly
    coefficient of lattice[i] in recovered[j], or raises when no combination
    matches within the window."""
    r = len(lattice)
    cands = []
    tags = []
    for i, lam in enumerate(lattice):
        lamv = _lam_vec(lam)
        for u in range(deg_bound + 1):
            for v in range(cfg.base.e):
                coef = cfg.base.elem(tuple(1 if w == v else 0 for w in range(cfg.base.e)))
                cands.append((cfg.theta_pow(u) * lamv).scale(cfg.embed_base(coef)))
                tags.append((i, u, v))
    vals = [x.valuation_lb() for x in cands] + [x.valuation_lb() for x in recovered]
    lo = min(int(v) for v in vals if v != PINF)
    hi = min(int(x.prec) if x.prec != PINF else cfg.default_prec
             for x in cands + list(recovered))
    if window is not None:
        hi = min(hi, lo + window)
    p = cfg.base.p
    k = cfg.coeff.e
    nrows = (hi - lo) * k
    amat = np.zeros((nrows, len(cands)), dtype=np.int64)
    for c, x in enumerate(cands):
        amat[:, c] = _digit_window(x, lo, hi).reshape(-1)
    sols = []
    resid = PINF
    for target in recovered:
        b = _digit_window(target, lo, hi).reshape(-1)
        sol = _solve_mod_p(amat, b, p)
        if sol is None:
            raise MotiveError(
                "recovered period is not an F_q[theta]-combination of the input "
                "lattice within the digit window")
        sols.append(sol)
    w = [[QPoly.zero(cfg.base) for _ in range(len(recovered))] for _ in range(r)]
    for j, sol in enumerate(sols):
        for c, coeff in enumerate(sol):
            if coeff % p == 0:
                continue
            i, u, v = tags[c]
            add = np.zeros((u + 1, cfg.base.e), dtype=np.int64)
            add[u, v] = coeff % p
            w[i][j] = w[i][j] + QPoly(cfg.base, add)
    wmat = Matrix(w)
    # reconstruction residual: recovered_j - sum_i w[i][j](theta) lattice_i
    for j, target in enumerate(recovered):
        recon = cfg.zero(PINF)
        for i in range(r):
            if w[i][j].is_zero():
                continue
            recon = recon + w[i][j].eval_local(cfg) * _lam_vec(lattice[i])
        resid = min(resid, (target - recon).valuation_lb())
    det_w = _qpoly_det_small(wmat, cfg.base)
    unimodular = (not det_w.is_zero()) and det_w.degree() == 0
    return wmat, {"residual_valuation": _fmt_val(resid),
                  "det": det_w.to_json(), "unimodular": unimodular}


def _qpoly_det_small(m: Matrix, ctx) -> QPoly:
    n = m.nrows
    if n == 1:
        return m[0, 0]
    acc = QPoly.zero(ctx)
    for j in range(n):
        minor = Matrix([r[:j] + r[j + 1:] for r in m.rows[1:]])
        term = m[0, j] * _qpoly_det_small(minor, ctx)
        if j % 2 == 1:
            term = -term
        acc = acc + term
    return acc


def _digit_window(x: LocalNum, lo: int, hi: int) -> np.ndarray:
    out = np.zeros((hi - lo, x.cfg.coeff.e), dtype=np.int64)
    if not x.is_zero():
        a0 = max(lo, x.val)
        a1 = min(hi, x.val + x.digits.shape[0])
        if a1 > a0:
            out[a0 - lo: a1 - lo] = x.digits[a0 - x.val: a1 - x.val]
    return out


def _solve_mod_p(a: np.ndarray, b: np.ndarray, p: int):
    """Gaussian elimination over F_p; returns one solution or None."""
    a = a.copy() % p
    b = b.copy() % p
    nr, nc = a.shape
    piv_cols = []
    row = 0
    for col in range(nc):
        piv = None
        for i in range(row, nr):
            if a[i, col] % p:
                piv = i
                break
        if piv is None:
            continue
        a[[row, piv]] = a[[piv, row]]
        b[[row, piv]] = b[[piv, row]]
        inv = pow(int(a[row, col]), p - 2, p)
        a[row] = (a[row] * inv) % p
        b[row] = (b[row] * inv) % p
        for i in range(nr):
            if i != row and a[i, col] % p:
                f = int(a[i, col])
                a[i] = (a[i] - f * a[row]) % p
                b[i] = (b[i] - f * b[row]) % p
        piv_cols.append(col)
        row += 1
        if row == nr:
            break
    # consistency
    for i in range(row, nr):
        if b[i] % p:
            return None
    sol = np.zeros(nc, dtype=np.int64)
    for rix, col in enumerate(piv_cols):
        sol[col] = b[rix] % p
    return sol
