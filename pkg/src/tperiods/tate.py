"""Truncated Tate-algebra series, germs at t = theta, and hyperderivatives.

TateSeries is a t-power series over the local model truncated at t_prec; each
coefficient carries its own z-precision.  ThetaGerm is a truncated Laurent
expansion in u = t - theta used for residue extraction: coefficients below
the stored window are exactly zero (pole orders are known), coefficients at
and above uprec are unknown.

Evaluation at t = theta is only ever routed through germs or through the
telescoping tail limit below -- never through naive substitution into a
truncated series, which would be meaningless for series with poles at theta.
"""

from __future__ import annotations

from .ffcore import binom_mod_p, binom_mod_p_signed
from .localfield import LocalFieldCfg, LocalNum, PINF
from .ktalgebra import AlgebraError, KtPoly, Matrix


class TateError(Exception):
    pass


class TateSeries:
    """sum coeffs[i] t^i, known through t^(t_prec - 1)."""

    __slots__ = ("cfg", "coeffs")

    def __init__(self, cfg: LocalFieldCfg, coeffs):
        self.cfg = cfg
        self.coeffs = list(coeffs)
        if not self.coeffs:
            raise TateError("a TateSeries needs at least one coefficient")

    @property
    def t_prec(self) -> int:
        return len(self.coeffs)

    @staticmethod
    def zero(cfg: LocalFieldCfg, D: int) -> "TateSeries":
        return TateSeries(cfg, [cfg.zero(PINF) for _ in range(D)])

    @staticmethod
    def one(cfg: LocalFieldCfg, D: int) -> "TateSeries":
        c = [cfg.zero(PINF) for _ in range(D)]
        c[0] = cfg.one()
        return TateSeries(cfg, c)

    @staticmethod
    def from_coeffs(cfg: LocalFieldCfg, coeffs, D: int | None = None) -> "TateSeries":
        c = list(coeffs)
        if D is not None:
            c = c[:D] + [cfg.zero(PINF)] * max(0, D - len(c))
        return TateSeries(cfg, c)

    def coeff(self, i: int) -> LocalNum:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        raise TateError(f"t^{i} is beyond the truncation order {self.t_prec}")

    def _check(self, other: "TateSeries"):
        if self.cfg != other.cfg:
            raise TateError("TateSeries configuration mismatch")

    def __add__(self, other: "TateSeries") -> "TateSeries":
        self._check(other)
        D = min(self.t_prec, other.t_prec)
        return TateSeries(self.cfg, [self.coeffs[i] + other.coeffs[i] for i in range(D)])

    def __neg__(self) -> "TateSeries":
        return TateSeries(self.cfg, [-c for c in self.coeffs])

    def __sub__(self, other: "TateSeries") -> "TateSeries":
        return self + (-other)

    def __mul__(self, other: "TateSeries") -> "TateSeries":
        self._check(other)
        D = min(self.t_prec, other.t_prec)
        out = [self.cfg.zero(PINF) for _ in range(D)]
        for i in range(D):
            a = self.coeffs[i]
            if a.is_exact_zero():
                continue
            for j in range(D - i):
                b = other.coeffs[j]
                if b.is_exact_zero():
                    continue
                out[i + j] = out[i + j] + a * b
        return TateSeries(self.cfg, out)

    def __pow__(self, n: int) -> "TateSeries":
        out = TateSeries.one(self.cfg, self.t_prec)
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def scale(self, c: LocalNum) -> "TateSeries":
        return TateSeries(self.cfg, [c * x for x in self.coeffs])

    def shift_t(self, k: int) -> "TateSeries":
        """Multiply by t^k (coefficients above the truncation are dropped)."""
        return TateSeries(self.cfg, [self.cfg.zero(PINF)] * k + self.coeffs[: self.t_prec - k])

    def truncate(self, D: int) -> "TateSeries":
        return TateSeries(self.cfg, self.coeffs[:D])

    def twist(self, k: int = 1) -> "TateSeries":
        """tau^k coefficient-wise; the t-power grid is untouched."""
        return TateSeries(self.cfg, [c.twist(k) for c in self.coeffs])

    def hyperderive(self, n: int) -> "TateSeries":
        """d^n with Lucas binomials; lowers the t-truncation by n."""
        if n == 0:
            return self
        if n >= self.t_prec:
            raise TateError("hyperderivative order exceeds the truncation")
        p = self.cfg.base.p
        out = []
        for i in range(n, self.t_prec):
            b = binom_mod_p(i, n, p)
            c = self.coeffs[i]
            if b == 0:
                out.append(self.cfg.zero(c.prec))
            elif b == 1:
                out.append(c)
            else:
                out.append(c * self.cfg.from_int(b))
        return TateSeries(self.cfg, out)

    def mul_t_minus_theta(self) -> "TateSeries":
        """(t - theta) * self at the same truncation (top coefficient drops)."""
        th = self.cfg.theta
        out = [-(th * self.coeffs[0])]
        for i in range(1, self.t_prec):
            out.append(self.coeffs[i - 1] - th * self.coeffs[i])
        return TateSeries(self.cfg, out)

    def inv(self) -> "TateSeries":
        """Formal series inverse (t^0 coefficient must be invertible)."""
        c0 = self.coeffs[0]
        if c0.is_zero():
            raise TateError("series inverse needs an invertible constant coefficient")
        d0 = c0.inv()
        out = [d0]
        for n in range(1, self.t_prec):
            acc = None
            for i in range(1, n + 1):
                if i >= self.t_prec:
                    break
                term = self.coeffs[i] * out[n - i]
                acc = term if acc is None else acc + term
            out.append(-(d0 * acc) if acc is not None else self.cfg.zero(PINF))
        return TateSeries(self.cfg, out)

    def worst_valuation(self):
        """min over coefficients of the valuation lower bound (z-digits)."""
        return min(c.valuation_lb() for c in self.coeffs)

    def precision_floor(self):
        return min((c.prec for c in self.coeffs), default=PINF)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def gauge(self):
        """Sup-norm data and a non-Tate-growth flag (report only, not enforced)."""
        vals = [c.valuation_lb() for c in self.coeffs]
        finite = [v for v in vals if v != PINF]
        head = min(finite[: max(3, len(finite) // 4)], default=PINF)
        tail = min(finite[-max(3, len(finite) // 4):], default=PINF)
        return {
            "min_valuation": min(finite, default=PINF),
            "tail_growth": bool(finite and tail < head),
        }

    def __repr__(self):
        head = ", ".join(repr(c) for c in self.coeffs[:3])
        return f"TateSeries[{head}, ... ; D={self.t_prec}]"

    def to_json(self):
        return [c.to_json_dict() for c in self.coeffs]


def ts_arith(a: TateSeries, b: TateSeries, op: str) -> TateSeries:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise TateError(f"unknown op {op!r}")


def ts_twist_tau(a: TateSeries, k: int = 1) -> TateSeries:
    return a.twist(k)


def hyperderive(a, n: int):
    """Hyperderivative dispatch for TateSeries, KtPoly, ThetaGerm and matrices."""
    return a.hyperderive(n)


class ThetaGerm:
    """Truncated Laurent expansion sum coeffs[i] u^(lo+i) + O(u^uprec) in
    u = t - theta.  Exponents below lo are exactly zero."""

    __slots__ = ("cfg", "lo", "coeffs", "uprec")

    def __init__(self, cfg: LocalFieldCfg, lo: int, coeffs, uprec=PINF):
        coeffs = list(coeffs)
        # strip exact-zero leading terms (pole orders are exact knowledge)
        while coeffs and coeffs[0].is_exact_zero():
            coeffs.pop(0)
            lo += 1
        while coeffs and coeffs[-1].is_exact_zero():
            coeffs.pop()
        if uprec != PINF and coeffs:
            coeffs = coeffs[: max(0, int(uprec) - lo)]
        self.cfg = cfg
        self.lo = lo if coeffs else 0
        self.coeffs = coeffs
        self.uprec = uprec

    @staticmethod
    def zero(cfg: LocalFieldCfg, uprec=PINF) -> "ThetaGerm":
        return ThetaGerm(cfg, 0, [], uprec)

    @staticmethod
    def const(cfg: LocalFieldCfg, c: LocalNum, uprec=PINF) -> "ThetaGerm":
        return ThetaGerm(cfg, 0, [c], uprec)

    @staticmethod
    def u_power(cfg: LocalFieldCfg, k: int) -> "ThetaGerm":
        """(t - theta)^k, exact, any integer k."""
        return ThetaGerm(cfg, k, [cfg.one()], PINF)

    @property
    def pole_order(self) -> int:
        """Largest k with a stored u^(-k) coefficient (0 for regular windows)."""
        return max(0, -self.lo) if self.coeffs else 0

    def hi(self):
        return self.lo + len(self.coeffs)

    def coeff(self, e: int) -> LocalNum:
        if self.uprec != PINF and e >= self.uprec:
            raise TateError(f"u^{e} coefficient beyond germ order {self.uprec}")
        i = e - self.lo
        if not self.coeffs or i < 0 or i >= len(self.coeffs):
            return self.cfg.zero(PINF)
        return self.coeffs[i]

    def _check(self, other: "ThetaGerm"):
        if self.cfg != other.cfg:
            raise TateError("ThetaGerm configuration mismatch")

    def __add__(self, other: "ThetaGerm") -> "ThetaGerm":
        self._check(other)
        uprec = min(self.uprec, other.uprec)
        if not self.coeffs and not other.coeffs:
            return ThetaGerm.zero(self.cfg, uprec)
        lo = min([g.lo for g in (self, other) if g.coeffs])
        hi = max([g.hi() for g in (self, other) if g.coeffs])
        out = [self.coeff(e) + other.coeff(e) for e in range(lo, hi)]
        return ThetaGerm(self.cfg, lo, out, uprec)

    def __neg__(self) -> "ThetaGerm":
        return ThetaGerm(self.cfg, self.lo, [-c for c in self.coeffs], self.uprec)

    def __sub__(self, other: "ThetaGerm") -> "ThetaGerm":
        return self + (-other)

    def __mul__(self, other: "ThetaGerm") -> "ThetaGerm":
        self._check(other)
        va = self.lo if self.coeffs else self.uprec
        vb = other.lo if other.coeffs else other.uprec
        uprec = min(va + other.uprec, vb + self.uprec)
        if not self.coeffs or not other.coeffs:
            return ThetaGerm.zero(self.cfg, uprec)
        n = len(self.coeffs) + len(other.coeffs) - 1
        out = [self.cfg.zero(PINF) for _ in range(n)]
        for i, a in enumerate(self.coeffs):
            if a.is_exact_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if b.is_exact_zero():
                    continue
                out[i + j] = out[i + j] + a * b
        return ThetaGerm(self.cfg, self.lo + other.lo, out, uprec)

    def __pow__(self, n: int) -> "ThetaGerm":
        out = ThetaGerm.const(self.cfg, self.cfg.one())
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def scale(self, c: LocalNum) -> "ThetaGerm":
        return ThetaGerm(self.cfg, self.lo, [c * x for x in self.coeffs], self.uprec)

    def shift(self, k: int) -> "ThetaGerm":
        """Multiply by u^k (exact)."""
        uprec = self.uprec if self.uprec == PINF else self.uprec + k
        return ThetaGerm(self.cfg, self.lo + k, self.coeffs, uprec)

    def inv(self, out_order: int | None = None) -> "ThetaGerm":
        """Series inverse; needs a leading coefficient nonzero-to-precision."""
        if not self.coeffs:
            raise TateError("inverse of zero-to-order germ")
        c0 = self.coeffs[0]
        if c0.is_zero():
            raise TateError(
                f"indeterminate leading germ coefficient (zero to z^{c0.prec})")
        if self.uprec == PINF:
            rel = out_order if out_order is not None else len(self.coeffs)
        else:
            rel = int(self.uprec) - self.lo
            if out_order is not None:
                rel = min(rel, out_order)
        d0 = c0.inv()
        out = [d0]
        for n in range(1, rel):
            acc = None
            for i in range(1, n + 1):
                a = self.coeffs[i] if i < len(self.coeffs) else None
                if a is None or a.is_exact_zero():
                    continue
                term = a * out[n - i]
                acc = term if acc is None else acc + term
            out.append(-(d0 * acc) if acc is not None else self.cfg.zero(PINF))
        if self.uprec == PINF and len(self.coeffs) == 1:
            uprec = PINF  # inverse of a monomial is exact
        else:
            uprec = rel - self.lo
        return ThetaGerm(self.cfg, -self.lo, out, uprec)

    def hyperderive(self, n: int) -> "ThetaGerm":
        """d^n in t; valid on Laurent windows via signed binomials."""
        if n == 0:
            return self
        p = self.cfg.base.p
        out = []
        for i, c in enumerate(self.coeffs):
            e = self.lo + i
            b = binom_mod_p_signed(e, n, p)
            if b == 0:
                out.append(self.cfg.zero(c.prec))
            elif b == 1:
                out.append(c)
            else:
                out.append(c * self.cfg.from_int(b))
        uprec = self.uprec if self.uprec == PINF else self.uprec - n
        return ThetaGerm(self.cfg, self.lo - n, out, uprec)

    def regular_part_floor(self):
        """Precision floor of the (should-be-zero) polar coefficients."""
        floor = PINF
        for i, c in enumerate(self.coeffs):
            if self.lo + i >= 0:
                break
            if not c.is_zero():
                return ("pole", self.lo + i, c.valuation_lb())
            floor = min(floor, c.prec)
        return ("regular", None, floor)

    def eval_at_theta(self) -> LocalNum:
        """Constant term; polar coefficients must be zero-to-precision, and
        their precision caps the certified precision of the value."""
        if self.uprec != PINF and self.uprec <= 0:
            raise TateError("germ order too small to evaluate at theta")
        kind, e, floor = self.regular_part_floor()
        if kind == "pole":
            raise TateError(f"germ has a pole at t=theta (u^{e} coefficient is nonzero)")
        c0 = self.coeff(0)
        if floor == PINF or (c0.prec != PINF and c0.prec <= floor):
            return c0
        return self.cfg.from_digits(c0.val if not c0.is_zero() else 0,
                                    c0.digits, min(c0.prec, floor))

    def __repr__(self):
        return (f"ThetaGerm[lo={self.lo}, pole={self.pole_order}, "
                f"coeffs={self.coeffs!r}, uprec={self.uprec}]")

    def to_json(self):
        return {
            "pole_order": self.pole_order,
            "lo": self.lo,
            "uprec": "inf" if self.uprec == PINF else int(self.uprec),
            "coeffs": [c.to_json_dict() for c in self.coeffs],
        }


def germ_arith(a: ThetaGerm, b: ThetaGerm, op: str) -> ThetaGerm:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "invert":
        return a.inv()
    raise TateError(f"unknown op {op!r}")


def residue(a: ThetaGerm) -> LocalNum:
    """Coefficient of (t - theta)^(-1)."""
    if a.uprec != PINF and a.uprec <= -1:
        raise TateError("germ order too small to read the residue")
    return a.coeff(-1)


def residue_via_hyperderivative(f: ThetaGerm, l: int) -> LocalNum:
    """res_{t=theta}(f dt) computed through the hyperderivative route:
    multiply by (t-theta)^l, take d^(l-1), evaluate at theta.

    An independent implementation of residue() used for cross-validation;
    requires (t-theta)^l * f to be regular at theta.
    """
    if l < 1:
        raise TateError("hyperderivative residue route needs l >= 1")
    g = f.shift(l)
    if g.uprec != PINF and g.uprec <= l - 1:
        raise TateError("insufficient germ order for the hyperderivative route")
    kind, e, _ = g.regular_part_floor()
    if kind == "pole":
        raise TateError(f"(t-theta)^{l} * f still has a pole (u^{e})")
    return g.hyperderive(l - 1).eval_at_theta()


def germ_from_ktpoly(pol: KtPoly, cfg: LocalFieldCfg, uprec=PINF) -> ThetaGerm:
    """Exact expansion of a t-polynomial around t = theta: the u^l coefficient
    is (d^l pol)(theta)."""
    if pol.is_zero():
        return ThetaGerm.zero(cfg, uprec)
    coeffs = []
    for l in range(pol.degree() + 1):
        c = pol.hyperderive(l).eval_at(pol.dom.theta())
        coeffs.append(pol.dom.to_local(c, cfg))
    return ThetaGerm(cfg, 0, coeffs, uprec)


def tate_from_ktpoly(pol: KtPoly, cfg: LocalFieldCfg, D: int) -> TateSeries:
    if pol.degree() >= D:
        raise TateError("polynomial degree exceeds the Tate truncation")
    coeffs = [pol.dom.to_local(pol.coeff(i), cfg) for i in range(pol.degree() + 1)]
    return TateSeries.from_coeffs(cfg, coeffs, D)


def prolong(m: Matrix, n: int) -> Matrix:
    """n-th prolongation: the (n+1)x(n+1) block upper-triangular matrix whose
    (i, j) block is d^(j-i) applied entry-wise (and 0 below the diagonal)."""
    if m.nrows != m.ncols:
        raise AlgebraError("prolongation of a non-square matrix")
    derivs = [m]
    for j in range(1, n + 1):
        derivs.append(m.hyperderive(j))
    zero_block = m - m
    rows = []
    for i in range(n + 1):
        block_row = []
        for j in range(n + 1):
            block_row.append(derivs[j - i] if j >= i else zero_block)
        rows.extend(_hcat(block_row))
    return Matrix(rows)


def _hcat(blocks):
    out = []
    for i in range(blocks[0].nrows):
        row = []
        for b in blocks:
            row.extend(b.rows[i])
        out.append(row)
    return out


def tail_limit_eval(h, dphi: Matrix, min_window: int = 3):
    """Telescoping evaluation of ((t - theta) h)|_{t=theta} for h in H:
    the partial sums of the t-expansion collapse to -dphi_t^(M+1)(e_M), and
    the limit over M is returned with an agreement certificate from the last
    two partials.

    h is a vector (list) of TateSeries sharing a truncation; divergence of the
    partials raises.  Returns (vector of LocalNum, certificate valuation).
    """
    if isinstance(h, TateSeries):
        h = [h]
    D = min(s.t_prec for s in h)
    d = len(h)
    if dphi.nrows != d or dphi.ncols != d:
        raise TateError("dphi_t shape does not match the coordinate count")
    # coefficient decay guard
    head = min(h[c].coeffs[i].valuation_lb() for c in range(d) for i in range(min(3, D)))
    tail = min(h[c].coeffs[i].valuation_lb() for c in range(d) for i in range(max(0, D - 3), D))
    if D > 6 and tail != PINF and tail <= head:
        raise TateError("coefficients of h do not decay; tail limit diverges")
    power = dphi
    prev = None
    agree = None
    history = []
    for M in range(D):
        e_M = [h[c].coeffs[M] for c in range(d)]
        v = [-x for x in power.apply(e_M)]
        if prev is not None:
            agree = min((vi - pi).valuation_lb() for vi, pi in zip(v, prev))
            history.append(agree)
        prev = v
        power = power * dphi
    if len(history) >= min_window and not (history[-1] >= history[0]):
        raise TateError("tail partials do not stabilize; increase precision")
    return prev, (history[-1] if history else None)
