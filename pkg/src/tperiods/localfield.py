"""Precision-tracked Laurent series over F_{q^m} in a uniformizer z.

This is the finite computational model of (subfields of) the completed
algebraic closure at the infinite place: the configuration declares how theta
embeds (e.g. theta = z^-1, or theta = -z^-2 when a square root of -theta is
needed), and every LocalNum is a Laurent series known modulo z^prec.

Precision is absolute and propagated pessimistically:
  - add:      prec = min(prec_a, prec_b)
  - mul:      prec = min(val_a + prec_b, val_b + prec_a)
  - twist by q^k: exact, prec scales by q^k
Exact values (finite Laurent polynomials such as theta itself) carry
prec = inf and never degrade a computation.

A LocalNum with no stored digits is "zero to precision z^prec"; comparisons
are therefore three-valued (equal / distinct / indeterminate) and tests talk
about valuations of differences rather than booleans.

Digit vectors are numpy arrays of F_p coordinates (one row per z-power, one
column per polynomial-basis coordinate of F_{q^m}), so series multiplication
is a convolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ffcore import FqCtx, FqElem, subfield_embedding

PINF = float("inf")


class LocalFieldError(Exception):
    """Errors in local-field arithmetic (precision exhaustion, bad division)."""


@dataclass(frozen=True)
class RefinementRequired:
    """Signal that an inverse twist needs a ramified uniformizer refinement."""

    ramification: int
    levels: int = 1


def _fftconv(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Exact convolution of nonnegative integer vectors, reduced mod p.

    Uses numpy's real FFT for large inputs; the coefficient bound
    (p-1)^2 * min(len) stays far below 2^53, so rounding is exact.
    """
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return np.zeros(0, dtype=np.int64)
    if min(la, lb) <= 48 or la + lb <= 256:
        return np.convolve(a.astype(np.int64), b.astype(np.int64)) % p
    n = la + lb - 1
    size = 1 << (n - 1).bit_length()
    fa = np.fft.rfft(a.astype(np.float64), size)
    fb = np.fft.rfft(b.astype(np.float64), size)
    out = np.fft.irfft(fa * fb, size)[:n]
    return np.rint(out).astype(np.int64) % p


def conv_blocks(a: np.ndarray, b: np.ndarray, ctx: FqCtx) -> np.ndarray:
    """Convolution of two digit blocks (rows = z-powers, cols = F_{q^m} coords):
    convolve along z, multiply in F_{q^m}, reduce by the modulus table."""
    p, k = ctx.p, ctx.e
    la, lb = a.shape[0], b.shape[0]
    out = np.zeros((la + lb - 1, 2 * k - 1), dtype=np.int64)
    for u in range(k):
        au = a[:, u]
        if not au.any():
            continue
        for v in range(k):
            bv = b[:, v]
            if not bv.any():
                continue
            out[:, u + v] = (out[:, u + v] + _fftconv(au, bv, p)) % p
    if k == 1:
        return out
    return ctx.reduce_products(out)


class LocalFieldCfg:
    """Configuration of the local model: residue field F_{q^m}, uniformizer z,
    and the Laurent expansion of theta (strictly negative leading exponent).

    theta_expansion is a mapping {exponent: coefficient} where coefficients are
    FqElem of the residue field (or ints / coordinate lists).
    """

    def __init__(self, base: FqCtx, m: int = 1, theta_expansion=None, default_prec: int = 150,
                 coeff_ctx: FqCtx | None = None):
        if m < 1:
            raise LocalFieldError("residue extension degree m must be >= 1")
        if default_prec < 1:
            raise LocalFieldError("default precision must be >= 1")
        self.base = base
        self.m = m
        if coeff_ctx is None:
            coeff_ctx = base if m == 1 else FqCtx(base.p, base.e * m)
        if coeff_ctx.p != base.p or coeff_ctx.e != base.e * m:
            raise LocalFieldError("coefficient field must be F_{q^m}")
        self.coeff = coeff_ctx
        self.embed_base = subfield_embedding(base, coeff_ctx)
        self.default_prec = default_prec
        if theta_expansion is None:
            theta_expansion = {-1: 1}
        self.theta = self._make_exact(theta_expansion)
        if self.theta.is_zero() or self.theta.val >= 0:
            raise LocalFieldError("theta must have strictly negative leading exponent")
        self.ram = -self.theta.val
        self._theta_pows: dict[int, LocalNum] = {}
        self._lambda_theta: LocalNum | None = None

    def _make_exact(self, expansion) -> "LocalNum":
        items = []
        for exp, c in dict(expansion).items():
            if isinstance(c, FqElem):
                if c.ctx != self.coeff:
                    raise LocalFieldError("theta coefficient from wrong field")
                items.append((int(exp), c))
            elif isinstance(c, int):
                items.append((int(exp), self.coeff.from_int(c)))
            else:
                items.append((int(exp), self.coeff.elem(c)))
        if not items:
            raise LocalFieldError("empty theta expansion")
        lo = min(e for e, _ in items)
        hi = max(e for e, _ in items)
        digits = np.zeros((hi - lo + 1, self.coeff.e), dtype=np.int64)
        for e, c in items:
            digits[e - lo] = np.array(c.coeffs, dtype=np.int64)
        return LocalNum(self, lo, digits, PINF)

    # -- constructors ---------------------------------------------------------

    def zero(self, prec=PINF) -> "LocalNum":
        return LocalNum(self, 0, np.zeros((0, self.coeff.e), dtype=np.int64), prec)

    def one(self) -> "LocalNum":
        return self.monomial(0, self.coeff.one())

    def from_int(self, n: int) -> "LocalNum":
        return self.monomial(0, self.coeff.from_int(n))

    def from_fq(self, a: FqElem) -> "LocalNum":
        """Constant from the scalar field F_q (embedded into F_{q^m})."""
        return self.monomial(0, self.embed_base(a))

    def monomial(self, exp: int, coeff: FqElem) -> "LocalNum":
        if coeff.ctx != self.coeff:
            raise LocalFieldError("coefficient from wrong field")
        digits = np.array([coeff.coeffs], dtype=np.int64)
        return _normalize(self, exp, digits, PINF)

    def from_digits(self, val: int, digits, prec) -> "LocalNum":
        arr = np.asarray(digits, dtype=np.int64) % self.coeff.p
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        return _normalize(self, val, arr, prec)

    def theta_pow(self, i: int) -> "LocalNum":
        """theta^i for i >= 0, exact, cached."""
        if i < 0:
            raise LocalFieldError("theta_pow wants a nonnegative exponent")
        if i not in self._theta_pows:
            self._theta_pows[i] = self.theta ** i
        return self._theta_pows[i]

    def theta_inv(self, prec=None) -> "LocalNum":
        return self.theta.inv(prec)

    def lambda_theta(self) -> "LocalNum":
        """A (q-1)-th root of -theta, needed by the omega product and pi-tilde.

        Raises LocalFieldError with a refinement hint when the configured
        uniformizer cannot express the root.
        """
        if self._lambda_theta is None:
            q = self.base.q
            self._lambda_theta = nth_root(-self.theta, q - 1)
        return self._lambda_theta

    def q_valuation(self, x: "LocalNum") -> Fraction:
        """Valuation normalized so that v(theta) = -1, i.e. |x| = q^(-v)."""
        v = x.valuation_lb()
        if v == PINF or v == PINF:
            return Fraction(10 ** 9)  # effectively +infinity at desk scale
        return Fraction(int(v), self.ram)

    def __eq__(self, other):
        return (
            isinstance(other, LocalFieldCfg)
            and self.base == other.base
            and self.m == other.m
            and self.coeff == other.coeff
            and self.default_prec == other.default_prec
            and self.theta.same_digits(other.theta)
        )

    def __hash__(self):
        return hash((self.base, self.m, self.coeff, self.default_prec,
                     self.theta.val, self.theta.digits.tobytes()))

    def __repr__(self):
        return (f"LocalFieldCfg(q={self.base.q}, m={self.m}, ram={self.ram}, "
                f"N={self.default_prec})")

    def to_config(self):
        th = {}
        for i in range(self.theta.digits.shape[0]):
            row = self.theta.digits[i]
            if row.any():
                th[str(self.theta.val + i)] = [int(c) for c in row]
        return {
            "p": self.base.p,
            "e": self.base.e,
            "m": self.m,
            "base_modulus": list(self.base.modulus),
            "theta_expansion": th,
            "default_prec": self.default_prec,
        }


def _normalize(cfg: LocalFieldCfg, val: int, digits: np.ndarray, prec) -> "LocalNum":
    if prec != PINF and prec != PINF:
        prec = int(prec)
        cut = prec - val
        if cut < digits.shape[0]:
            digits = digits[: max(cut, 0)]
    nz = np.nonzero(digits.any(axis=1))[0]
    if len(nz) == 0:
        return LocalNum(cfg, 0, digits[:0], prec)
    digits = digits[nz[0]: nz[-1] + 1]
    return LocalNum(cfg, val + int(nz[0]), np.ascontiguousarray(digits), prec)


class LocalNum:
    """Laurent series sum_i digits[i] z^(val+i) + O(z^prec) over F_{q^m}."""

    __slots__ = ("cfg", "val", "digits", "prec")

    def __init__(self, cfg: LocalFieldCfg, val: int, digits: np.ndarray, prec):
        self.cfg = cfg
        self.val = val
        self.digits = digits
        self.prec = prec

    # -- queries ---------------------------------------------------------------

    def is_zero(self) -> bool:
        """Zero to the stored precision."""
        return self.digits.shape[0] == 0

    def is_exact_zero(self) -> bool:
        return self.is_zero() and self.prec == PINF

    def valuation_lb(self):
        """Exact valuation when nonzero, else the precision bound."""
        return self.val if not self.is_zero() else self.prec

    def leading(self) -> FqElem:
        if self.is_zero():
            raise LocalFieldError("leading coefficient of zero-to-precision value")
        return self.cfg.coeff.elem(tuple(int(c) for c in self.digits[0]))

    def coeff_at(self, exp: int) -> FqElem:
        if exp >= self.prec:
            raise LocalFieldError(f"coefficient at z^{exp} is beyond precision {self.prec}")
        i = exp - self.val
        if self.is_zero() or i < 0 or i >= self.digits.shape[0]:
            return self.cfg.coeff.zero()
        return self.cfg.coeff.elem(tuple(int(c) for c in self.digits[i]))

    def _check(self, other: "LocalNum"):
        if self.cfg is not other.cfg and self.cfg != other.cfg:
            raise LocalFieldError("LocalNum configuration mismatch")

    def same_digits(self, other: "LocalNum") -> bool:
        return (self.val == other.val and self.prec == other.prec
                and self.digits.shape == other.digits.shape
                and bool(np.all(self.digits == other.digits)))

    # -- ring operations ---------------------------------------------------------

    def __add__(self, other: "LocalNum") -> "LocalNum":
        self._check(other)
        prec = min(self.prec, other.prec)
        if self.is_zero() and other.is_zero():
            return self.cfg.zero(prec)
        if self.is_zero():
            return _normalize(self.cfg, other.val, other.digits.copy(), prec)
        if other.is_zero():
            return _normalize(self.cfg, self.val, self.digits.copy(), prec)
        lo = min(self.val, other.val)
        hi = max(self.val + self.digits.shape[0], other.val + other.digits.shape[0])
        out = np.zeros((hi - lo, self.cfg.coeff.e), dtype=np.int64)
        out[self.val - lo: self.val - lo + self.digits.shape[0]] = self.digits
        sl = slice(other.val - lo, other.val - lo + other.digits.shape[0])
        out[sl] = (out[sl] + other.digits) % self.cfg.coeff.p
        return _normalize(self.cfg, lo, out, prec)

    def __neg__(self) -> "LocalNum":
        return LocalNum(self.cfg, self.val, (-self.digits) % self.cfg.coeff.p, self.prec)

    def __sub__(self, other: "LocalNum") -> "LocalNum":
        return self + (-other)

    def __mul__(self, other: "LocalNum") -> "LocalNum":
        self._check(other)
        va = self.val if not self.is_zero() else self.prec
        vb = other.val if not other.is_zero() else other.prec
        prec = min(va + other.prec, vb + self.prec)
        if self.is_zero() or other.is_zero():
            return self.cfg.zero(prec)
        out = conv_blocks(self.digits, other.digits, self.cfg.coeff)
        return _normalize(self.cfg, self.val + other.val, out, prec)

    def __pow__(self, n: int) -> "LocalNum":
        if n < 0:
            return self.inv() ** (-n)
        out = self.cfg.one()
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def shift(self, k: int) -> "LocalNum":
        """Multiply by z^k (exact)."""
        prec = self.prec if self.prec == PINF else self.prec + k
        return LocalNum(self.cfg, self.val + k, self.digits, prec)

    def scale(self, c: FqElem) -> "LocalNum":
        """Multiply by a constant of the residue field."""
        if c.ctx != self.cfg.coeff:
            raise LocalFieldError("scale coefficient from wrong field")
        if c.is_zero():
            return self.cfg.zero(PINF)
        return self * self.cfg.monomial(0, c)

    def inv(self, prec=None) -> "LocalNum":
        """Multiplicative inverse; prec is the absolute precision of the result.

        Defaults to prec_b - 2*val_b for tracked inputs and to the configured
        default precision (shifted by the valuation) for exact inputs.
        """
        if self.is_zero():
            raise LocalFieldError(
                f"division by zero-to-precision value (ambiguous below z^{self.prec})")
        v = self.val
        if prec is None:
            prec = (self.prec - 2 * v) if self.prec != PINF else self.cfg.default_prec - 2 * v
        if self.prec != PINF:
            prec = min(prec, self.prec - 2 * v)
        rel = int(prec) + v  # number of unit-part digits needed
        if rel < 1:
            raise LocalFieldError("inverse requested below one significant digit")
        p, k = self.cfg.coeff.p, self.cfg.coeff.e
        u = self.digits[: min(self.digits.shape[0], rel)]
        c0 = self.leading()
        c0inv = np.array(c0.inv().coeffs, dtype=np.int64).reshape(1, k)
        x = c0inv
        known = 1
        while known < rel:
            known = min(2 * known, rel)
            ux = conv_blocks(u[:known], x, self.cfg.coeff)[:known]
            # residual = 1 - u*x  (on the unit parts)
            ux = (-ux) % p
            ux[0, 0] = (ux[0, 0] + 1) % p
            corr = conv_blocks(x, ux, self.cfg.coeff)[:known]
            xe = np.zeros((known, k), dtype=np.int64)
            xe[: x.shape[0]] = x
            xe[: corr.shape[0]] = (xe[: corr.shape[0]] + corr) % p
            x = xe
        return _normalize(self.cfg, -v, x, prec)

    def __truediv__(self, other: "LocalNum") -> "LocalNum":
        return self * other.inv()

    # -- twists -------------------------------------------------------------------

    def twist(self, k: int = 1) -> "LocalNum":
        """tau^k: raise to the q^k-th power (exact; exponents scale by q^k)."""
        if k < 0:
            raise LocalFieldError("twist wants a nonnegative power")
        if k == 0:
            return self
        Q = self.cfg.base.q ** k
        prec = self.prec if self.prec == PINF else self.prec * Q
        if self.is_zero():
            return self.cfg.zero(prec)
        L = self.digits.shape[0]
        frob = self.cfg.coeff.frobenius_power(self.cfg.base.e * k)
        coeffs = (self.digits @ frob) % self.cfg.coeff.p
        out = np.zeros(((L - 1) * Q + 1, self.cfg.coeff.e), dtype=np.int64)
        out[::Q] = coeffs
        return _normalize(self.cfg, self.val * Q, out, prec)

    def untwist(self):
        """sigma: the unique q-th root when it exists in this model, else a
        RefinementRequired signal naming the ramification index."""
        q = self.cfg.base.q
        if self.is_zero():
            prec = self.prec if self.prec == PINF else -(-int(self.prec) // q)
            return self.cfg.zero(prec)
        exps = np.nonzero(self.digits.any(axis=1))[0] + self.val
        if np.any(exps % q != 0):
            return RefinementRequired(ramification=q)
        prec = self.prec if self.prec == PINF else -(-int(self.prec) // q)
        frob = self.cfg.coeff.frobenius_power(-self.cfg.base.e % self.cfg.coeff.e)
        rows = (self.digits[(exps - self.val)] @ frob) % self.cfg.coeff.p
        lo = int(exps[0]) // q
        out = np.zeros((int(exps[-1]) // q - lo + 1, self.cfg.coeff.e), dtype=np.int64)
        out[(exps // q) - lo] = rows
        return _normalize(self.cfg, lo, out, prec)

    # -- comparisons ---------------------------------------------------------------

    def agreement(self, other: "LocalNum"):
        """Valuation data of self - other: ('distinct', v) with the exact
        valuation of the difference, or ('equal', prec_bound)."""
        d = self - other
        if d.is_zero():
            return ("equal", d.prec)
        return ("distinct", d.val)

    def digits_of_agreement(self, other: "LocalNum") -> int:
        """Number of agreeing z-digits counted from the leading exponent."""
        kind, v = self.agreement(other)
        lead = min(self.valuation_lb(), other.valuation_lb())
        if v == PINF:
            return 10 ** 9
        return int(v) - int(lead)

    def compare(self, other: "LocalNum", floor: int = 8):
        """Three-valued comparison: 'equal' / 'distinct' / 'indeterminate'.

        'equal' requires agreement through at least `floor` digits beyond the
        leading exponent; weaker agreement bounds are indeterminate.
        """
        kind, v = self.agreement(other)
        if kind == "distinct":
            return "distinct"
        if self.digits_of_agreement(other) >= floor:
            return "equal"
        return "indeterminate"

    # -- presentation -----------------------------------------------------------------

    def __repr__(self):
        if self.is_zero():
            return f"O(z^{self.prec})"
        terms = []
        shown = 0
        for i in range(self.digits.shape[0]):
            row = self.digits[i]
            if not row.any():
                continue
            e = self.val + i
            if self.cfg.coeff.e == 1:
                c = str(int(row[0]))
            else:
                c = "(" + ",".join(str(int(x)) for x in row) + ")"
            terms.append(f"{c}*z^{e}")
            shown += 1
            if shown >= 6:
                terms.append("...")
                break
        tail = "" if self.prec == PINF else f" + O(z^{self.prec})"
        return " + ".join(terms) + tail

    def to_json_dict(self):
        return {
            "val": int(self.val) if not self.is_zero() else 0,
            "prec": "inf" if self.prec == PINF else int(self.prec),
            "coeffs": [[int(c) for c in row] for row in self.digits],
        }


def ln_arith(a: LocalNum, b: LocalNum, op: str) -> LocalNum:
    """Dispatch form: op in {add, mul, div}."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise LocalFieldError(f"unknown op {op!r}")


def twist_tau(a: LocalNum, k: int = 1) -> LocalNum:
    return a.twist(k)


def twist_sigma(a: LocalNum):
    return a.untwist()


def nth_root(a: LocalNum, n: int) -> LocalNum:
    """The n-th root of a, for gcd(n, p) = 1, when it exists in the model.

    Requires n | val(a) and an n-th root of the leading coefficient in
    F_{q^m}; raises LocalFieldError naming the obstruction otherwise.
    """
    cfg = a.cfg
    if n < 1:
        raise LocalFieldError("root index must be positive")
    if n == 1:
        return a
    if n % cfg.base.p == 0:
        raise LocalFieldError("root index divisible by the characteristic; use untwist")
    if a.is_zero():
        raise LocalFieldError("n-th root of zero-to-precision value")
    if a.val % n != 0:
        raise LocalFieldError(
            f"valuation {a.val} not divisible by {n}: refine the uniformizer")
    c0 = a.leading()
    root0 = None
    for cand in cfg.coeff.elements():
        if not cand.is_zero() and cand ** n == c0:
            root0 = cand
            break
    if root0 is None:
        raise LocalFieldError(
            f"leading coefficient has no {n}-th root in F_{cfg.coeff.q}: extend the residue field")
    x = cfg.monomial(a.val // n, root0)
    ninv = cfg.from_int(pow(n % cfg.base.p, cfg.base.p - 2, cfg.base.p))
    target = a.prec if a.prec != PINF else cfg.default_prec
    for _ in range(64):
        fx = x ** n - a
        if fx.is_zero() and fx.prec >= target:
            break
        dx = (fx / (x ** (n - 1))) * ninv
        if dx.is_zero():
            break
        x = x - dx
    res = x ** n - a
    if not res.is_zero():
        raise LocalFieldError("Newton iteration for n-th root failed to converge")
    return x


def refine_uniformizer(cfg: LocalFieldCfg, k: int = 1):
    """New configuration with uniformizer w, w^(q^k) = z, plus the embedding
    map LocalNum(z) -> LocalNum(w) (exponent scaling, coefficients unchanged)."""
    if k < 1:
        raise LocalFieldError("refinement level must be >= 1")
    Q = cfg.base.q ** k
    theta = {}
    for i in range(cfg.theta.digits.shape[0]):
        row = cfg.theta.digits[i]
        if row.any():
            theta[(cfg.theta.val + i) * Q] = cfg.coeff.elem(tuple(int(c) for c in row))
    new_cfg = LocalFieldCfg(cfg.base, cfg.m, theta, cfg.default_prec * Q, coeff_ctx=cfg.coeff)

    def embed(x: LocalNum) -> LocalNum:
        if x.cfg != cfg:
            raise LocalFieldError("embedding applied to foreign LocalNum")
        prec = x.prec if x.prec == PINF else x.prec * Q
        if x.is_zero():
            return new_cfg.zero(prec)
        L = x.digits.shape[0]
        out = np.zeros(((L - 1) * Q + 1, cfg.coeff.e), dtype=np.int64)
        out[::Q] = x.digits
        return _normalize(new_cfg, x.val * Q, out, prec)

    return new_cfg, embed
