"""Exact arithmetic over K = F_q(theta).

QPoly is a dense numpy-backed polynomial over F_q in theta (one row of F_p
coordinates per theta-power); RatFunc is a reduced fraction of two QPoly with
monic denominator.

Coefficient growth note: the exponential-series recursions push degrees into
the tens of thousands, so multiplication runs through an FFT convolution and
gcd reduction is skipped above a degree threshold (fractions stay unreduced
but exact; equality tests cross-multiply).  Frobenius twisting is exact and
cheap: coefficients of F_q are fixed by x -> x^q, so twisting only scales the
theta-exponents.
"""

from __future__ import annotations

import numpy as np

from .ffcore import FqCtx, FqElem
from .localfield import LocalFieldCfg, LocalNum, PINF, _fftconv

REDUCE_DEG_LIMIT = 600


class RatFuncError(Exception):
    pass


def _conv_q(a: np.ndarray, b: np.ndarray, ctx: FqCtx) -> np.ndarray:
    """Convolution of coefficient blocks over F_q (rows = theta powers)."""
    p, e = ctx.p, ctx.e
    out = np.zeros((a.shape[0] + b.shape[0] - 1, 2 * e - 1), dtype=np.int64)
    for u in range(e):
        au = a[:, u]
        if not au.any():
            continue
        for v in range(e):
            bv = b[:, v]
            if not bv.any():
                continue
            out[:, u + v] = (out[:, u + v] + _fftconv(au, bv, p)) % p
    if e == 1:
        return out
    return ctx.reduce_products(out)


class QPoly:
    """Polynomial over F_q in theta, ascending coefficients, trailing-trimmed."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: FqCtx, coeffs: np.ndarray):
        self.ctx = ctx
        self.coeffs = coeffs  # shape (L, e), trimmed; L == 0 means zero

    @staticmethod
    def make(ctx: FqCtx, rows) -> "QPoly":
        arr = np.asarray(rows, dtype=np.int64) % ctx.p
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.size and arr.shape[1] != ctx.e:
            raise RatFuncError("coefficient width must equal e")
        return QPoly(ctx, _trim(arr))

    @staticmethod
    def from_fq_list(ctx: FqCtx, elems) -> "QPoly":
        rows = [list(c.coeffs) for c in elems]
        return QPoly.make(ctx, rows if rows else np.zeros((0, ctx.e)))

    @staticmethod
    def zero(ctx: FqCtx) -> "QPoly":
        return QPoly(ctx, np.zeros((0, ctx.e), dtype=np.int64))

    @staticmethod
    def const(ctx: FqCtx, c) -> "QPoly":
        if isinstance(c, int):
            c = ctx.from_int(c)
        return QPoly.make(ctx, [list(c.coeffs)])

    @staticmethod
    def theta(ctx: FqCtx) -> "QPoly":
        z = [0] * ctx.e
        o = [0] * ctx.e
        o[0] = 1
        return QPoly.make(ctx, [z, o])

    def degree(self) -> int:
        return self.coeffs.shape[0] - 1  # -1 for zero

    def is_zero(self) -> bool:
        return self.coeffs.shape[0] == 0

    def leading(self) -> FqElem:
        if self.is_zero():
            raise RatFuncError("leading coefficient of zero polynomial")
        return self.ctx.elem(tuple(int(x) for x in self.coeffs[-1]))

    def coeff(self, i: int) -> FqElem:
        if i < 0 or i >= self.coeffs.shape[0]:
            return self.ctx.zero()
        return self.ctx.elem(tuple(int(x) for x in self.coeffs[i]))

    def __add__(self, other: "QPoly") -> "QPoly":
        a, b = self.coeffs, other.coeffs
        n = max(a.shape[0], b.shape[0])
        out = np.zeros((n, self.ctx.e), dtype=np.int64)
        out[: a.shape[0]] += a
        out[: b.shape[0]] += b
        return QPoly(self.ctx, _trim(out % self.ctx.p))

    def __neg__(self) -> "QPoly":
        return QPoly(self.ctx, (-self.coeffs) % self.ctx.p)

    def __sub__(self, other: "QPoly") -> "QPoly":
        return self + (-other)

    def __mul__(self, other: "QPoly") -> "QPoly":
        if self.is_zero() or other.is_zero():
            return QPoly.zero(self.ctx)
        return QPoly(self.ctx, _trim(_conv_q(self.coeffs, other.coeffs, self.ctx)))

    def __pow__(self, n: int) -> "QPoly":
        out = QPoly.const(self.ctx, 1)
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def scale(self, c: FqElem) -> "QPoly":
        return self * QPoly.const(self.ctx, c)

    def shift(self, k: int) -> "QPoly":
        """Multiply by theta^k."""
        if self.is_zero():
            return self
        out = np.zeros((self.coeffs.shape[0] + k, self.ctx.e), dtype=np.int64)
        out[k:] = self.coeffs
        return QPoly(self.ctx, out)

    def divmod(self, other: "QPoly"):
        if other.is_zero():
            raise RatFuncError("polynomial division by zero")
        a = self.coeffs.copy()
        b = other.coeffs
        db = other.degree()
        binv = other.leading().inv()
        if a.shape[0] - 1 < db:
            return QPoly.zero(self.ctx), QPoly(self.ctx, _trim(a))
        q = np.zeros((a.shape[0] - db, self.ctx.e), dtype=np.int64)
        da = a.shape[0] - 1
        p = self.ctx.p
        scalar = self.ctx.e == 1
        binv_int = int(binv.coeffs[0]) if scalar else None
        while da >= db:
            if scalar:
                lead = int(a[da, 0])
                if lead:
                    c = (lead * binv_int) % p
                    q[da - db, 0] = c
                    a[da - db: da + 1, 0] = (a[da - db: da + 1, 0] - c * b[:, 0]) % p
            else:
                lead = self.ctx.elem(tuple(int(x) for x in a[da]))
                if not lead.is_zero():
                    c = lead * binv
                    crow = np.array(c.coeffs, dtype=np.int64)
                    q[da - db] = crow
                    block = _conv_q(crow.reshape(1, -1), b, self.ctx)
                    a[da - db: da + 1] = (a[da - db: da + 1] - block) % p
            da -= 1
        return QPoly(self.ctx, _trim(q)), QPoly(self.ctx, _trim(a))

    def gcd(self, other: "QPoly") -> "QPoly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        if a.is_zero():
            return a
        return a.scale(a.leading().inv())

    def monic(self) -> "QPoly":
        if self.is_zero():
            return self
        return self.scale(self.leading().inv())

    def twist(self, k: int) -> "QPoly":
        """tau^k on K: theta-exponents scale by q^k (F_q coefficients are fixed)."""
        if k == 0 or self.is_zero():
            return self
        Q = self.ctx.q ** k
        L = self.coeffs.shape[0]
        out = np.zeros(((L - 1) * Q + 1, self.ctx.e), dtype=np.int64)
        out[::Q] = self.coeffs
        return QPoly(self.ctx, out)

    def eval_local(self, cfg: LocalFieldCfg) -> LocalNum:
        """Exact evaluation at theta in the local model (Horner)."""
        if cfg.base != self.ctx:
            raise RatFuncError("polynomial field does not match local model")
        if self.is_zero():
            return cfg.zero(PINF)
        if self.degree() > 20000:
            raise RatFuncError("refusing to evaluate a degree > 20000 polynomial")
        emb = _embed_matrix(cfg)
        rows = (self.coeffs @ emb) % cfg.coeff.p
        acc = cfg.zero(PINF)
        for i in range(rows.shape[0] - 1, -1, -1):
            acc = acc * cfg.theta
            if rows[i].any():
                acc = acc + cfg.from_digits(0, rows[i].reshape(1, -1), PINF)
        return acc

    def __eq__(self, other):
        return (isinstance(other, QPoly) and self.ctx == other.ctx
                and self.coeffs.shape == other.coeffs.shape
                and bool(np.all(self.coeffs == other.coeffs)))

    def __hash__(self):
        return hash((self.ctx, self.coeffs.tobytes(), self.coeffs.shape[0]))

    def __repr__(self):
        if self.is_zero():
            return "0"
        terms = []
        for i in range(self.coeffs.shape[0]):
            row = self.coeffs[i]
            if not row.any():
                continue
            if self.ctx.e == 1:
                c = str(int(row[0]))
            else:
                c = "(" + ",".join(str(int(x)) for x in row) + ")"
            terms.append(c if i == 0 else (f"{c}*th^{i}" if c != "1" else f"th^{i}"))
        return " + ".join(terms)

    def to_json(self):
        return [[int(x) for x in row] for row in self.coeffs]


def _trim(arr: np.ndarray) -> np.ndarray:
    nz = np.nonzero(arr.any(axis=1))[0]
    if len(nz) == 0:
        return arr[:0]
    return np.ascontiguousarray(arr[: nz[-1] + 1])


_EMBED_CACHE: dict = {}


def _embed_matrix(cfg: LocalFieldCfg) -> np.ndarray:
    """Matrix sending F_q coordinate rows into F_{q^m} coordinate rows."""
    key = id(cfg)
    m = _EMBED_CACHE.get(key)
    if m is None:
        e = cfg.base.e
        m = np.zeros((e, cfg.coeff.e), dtype=np.int64)
        for i in range(e):
            gi = cfg.base.elem(tuple(1 if j == i else 0 for j in range(e)))
            m[i] = cfg.embed_base(gi).coeffs
        _EMBED_CACHE[key] = m
    return m


class RatFunc:
    """Element of K = F_q(theta): num/den with monic den; gcd-reduced whenever
    the degrees are below REDUCE_DEG_LIMIT (larger operands stay unreduced)."""

    __slots__ = ("num", "den")

    def __init__(self, num: QPoly, den: QPoly | None = None, reduce: bool = True):
        if den is None:
            den = QPoly.const(num.ctx, 1)
        if den.is_zero():
            raise RatFuncError("zero denominator")
        if num.is_zero():
            den = QPoly.const(num.ctx, 1)
        elif (reduce and den.degree() > 0
                and max(num.degree(), den.degree()) <= REDUCE_DEG_LIMIT):
            g = num.gcd(den)
            if g.degree() > 0:
                num = num.divmod(g)[0]
                den = den.divmod(g)[0]
        lc = den.leading()
        if lc != den.ctx.one():
            inv = lc.inv()
            num = num.scale(inv)
            den = den.scale(inv)
        self.num = num
        self.den = den

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def const(ctx: FqCtx, c) -> "RatFunc":
        return RatFunc(QPoly.const(ctx, c))

    @staticmethod
    def theta(ctx: FqCtx) -> "RatFunc":
        return RatFunc(QPoly.theta(ctx))

    @staticmethod
    def from_poly(p: QPoly) -> "RatFunc":
        return RatFunc(p)

    @property
    def ctx(self) -> FqCtx:
        return self.num.ctx

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.degree() == 0

    def is_const(self) -> bool:
        return self.num.degree() <= 0 and self.den.degree() == 0

    def __add__(self, other: "RatFunc") -> "RatFunc":
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den, reduce=False)

    def __sub__(self, other: "RatFunc") -> "RatFunc":
        return self + (-other)

    def __mul__(self, other: "RatFunc") -> "RatFunc":
        return RatFunc(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RatFunc") -> "RatFunc":
        return self * other.inv()

    def __pow__(self, n: int) -> "RatFunc":
        if n < 0:
            return self.inv() ** (-n)
        return RatFunc(self.num ** n, self.den ** n)

    def inv(self) -> "RatFunc":
        if self.is_zero():
            raise RatFuncError("division by zero in K")
        return RatFunc(self.den, self.num)

    def twist(self, k: int) -> "RatFunc":
        return RatFunc(self.num.twist(k), self.den.twist(k), reduce=False)

    def __eq__(self, other):
        if not isinstance(other, RatFunc):
            return NotImplemented
        return (self.num * other.den) == (other.num * self.den)

    def __hash__(self):
        # hash on the reduced form for small operands; unreduced large values
        # hash structurally (cache-only use)
        return hash((self.ctx, self.num.coeffs.tobytes(), self.den.coeffs.tobytes()))

    def eval_local(self, cfg: LocalFieldCfg, prec: int | None = None) -> LocalNum:
        """num(theta)/den(theta) as a LocalNum; values whose valuation bound
        already exceeds the precision target come back as zero-to-precision."""
        if prec is None:
            prec = cfg.default_prec
        if self.is_zero():
            return cfg.zero(PINF)
        val_lb = cfg.ram * (self.den.degree() - self.num.degree())
        if val_lb >= prec:
            return cfg.zero(prec)
        n = self.num.eval_local(cfg)
        if self.is_poly():
            return n  # monic constant denominator is 1
        d = self.den.eval_local(cfg)
        want = max(prec - int(n.valuation_lb()), 1 - 2 * d.val)
        return n * d.inv(want)

    def __repr__(self):
        if self.is_poly():
            return repr(self.num)
        return f"({self.num!r})/({self.den!r})"

    def to_json(self):
        return {"num": self.num.to_json(), "den": self.den.to_json()}


def ratfunc_from_json(ctx: FqCtx, data) -> RatFunc:
    if isinstance(data, list):
        return RatFunc(QPoly.make(ctx, np.array(data, dtype=np.int64).reshape(-1, ctx.e) if data else np.zeros((0, ctx.e))))
    return RatFunc(QPoly.make(ctx, data["num"]), QPoly.make(ctx, data["den"]))
