"""Polynomials in t, matrices, the skew ring action, and Smith normal form.

Coefficients live in a small domain adapter: either K = F_q(theta) exactly
(RatFuncField) or the tracked local model (LocalScalars).  Elements carry
their own arithmetic through operators; the adapter only supplies constants,
zero tests and inverses, which is what division-based algorithms (divmod,
Smith normal form, Bareiss determinants) need.

Twisting tau acts on coefficients only: tau(sum c_i t^i) = sum tau(c_i) t^i.
"""

from __future__ import annotations

from .ffcore import FqCtx, binom_mod_p
from .localfield import LocalFieldCfg, LocalNum, PINF
from .ratfunc import RatFunc


class AlgebraError(Exception):
    pass


class RatFuncField:
    """Domain adapter for exact coefficients in K = F_q(theta)."""

    kind = "exact"

    def __init__(self, ctx: FqCtx):
        self.ctx = ctx
        self.p = ctx.p
        self.q = ctx.q

    def zero(self):
        return RatFunc.const(self.ctx, 0)

    def one(self):
        return RatFunc.const(self.ctx, 1)

    def theta(self):
        return RatFunc.theta(self.ctx)

    def from_int(self, n: int):
        return RatFunc.const(self.ctx, n)

    def is_zero(self, x) -> bool:
        return x.is_zero()

    def inv(self, x):
        return x.inv()

    def to_local(self, x, cfg: LocalFieldCfg, prec=None) -> LocalNum:
        return x.eval_local(cfg, prec)

    def local_valuation(self, x, cfg: LocalFieldCfg):
        """Exact z-valuation of x(theta): |theta|>1 makes the top degree
        dominate, so no evaluation is needed.  (value, is_exact)."""
        if x.is_zero():
            return PINF, True
        return cfg.ram * (x.den.degree() - x.num.degree()), True

    def __eq__(self, other):
        return isinstance(other, RatFuncField) and self.ctx == other.ctx

    def __hash__(self):
        return hash(("ratfuncfield", self.ctx))

    def __repr__(self):
        return f"K=F_{self.q}(theta)"


class LocalScalars:
    """Domain adapter for precision-tracked coefficients in the local model."""

    kind = "local"

    def __init__(self, cfg: LocalFieldCfg):
        self.cfg = cfg
        self.p = cfg.base.p
        self.q = cfg.base.q

    def zero(self):
        return self.cfg.zero(PINF)

    def one(self):
        return self.cfg.one()

    def theta(self):
        return self.cfg.theta

    def from_int(self, n: int):
        return self.cfg.from_int(n)

    def is_zero(self, x) -> bool:
        return x.is_zero()

    def inv(self, x):
        return x.inv()

    def to_local(self, x, cfg: LocalFieldCfg, prec=None) -> LocalNum:
        if cfg != self.cfg:
            raise AlgebraError("LocalScalars bound to a different configuration")
        return x

    def local_valuation(self, x, cfg: LocalFieldCfg):
        return x.valuation_lb(), not x.is_zero() or x.prec == PINF

    def __eq__(self, other):
        return isinstance(other, LocalScalars) and self.cfg == other.cfg

    def __hash__(self):
        return hash(("localscalars", self.cfg))

    def __repr__(self):
        return f"local({self.cfg!r})"


class KtPoly:
    """Polynomial in t over a coefficient domain (K or the local model)."""

    __slots__ = ("dom", "coeffs")

    def __init__(self, dom, coeffs):
        self.dom = dom
        # trim trailing (to-precision) zeros
        n = len(coeffs)
        while n > 0 and dom.is_zero(coeffs[n - 1]):
            n -= 1
        self.coeffs = list(coeffs[:n])

    # -- constructors -----------------------------------------------------------

    @staticmethod
    def zero(dom) -> "KtPoly":
        return KtPoly(dom, [])

    @staticmethod
    def const(dom, c) -> "KtPoly":
        return KtPoly(dom, [c])

    @staticmethod
    def t(dom) -> "KtPoly":
        return KtPoly(dom, [dom.zero(), dom.one()])

    @staticmethod
    def t_minus_theta(dom) -> "KtPoly":
        return KtPoly(dom, [-dom.theta(), dom.one()])

    # -- basics ------------------------------------------------------------------

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_unit(self) -> bool:
        return self.degree() == 0

    def is_const(self) -> bool:
        return self.degree() <= 0

    def leading(self):
        if self.is_zero():
            raise AlgebraError("leading coefficient of zero polynomial")
        return self.coeffs[-1]

    def coeff(self, i: int):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return self.dom.zero()

    def __add__(self, other: "KtPoly") -> "KtPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return KtPoly(self.dom, [self.coeff(i) + other.coeff(i) for i in range(n)])

    def __neg__(self) -> "KtPoly":
        return KtPoly(self.dom, [-c for c in self.coeffs])

    def __sub__(self, other: "KtPoly") -> "KtPoly":
        return self + (-other)

    def __mul__(self, other: "KtPoly") -> "KtPoly":
        if self.is_zero() or other.is_zero():
            return KtPoly.zero(self.dom)
        out = [self.dom.zero() for _ in range(len(self.coeffs) + len(other.coeffs) - 1)]
        for i, a in enumerate(self.coeffs):
            if self.dom.is_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return KtPoly(self.dom, out)

    def __pow__(self, n: int) -> "KtPoly":
        out = KtPoly.const(self.dom, self.dom.one())
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def scale(self, c) -> "KtPoly":
        return KtPoly(self.dom, [c * x for x in self.coeffs])

    def shift(self, k: int) -> "KtPoly":
        """Multiply by t^k."""
        if self.is_zero():
            return self
        return KtPoly(self.dom, [self.dom.zero()] * k + self.coeffs)

    def divmod(self, other: "KtPoly"):
        if other.is_zero():
            raise AlgebraError("division by zero polynomial")
        if self.degree() < other.degree():
            return KtPoly.zero(self.dom), self
        linv = self.dom.inv(other.leading())
        rem = list(self.coeffs)
        q = [self.dom.zero()] * (len(rem) - len(other.coeffs) + 1)
        for top in range(len(rem) - 1, len(other.coeffs) - 2, -1):
            c = rem[top]
            if self.dom.is_zero(c):
                continue
            f = c * linv
            s = top - (len(other.coeffs) - 1)
            q[s] = f
            for j, b in enumerate(other.coeffs):
                rem[s + j] = rem[s + j] - f * b
        return KtPoly(self.dom, q), KtPoly(self.dom, rem[: len(other.coeffs) - 1])

    def divexact(self, other: "KtPoly") -> "KtPoly":
        q, r = self.divmod(other)
        if not r.is_zero():
            raise AlgebraError("inexact polynomial division")
        return q

    def monic(self) -> "KtPoly":
        if self.is_zero():
            return self
        return self.scale(self.dom.inv(self.leading()))

    def twist(self, k: int) -> "KtPoly":
        return KtPoly(self.dom, [c.twist(k) for c in self.coeffs])

    def hyperderive(self, n: int) -> "KtPoly":
        """d^n: sum c_i t^i -> sum C(i,n) c_i t^(i-n) with Lucas binomials."""
        if n == 0:
            return self
        out = []
        for i in range(n, len(self.coeffs)):
            b = binom_mod_p(i, n, self.dom.p)
            if b == 0:
                out.append(self.dom.zero())
            elif b == 1:
                out.append(self.coeffs[i])
            else:
                out.append(self.coeffs[i] * self.dom.from_int(b))
        return KtPoly(self.dom, out)

    def eval_at(self, x):
        """Horner evaluation at a domain element."""
        acc = self.dom.zero()
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def map_coeffs(self, fn, dom=None) -> "KtPoly":
        return KtPoly(dom if dom is not None else self.dom, [fn(c) for c in self.coeffs])

    def __eq__(self, other):
        if not isinstance(other, KtPoly):
            return NotImplemented
        d = self - other
        return d.is_zero()

    def __repr__(self):
        if self.is_zero():
            return "0"
        return " + ".join(f"({c!r})*t^{i}" if i else f"({c!r})"
                          for i, c in enumerate(self.coeffs) if not self.dom.is_zero(c))

    def to_json(self):
        return [c.to_json() if hasattr(c, "to_json") else c.to_json_dict() for c in self.coeffs]


def factor_t_power(pol: KtPoly, root: KtPoly):
    """Write pol = c * root^s with c a nonzero constant, or return None.

    root is a monic linear polynomial (t - theta here); used to verify the
    determinant shape of motive matrices.
    """
    s = 0
    cur = pol
    if cur.is_zero():
        return None
    while cur.degree() > 0:
        q, r = cur.divmod(root)
        if not r.is_zero():
            return None
        cur = q
        s += 1
    if cur.is_zero() or pol.dom.is_zero(cur.coeff(0)):
        return None
    return cur.coeff(0), s


class Matrix:
    """Dense matrix over duck-typed ring elements (KtPoly, RatFunc, LocalNum,
    TateSeries, ThetaGerm).  Shape-checked structural operations only."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = [list(r) for r in rows]
        if self.rows:
            w = len(self.rows[0])
            if any(len(r) != w for r in self.rows):
                raise AlgebraError("ragged matrix")

    @property
    def nrows(self):
        return len(self.rows)

    @property
    def ncols(self):
        return len(self.rows[0]) if self.rows else 0

    @staticmethod
    def identity(n: int, one, zero) -> "Matrix":
        return Matrix([[one if i == j else zero for j in range(n)] for i in range(n)])

    @staticmethod
    def filled(n: int, m: int, value) -> "Matrix":
        return Matrix([[value for _ in range(m)] for _ in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def copy(self) -> "Matrix":
        return Matrix([list(r) for r in self.rows])

    def __add__(self, other: "Matrix") -> "Matrix":
        self._shape_eq(other)
        return Matrix([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._shape_eq(other)
        return Matrix([[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)])

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self.rows])

    def __mul__(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise AlgebraError(f"matrix shape mismatch {self.nrows}x{self.ncols} * "
                               f"{other.nrows}x{other.ncols}")
        bt = list(zip(*other.rows))
        out = []
        for ra in self.rows:
            row = []
            for cb in bt:
                acc = ra[0] * cb[0]
                for a, b in zip(ra[1:], cb[1:]):
                    acc = acc + a * b
                row.append(acc)
            out.append(row)
        return Matrix(out)

    def _shape_eq(self, other):
        if self.nrows != other.nrows or self.ncols != other.ncols:
            raise AlgebraError("matrix shape mismatch")

    def scale(self, c) -> "Matrix":
        return Matrix([[a * c for a in r] for r in self.rows])

    def transpose(self) -> "Matrix":
        return Matrix([list(c) for c in zip(*self.rows)])

    def map(self, fn) -> "Matrix":
        return Matrix([[fn(a) for a in r] for r in self.rows])

    def twist(self, k: int) -> "Matrix":
        return self.map(lambda a: a.twist(k))

    def hyperderive(self, n: int) -> "Matrix":
        return self.map(lambda a: a.hyperderive(n))

    def col(self, j: int):
        return [r[j] for r in self.rows]

    def apply(self, vec):
        """Matrix times column vector (a plain list)."""
        if self.ncols != len(vec):
            raise AlgebraError("matrix/vector shape mismatch")
        out = []
        for r in self.rows:
            acc = r[0] * vec[0]
            for a, x in zip(r[1:], vec[1:]):
                acc = acc + a * x
            out.append(acc)
        return out

    def __repr__(self):
        return "Matrix[" + "; ".join(", ".join(repr(a) for a in r) for r in self.rows) + "]"


def kt_matmul(a: Matrix, b: Matrix) -> Matrix:
    return a * b


def det_cofactor(m: Matrix, zero):
    """Direct expansion determinant; the independent small-matrix oracle."""
    n = m.nrows
    if n != m.ncols:
        raise AlgebraError("determinant of a non-square matrix")
    if n == 0:
        raise AlgebraError("empty matrix")
    if n == 1:
        return m[0, 0]
    acc = None
    for j in range(n):
        minor = Matrix([r[:j] + r[j + 1:] for r in m.rows[1:]])
        term = m[0, j] * det_cofactor(minor, zero)
        if j % 2 == 1:
            term = -term
        acc = term if acc is None else acc + term
    return acc


def det_bareiss(m: Matrix, divexact, zero, one):
    """Fraction-free determinant over an integral domain with exact division."""
    n = m.nrows
    if n != m.ncols:
        raise AlgebraError("determinant of a non-square matrix")
    a = [list(r) for r in m.rows]
    sign = 1
    prev = one
    for k in range(n - 1):
        if _entry_is_zero(a[k][k]):
            piv = None
            for i in range(k + 1, n):
                if not _entry_is_zero(a[i][k]):
                    piv = i
                    break
            if piv is None:
                return zero
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                a[i][j] = divexact(num, prev)
        prev = a[k][k]
    d = a[n - 1][n - 1]
    return d if sign == 1 else -d


def _entry_is_zero(x) -> bool:
    return x.is_zero()


def kt_det(m: Matrix):
    """Determinant of a square KtPoly matrix (cofactor for n <= 3, Bareiss above)."""
    if m.nrows == 0:
        raise AlgebraError("empty matrix")
    dom = m[0, 0].dom
    zero = KtPoly.zero(dom)
    if m.nrows <= 3:
        return det_cofactor(m, zero)
    one = KtPoly.const(dom, dom.one())
    return det_bareiss(m, lambda x, y: x.divexact(y), zero, one)


def kt_adjugate(m: Matrix) -> Matrix:
    n = m.nrows
    if n == 1:
        dom = m[0, 0].dom
        return Matrix([[KtPoly.const(dom, dom.one())]])
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = Matrix([r[:i] + r[i + 1:] for k, r in enumerate(m.rows) if k != j])
            c = kt_det(minor)
            if (i + j) % 2 == 1:
                c = -c
            row.append(c)
        out.append(row)
    return Matrix(out)


def kt_inv(m: Matrix):
    """Inverse as (adjugate, det): m^(-1) = adjugate / det, with the
    denominator explicit.  Raises on singular input with the det witness."""
    d = kt_det(m)
    if d.is_zero():
        raise AlgebraError(f"singular matrix: det = {d!r}")
    return kt_adjugate(m), d

def kt_inv_unimodular(m: Matrix) -> Matrix:
    """Exact inverse of a unimodular matrix over K[t] (det a nonzero constant)."""
    adj, d = kt_inv(m)
    if d.degree() != 0:
        raise AlgebraError("matrix is not unimodular over K[t]")
    dinv = KtPoly.const(d.dom, d.dom.inv(d.coeff(0)))
    return adj.map(lambda x: x * dinv)


# -- skew polynomials ---------------------------------------------------------------


class SkewPoly:
    """Polynomial in tau with twisted multiplication: tau * c = c^q * tau.

    Coefficients are domain scalars or matrices of them; every coefficient
    must support +, *, unary - and .twist(k).
    """

    __slots__ = ("coeffs", "_zero")

    def __init__(self, coeffs, zero=None):
        n = len(coeffs)
        while n > 0 and _skew_zero(coeffs[n - 1]):
            n -= 1
        self.coeffs = list(coeffs[:n])
        self._zero = zero if zero is not None else (coeffs[0] if coeffs else None)

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, i: int):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        if self._zero is None:
            raise AlgebraError("zero prototype unavailable for empty SkewPoly")
        z = self._zero
        return z - z

    def __add__(self, other: "SkewPoly") -> "SkewPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return SkewPoly([self.coeff(i) + other.coeff(i) for i in range(n)],
                        zero=self._zero if self._zero is not None else other._zero)

    def __sub__(self, other: "SkewPoly") -> "SkewPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return SkewPoly([self.coeff(i) - other.coeff(i) for i in range(n)],
                        zero=self._zero if self._zero is not None else other._zero)

    def __mul__(self, other: "SkewPoly") -> "SkewPoly":
        """(sum a_i tau^i)(sum b_j tau^j) = sum_n sum_{i+j=n} a_i b_j^(i) tau^n."""
        if not self.coeffs or not other.coeffs:
            return SkewPoly([], zero=self._zero if self._zero is not None else other._zero)
        out = {}
        for i, a in enumerate(self.coeffs):
            if _skew_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                if _skew_zero(b):
                    continue
                term = a * b.twist(i)
                key = i + j
                out[key] = term if key not in out else out[key] + term
        if not out:
            return SkewPoly([], zero=self._zero)
        n = max(out) + 1
        filler = self.coeffs[0] - self.coeffs[0]
        return SkewPoly([out.get(k, filler) for k in range(n)], zero=self._zero)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"({c!r})*tau^{i}" if i else f"({c!r})"
                          for i, c in enumerate(self.coeffs))


def _skew_zero(c) -> bool:
    if isinstance(c, Matrix):
        return all(a.is_zero() for r in c.rows for a in r)
    return c.is_zero()


def skew_mul(a: SkewPoly, b: SkewPoly) -> SkewPoly:
    return a * b


# -- Smith normal form over K[t] -----------------------------------------------------


def smith_normal_form(m: Matrix):
    """U, D, V with U*m*V = D, U and V unimodular over K[t], D diagonal with
    monic entries and d_i | d_{i+1}.

    Pivoting is deterministic: minimal t-degree, ties broken by smallest row
    then column index.  Works verbatim over the local model, where "zero"
    means zero-to-precision.
    """
    if m.nrows == 0 or m.nrows != m.ncols:
        raise AlgebraError("Smith normal form wants a nonempty square matrix")
    dom = m[0, 0].dom
    n = m.nrows
    a = m.copy()
    u = Matrix.identity(n, KtPoly.const(dom, dom.one()), KtPoly.zero(dom))
    v = Matrix.identity(n, KtPoly.const(dom, dom.one()), KtPoly.zero(dom))

    def row_swap(mat, i1, i2):
        mat.rows[i1], mat.rows[i2] = mat.rows[i2], mat.rows[i1]

    def col_swap(mat, j1, j2):
        for r in mat.rows:
            r[j1], r[j2] = r[j2], r[j1]

    def row_addmul(mat, i_dst, i_src, f: KtPoly):
        mat.rows[i_dst] = [x + f * y for x, y in zip(mat.rows[i_dst], mat.rows[i_src])]

    def col_addmul(mat, j_dst, j_src, f: KtPoly):
        for r in mat.rows:
            r[j_dst] = r[j_dst] + f * r[j_src]

    for k in range(n):
        while True:
            piv = None
            best = None
            for i in range(k, n):
                for j in range(k, n):
                    if not a[i, j].is_zero():
                        d = a[i, j].degree()
                        if best is None or d < best:
                            best = d
                            piv = (i, j)
            if piv is None:
                break  # lower-right block entirely zero
            i, j = piv
            if i != k:
                row_swap(a, k, i)
                row_swap(u, k, i)
            if j != k:
                col_swap(a, k, j)
                col_swap(v, k, j)
            dirty = False
            for i in range(k + 1, n):
                if a[i, k].is_zero():
                    continue
                q, r = a[i, k].divmod(a[k, k])
                row_addmul(a, i, k, -q)
                row_addmul(u, i, k, -q)
                if not a[i, k].is_zero():
                    dirty = True
            for j in range(k + 1, n):
                if a[k, j].is_zero():
                    continue
                q, r = a[k, j].divmod(a[k, k])
                col_addmul(a, j, k, -q)
                col_addmul(v, j, k, -q)
                if not a[k, j].is_zero():
                    dirty = True
            if dirty:
                continue
            # pivot divides row/column; enforce divisibility of the rest
            offender = None
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    if not a[i, j].divmod(a[k, k])[1].is_zero():
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_addmul(a, k, offender, KtPoly.const(dom, dom.one()))
            row_addmul(u, k, offender, KtPoly.const(dom, dom.one()))

    # monic normalization of the diagonal (row scalings keep U unimodular)
    for k in range(n):
        d = a[k, k]
        if d.is_zero():
            continue
        c = d.leading()
        if dom.is_zero(c - dom.one()):
            continue
        cinv = KtPoly.const(dom, dom.inv(c))
        a.rows[k] = [x * cinv for x in a.rows[k]]
        u.rows[k] = [x * cinv for x in u.rows[k]]
    return u, a, v


def snf_invariants(d: Matrix):
    """Diagonal entries of a Smith form."""
    return [d[i, i] for i in range(d.nrows)]
