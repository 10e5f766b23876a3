"""Exact arithmetic in finite fields F_q, q = p^e, plus characteristic-p binomials.

Elements are stored in the polynomial basis: an element of F_{p^e} is a vector
of length e over F_p, taken modulo a monic irreducible modulus.  Everything at
desk scale (q <= 256), so no Zech logarithms or fancy factoring -- modulus
irreducibility is verified at construction by trial division.

All values are immutable; every operation is a pure function.
"""

from __future__ import annotations

import numpy as np


class FFError(Exception):
    """Arithmetic or construction error in finite-field computations."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def binom_mod_p(i: int, n: int, p: int) -> int:
    """Binomial coefficient C(i, n) reduced mod p, via base-p digits (Lucas).

    Returns an integer in [0, p).  C(i, n) = 0 when n > i.
    """
    if i < 0 or n < 0:
        raise FFError("binom_mod_p requires nonnegative arguments")
    if n > i:
        return 0
    out = 1
    while n > 0:
        id_, nd = i % p, n % p
        if nd > id_:
            return 0
        num = den = 1
        for k in range(nd):
            num = (num * (id_ - k)) % p
            den = (den * (k + 1)) % p
        out = (out * num * pow(den, p - 2, p)) % p
        i //= p
        n //= p
    return out


def binom_mod_p_signed(j: int, n: int, p: int) -> int:
    """C(j, n) mod p for arbitrary integer j (upper index may be negative)."""
    if j >= 0:
        return binom_mod_p(j, n, p)
    # C(-k, n) = (-1)^n C(k+n-1, n)
    b = binom_mod_p(-j + n - 1, n, p)
    return b if n % 2 == 0 else (-b) % p


# -- polynomial helpers over F_p (coefficient lists, ascending) --------------

def _poly_trim(c):
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mulmod(a, b, mod, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_divmod(out, mod, p)[1]


def _poly_divmod(a, b, p):
    a = list(a)
    b = _poly_trim(list(b))
    if not b:
        raise FFError("polynomial division by zero")
    binv = pow(b[-1], p - 2, p)
    q = [0] * max(0, len(a) - len(b) + 1)
    _poly_trim(a)
    while len(a) >= len(b):
        c = (a[-1] * binv) % p
        s = len(a) - len(b)
        q[s] = c
        for j, bj in enumerate(b):
            a[s + j] = (a[s + j] - c * bj) % p
        _poly_trim(a)
    return q, a


def _poly_is_irreducible(mod, p):
    """Trial factorization: divide by every monic polynomial of degree <= e/2."""
    e = len(mod) - 1
    if e < 1 or mod[-1] != 1:
        return False
    for d in range(1, e // 2 + 1):
        # iterate monic candidates c_0 + c_1 x + ... + x^d in lex order
        for idx in range(p ** d):
            cand = []
            k = idx
            for _ in range(d):
                cand.append(k % p)
                k //= p
            cand.append(1)
            if not _poly_divmod(mod, cand, p)[1]:
                return False
    return True


def _lex_least_irreducible(p, e):
    for idx in range(p ** e):
        cand = []
        k = idx
        for _ in range(e):
            cand.append(k % p)
            k //= p
        cand.append(1)
        if _poly_is_irreducible(cand, p):
            return tuple(cand)
    raise FFError(f"no irreducible polynomial of degree {e} over F_{p}")  # unreachable


class FqCtx:
    """Context for F_q = F_p[g]/(modulus), q = p^e.

    When no modulus is given the lexicographically-least monic irreducible of
    degree e is used, so results are reproducible across runs.
    """

    def __init__(self, p: int, e: int = 1, modulus=None):
        if not is_prime(p):
            raise FFError(f"{p} is not prime")
        if e < 1:
            raise FFError("extension degree must be >= 1")
        self.p = p
        self.e = e
        self.q = p ** e
        if modulus is None:
            modulus = _lex_least_irreducible(p, e)
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != e + 1 or modulus[-1] != 1:
            raise FFError("modulus must be monic of degree e")
        if not _poly_is_irreducible(list(modulus), p):
            raise FFError("modulus is not irreducible over F_p")
        self.modulus = modulus
        # reduction rows for g^e .. g^(2e-2) and Frobenius matrix, as numpy
        self._red = self._reduction_table()
        self._frob = self._frobenius_matrix()
        self._frob_pows = {0: np.eye(e, dtype=np.int64)}

    def _reduction_table(self):
        e, p = self.e, self.p
        rows = np.zeros((2 * e - 1, e), dtype=np.int64)
        cur = [0] * e
        cur[0] = 1
        for j in range(2 * e - 1):
            rows[j, : len(cur)] = cur
            cur = _poly_mulmod(cur, [0, 1], list(self.modulus), p)
            cur = cur + [0] * (e - len(cur))
        return rows

    def _frobenius_matrix(self):
        e, p = self.e, self.p
        m = np.zeros((e, e), dtype=np.int64)
        for i in range(e):
            gi = [0] * (i + 1)
            gi[i] = 1
            img = _poly_powmod(gi, p, list(self.modulus), p)
            m[i, : len(img)] = img
        return m

    def frobenius_power(self, k: int):
        """Matrix of x -> x^(p^k) acting on coordinate rows (digits @ M)."""
        k %= self.e
        if k not in self._frob_pows:
            m = np.eye(self.e, dtype=np.int64)
            for _ in range(k):
                m = (m @ self._frob) % self.p
            self._frob_pows[k] = m
        return self._frob_pows[k]

    def reduce_products(self, arr):
        """Reduce rows of g-degree < 2e-1 back to the polynomial basis."""
        return (arr @ self._red) % self.p

    # -- element constructors -------------------------------------------------

    def elem(self, coeffs) -> "FqElem":
        if isinstance(coeffs, int):
            return self.from_int(coeffs)
        c = tuple(int(x) % self.p for x in coeffs)
        if len(c) < self.e:
            c = c + (0,) * (self.e - len(c))
        if len(c) != self.e:
            raise FFError("coefficient vector length must equal e")
        return FqElem(self, c)

    def from_int(self, n: int) -> "FqElem":
        return FqElem(self, (n % self.p,) + (0,) * (self.e - 1))

    def zero(self) -> "FqElem":
        return self.from_int(0)

    def one(self) -> "FqElem":
        return self.from_int(1)

    def gen(self) -> "FqElem":
        if self.e == 1:
            return self.one()
        return FqElem(self, (0, 1) + (0,) * (self.e - 2))

    def elements(self):
        """All q elements, in lex coefficient order."""
        for idx in range(self.q):
            c = []
            k = idx
            for _ in range(self.e):
                c.append(k % self.p)
                k //= self.p
            yield FqElem(self, tuple(c))

    def binom(self, i: int, n: int) -> "FqElem":
        return self.from_int(binom_mod_p(i, n, self.p))

    def __eq__(self, other):
        return (
            isinstance(other, FqCtx)
            and self.p == other.p
            and self.e == other.e
            and self.modulus == other.modulus
        )

    def __hash__(self):
        return hash((self.p, self.e, self.modulus))

    def __repr__(self):
        return f"FqCtx(p={self.p}, e={self.e}, modulus={list(self.modulus)})"

    def to_config(self):
        return {"p": self.p, "e": self.e, "modulus": list(self.modulus)}


def _poly_powmod(base, exp, mod, p):
    out = [1]
    b = list(base)
    while exp:
        if exp & 1:
            out = _poly_mulmod(out, b, mod, p)
        b = _poly_mulmod(b, b, mod, p)
        exp >>= 1
    out = out + [0] * (len(mod) - 1 - len(out))
    return out


class FqElem:
    """Element of F_q in the polynomial basis of its FqCtx."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: FqCtx, coeffs: tuple):
        self.ctx = ctx
        self.coeffs = coeffs

    def _check(self, other):
        if self.ctx != other.ctx:
            raise FFError("FqElem context mismatch")

    def __add__(self, other):
        self._check(other)
        p = self.ctx.p
        return FqElem(self.ctx, tuple((a + b) % p for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        self._check(other)
        p = self.ctx.p
        return FqElem(self.ctx, tuple((a - b) % p for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        p = self.ctx.p
        return FqElem(self.ctx, tuple((-a) % p for a in self.coeffs))

    def __mul__(self, other):
        self._check(other)
        prod = _poly_mulmod(list(self.coeffs), list(other.coeffs), list(self.ctx.modulus), self.ctx.p)
        prod = prod + [0] * (self.ctx.e - len(prod))
        return FqElem(self.ctx, tuple(prod))

    def __truediv__(self, other):
        return self * other.inv()

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        out = self.ctx.one()
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def inv(self) -> "FqElem":
        if self.is_zero():
            raise FFError("division by zero in F_q")
        return self ** (self.ctx.q - 2)

    def frobenius(self) -> "FqElem":
        return self ** self.ctx.p

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __eq__(self, other):
        return isinstance(other, FqElem) and self.ctx == other.ctx and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ctx.p, self.ctx.e, self.coeffs))

    def __repr__(self):
        if self.ctx.e == 1:
            return f"F{self.ctx.p}({self.coeffs[0]})"
        return f"Fq{self.ctx.q}{list(self.coeffs)}"


def fq_arith(a: FqElem, b: FqElem, op: str) -> FqElem:
    """Dispatch form of the field arithmetic: op in {add, mul, inv, pow}.

    For op == "pow", b is interpreted through its integer image only when the
    exponent is passed as an int; FqElem exponents are rejected.
    """
    if op == "inv":
        return a.inv()
    if op == "pow":
        if not isinstance(b, int):
            raise FFError("pow exponent must be an integer")
        return a ** b
    if not isinstance(b, FqElem):
        raise FFError("operand must be FqElem")
    if a.ctx != b.ctx:
        raise FFError("FqElem context mismatch")
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise FFError(f"unknown op {op!r}")


def subfield_embedding(sub: FqCtx, sup: FqCtx):
    """Embedding F_{p^e} -> F_{p^(e*m)} determined by the first root (in lex
    element order) of sub.modulus inside sup.  Returns a callable on FqElem."""
    if sub.p != sup.p or sup.e % sub.e != 0:
        raise FFError("no embedding: incompatible field sizes")
    if sub == sup:
        return lambda x: x
    if sub.e == 1:
        return lambda x: sup.from_int(x.coeffs[0])
    root = None
    for cand in sup.elements():
        acc = sup.zero()
        for c in reversed(sub.modulus):
            acc = acc * cand + sup.from_int(c)
        if acc.is_zero():
            root = cand
            break
    if root is None:
        raise FFError("modulus has no root in the target field")  # unreachable

    def embed(x: FqElem) -> FqElem:
        acc = sup.zero()
        for c in reversed(x.coeffs):
            acc = acc * root + sup.from_int(c)
        return acc

    return embed
