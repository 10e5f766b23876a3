"""Ready-made models: the Carlitz module, its tensor powers, Drinfeld modules
from coefficients or from a lattice, the omega product, and pi-tilde.

Constructor outputs are validated internally (nilpotency, the exponential
functional equation at a modest order, and the exact motive relation linking
phi_t, Theta and A) instead of being trusted as citations.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .ffcore import FqCtx
from .localfield import LocalFieldCfg, LocalNum, PINF
from .ratfunc import RatFunc, ratfunc_from_json
from .ktalgebra import Matrix, KtPoly, RatFuncField, LocalScalars
from .tate import TateSeries, ThetaGerm
from .tmodule import TModuleDef, exp_functional_residuals
from .motive import (MotiveDef, Trivialization, check_motive_relation,
                     build_trivialization_from_lattice,
                     make_closed_form_trivialization)


class ModelError(Exception):
    pass


_VALIDATE_J = 5


def _validate_construction(E: TModuleDef, M: MotiveDef):
    res = exp_functional_residuals(E, _VALIDATE_J)
    exact = E.dom.kind == "exact"
    for m in res:
        for row in m.rows:
            for x in row:
                if not x.is_zero():
                    raise ModelError(
                        "constructed module fails the exponential functional equation")
    rel = check_motive_relation(M)
    if exact and not rel["exact_zero"]:
        raise ModelError("constructed motive fails the coordinate relation")
    if not exact and rel["residual_valuation"] != "inf" and not rel["exact_zero"]:
        # numeric constructions: residual must sit at the precision floor
        if rel["residual_valuation"] < 0:
            raise ModelError(
                f"numeric motive relation residual too large "
                f"(valuation {rel['residual_valuation']})")


def make_carlitz(ctx: FqCtx):
    """phi_t = theta + tau; Theta = [t - theta]; kappa = m."""
    return make_carlitz_tensor(ctx, 1)


def make_carlitz_tensor(ctx: FqCtx, n: int):
    """n-th tensor power of the Carlitz module: dimension n, rank 1,
    phi_t = (theta I + N) + E_n tau with N the superdiagonal nilpotent and
    E_n the lower-left unit; tau(m) = (t-theta)^n m, kappa_i = (t-theta)^(i-1) m."""
    if n < 1:
        raise ModelError("tensor power must be >= 1")
    dom = RatFuncField(ctx)
    th = dom.theta()
    z, o = dom.zero(), dom.one()
    a0 = Matrix([[th if i == j else (o if j == i + 1 else z) for j in range(n)]
                 for i in range(n)])
    a1 = Matrix([[o if (i == n - 1 and j == 0) else z for j in range(n)]
                 for i in range(n)])
    E = TModuleDef(dom, [a0, a1], r=1, name=f"carlitz_tensor_{n}" if n > 1 else "carlitz")
    tmth = KtPoly.t_minus_theta(dom)
    theta_mat = Matrix([[tmth ** n]])
    a_mat = Matrix([[tmth ** i] for i in range(n)])
    M = MotiveDef(E, theta_mat, a_mat)
    _validate_construction(E, M)
    return E, M


def make_drinfeld_from_coeffs(dom, coeffs, name: str = "drinfeld"):
    """Drinfeld module phi_t = theta + a_1 tau + ... + a_r tau^r over the given
    domain (exact or local), with the companion-form motive on the basis
    m_i = tau^(i-1) and coordinate row A = (1, 0, ..., 0)."""
    coeffs = list(coeffs)
    r = len(coeffs)
    if r < 1:
        raise ModelError("a Drinfeld module needs rank >= 1")
    if dom.is_zero(coeffs[-1]):
        raise ModelError("leading coefficient a_r must be nonzero")
    th = dom.theta()
    mats = [Matrix([[th]])] + [Matrix([[c]]) for c in coeffs]
    E = TModuleDef(dom, mats, r=r, name=name)
    z = KtPoly.zero(dom)
    o = KtPoly.const(dom, dom.one())
    ar_inv = dom.inv(coeffs[-1])
    rows = []
    for i in range(r - 1):
        rows.append([o if j == i + 1 else z for j in range(r)])
    last = [KtPoly.t_minus_theta(dom).scale(ar_inv)]
    for i in range(r - 1):
        last.append(KtPoly.const(dom, -(ar_inv * coeffs[i])))
    rows.append(last)
    theta_mat = Matrix(rows)
    a_mat = Matrix([[o if j == 0 else z for j in range(r)]])
    M = MotiveDef(E, theta_mat, a_mat)
    _validate_construction(E, M)
    return E, M


# -- omega and pi-tilde -----------------------------------------------------------------


def pi_tilde(cfg: LocalFieldCfg, with_certificate: bool = False):
    """lambda_theta * theta * prod_{j>=1} (1 - theta^(1-q^j))^(-1), truncated
    once the factors are 1-to-precision."""
    lam = cfg.lambda_theta()
    q = cfg.base.q
    theta_inv = cfg.theta_inv()
    acc = lam * cfg.theta
    used = 0
    j = 1
    while True:
        tail_val = cfg.ram * (q ** j - 1)
        if tail_val > cfg.default_prec + 2 * cfg.ram:
            break
        factor = cfg.one() - cfg.theta * theta_inv ** (q ** j)
        acc = acc * factor.inv()
        used += 1
        j += 1
    if with_certificate:
        return acc, {"factors_used": used,
                     "first_skipped_factor_valuation": cfg.ram * (q ** j - 1)}
    return acc


def omega_product(cfg: LocalFieldCfg, D: int = 40, factor_count: int | None = None,
                  g_order: int = 8):
    """The omega function as a truncated Tate series and as a germ at theta:
    lambda_theta * prod_{i>=0} (1 - t/theta^(q^i))^(-1).

    The i = 0 factor carries the simple pole at theta; later factors are
    expanded around theta.  Factors whose contribution falls below the
    precision budget are skipped, with the count and the first skipped
    valuation returned as the certificate."""
    lam = cfg.lambda_theta()  # raises with a refinement hint when absent
    q = cfg.base.q
    theta_inv = cfg.theta_inv()
    series = TateSeries.from_coeffs(cfg, [lam], D)
    pole = ThetaGerm(cfg, -1, [-cfg.theta], PINF)
    germ = pole.scale(lam)
    used = 0
    i = 1
    # i = 0 series factor: geometric series in t/theta
    geo = TateSeries.from_coeffs(cfg, [theta_inv ** k for k in range(D)], D)
    series = series * geo
    while True:
        if factor_count is not None:
            if i > factor_count:
                break
        elif cfg.ram * q ** i > cfg.default_prec + 2 * cfg.ram + _lam_shift(cfg):
            break
        c_inv = theta_inv ** (q ** i)
        fac_series = TateSeries.from_coeffs(cfg, [c_inv ** k for k in range(D)], D)
        series = series * fac_series
        # (1 - t/c) = (1 - theta/c) - (t-theta)/c around theta
        fac_germ = ThetaGerm(cfg, 0, [cfg.one() - cfg.theta * c_inv, -c_inv], PINF)
        germ = germ * fac_germ.inv(out_order=g_order + 2)
        used += 1
        i += 1
    cert = {"factors_used": used,
            "first_skipped_factor_valuation": cfg.ram * (q ** i - 1)}
    return series, germ, cert


def _lam_shift(cfg: LocalFieldCfg) -> int:
    v = cfg.lambda_theta().valuation_lb()
    return abs(int(v)) if v != PINF else 0


def carlitz_tensor_trivialization(M: MotiveDef, cfg: LocalFieldCfg, D: int = 40,
                                  factor_count: int | None = None) -> Trivialization:
    """Upsilon^{-1} = [omega^n] for the n-th tensor power (rank 1)."""
    if M.r != 1:
        raise ModelError("omega trivializations apply to the rank-1 tensor powers")
    n = M.E.d
    series, germ, _ = omega_product(cfg, D, factor_count, g_order=2 * n + 2)
    ups_inv = Matrix([[series ** n if n > 1 else series]])
    germs = Matrix([[germ ** n if n > 1 else germ]])
    return make_closed_form_trivialization(M, cfg, ups_inv, germs)


# -- lattice-built Drinfeld modules ------------------------------------------------------


def _moore_coeffs(cfg: LocalFieldCfg, lattice, b_trunc: int):
    """Coefficients alpha_k (of x^(q^k)) of e_S(x) = x prod_{0 != l in S}(1 - x/l)
    for the finite F_q-span S of theta^u lattice_i, u < b_trunc.

    Built by the subspace doubling e_{V + F_q mu}(y) = e_V(y)^q -
    e_V(mu)^(q-1) e_V(y), which is exactly F_q-linear; the normalization
    divides by the linear coefficient."""
    coeffs = [cfg.one()]  # monic e_V, coefficients of x^(q^k)
    for lam in lattice:
        for u in range(b_trunc):
            mu = cfg.theta_pow(u) * lam
            # e_V(mu)
            img = cfg.zero(PINF)
            tw = mu
            for k, c in enumerate(coeffs):
                img = img + c * tw
                tw = tw.twist(1)
            if img.is_zero():
                raise ModelError(
                    "lattice generators are F_q[theta]-dependent at this truncation")
            m_pow = img ** (cfg.base.q - 1)
            new = [coeffs[0] * (-m_pow)]
            for k in range(1, len(coeffs) + 1):
                term = coeffs[k - 1].twist(1)
                if k < len(coeffs):
                    term = term - coeffs[k] * m_pow
                new.append(term)
            coeffs = new
    c0_inv = coeffs[0].inv()
    return [c * c0_inv for c in coeffs]


def make_drinfeld_from_lattice(cfg: LocalFieldCfg, lattice, b_trunc: int = 3,
                               D: int = 40, J: int = 12):
    """Drinfeld module with period lattice spanned by the given generators
    (at truncation depth b_trunc), plus its companion motive and an empirical
    precision certificate from the b_trunc + 1 rerun."""
    lattice = list(lattice)
    r = len(lattice)
    if r < 1:
        raise ModelError("need at least one lattice generator")
    if r > 3 or cfg.base.q > 9:
        raise ModelError("lattice constructions are desk-scale: rank <= 3, q <= 9")
    theta = cfg.theta

    def phi_coeffs(b):
        alpha = _moore_coeffs(cfg, lattice, b)
        if len(alpha) <= r:
            raise ModelError("truncation too small for the requested rank")
        a = {0: theta}
        for n in range(1, r + 1):
            rhs = alpha[n] * theta.twist(n) - theta * alpha[n]
            for i in range(1, n):
                rhs = rhs - a[i] * alpha[n - i].twist(i)
            a[n] = rhs
        return [a[n] for n in range(1, r + 1)]

    coeffs = phi_coeffs(b_trunc)
    coeffs_next = phi_coeffs(b_trunc + 1)
    agreement = min((x - y).valuation_lb() for x, y in zip(coeffs, coeffs_next))
    if coeffs[-1].is_zero():
        raise ModelError("leading coefficient a_r vanishes to precision: "
                         "degenerate lattice at this truncation")
    report = {
        "b_trunc": b_trunc,
        "coefficient_agreement_valuation": ("inf" if agreement == PINF
                                            else int(agreement)),
        "a_r_valuation": int(coeffs[-1].valuation_lb()),
        "warning_low_precision": agreement != PINF and agreement < 10,
    }
    # clamp stored precision to the certified agreement so downstream precision
    # tracking reflects the truncation error, not just the z-arithmetic
    if agreement != PINF:
        clamped = [cfg.from_digits(c.val, c.digits, min(c.prec, int(agreement)))
                   for c in coeffs]
    else:
        clamped = coeffs
    dom = LocalScalars(cfg)
    E, M = make_drinfeld_from_coeffs(dom, clamped, name=f"drinfeld_lattice_r{r}")
    return E, M, report


# -- model specification (CLI payload) ----------------------------------------------------


@dataclass
class ModelSpec:
    kind: str
    n: int = 1
    coeffs: list = dc_field(default_factory=list)
    lattice: list = dc_field(default_factory=list)
    b_trunc: int = 3

    KINDS = ("carlitz", "carlitz-tensor", "drinfeld-coeffs", "drinfeld-lattice")

    def validate(self):
        if self.kind not in self.KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}; expected one of "
                             f"{', '.join(self.KINDS)}")
        if self.kind == "carlitz-tensor" and self.n < 1:
            raise ModelError("tensor power must be >= 1")
        if self.kind == "drinfeld-coeffs" and not self.coeffs:
            raise ModelError("drinfeld-coeffs needs coefficients")
        if self.kind == "drinfeld-lattice" and not self.lattice:
            raise ModelError("drinfeld-lattice needs lattice generators")


def build_model(spec: ModelSpec, cfg: LocalFieldCfg, D: int = 40, J: int = 12):
    """(E, M, trivialization-or-None, construction report)."""
    spec.validate()
    if spec.kind in ("carlitz", "carlitz-tensor"):
        n = 1 if spec.kind == "carlitz" else spec.n
        E, M = make_carlitz_tensor(cfg.base, n)
        T = carlitz_tensor_trivialization(M, cfg, D)
        return E, M, T, {}
    if spec.kind == "drinfeld-coeffs":
        dom = RatFuncField(cfg.base)
        coeffs = [c if isinstance(c, RatFunc) else ratfunc_from_json(cfg.base, c)
                  for c in spec.coeffs]
        E, M = make_drinfeld_from_coeffs(dom, coeffs)
        return E, M, None, {}
    lattice = [x if isinstance(x, LocalNum)
               else cfg.from_digits(x["val"], x["coeffs"],
                                    PINF if x.get("prec") in (None, "inf") else x["prec"])
               for x in spec.lattice]
    E, M, rep = make_drinfeld_from_lattice(cfg, lattice, spec.b_trunc, D, J)
    T = build_trivialization_from_lattice(M, cfg, lattice, D, J)
    return E, M, T, rep


def default_cfg_for_q(q: int, m: int = 1, prec: int = 150) -> LocalFieldCfg:
    """theta = -z^(-(q-1)): the uniformizer is a (q-1)-st root of -1/theta, so
    lambda_theta = z^(-1) always exists in the model."""
    p, e = _factor_prime_power(q)
    ctx = FqCtx(p, e)
    ram = q - 1 if q > 2 else 1
    return LocalFieldCfg(ctx, m, {-ram: (p - 1) % p if q > 2 else 1}, prec)


def _factor_prime_power(q: int):
    for p in range(2, q + 1):
        if q % p == 0:
            e = 0
            qq = q
            while qq % p == 0:
                qq //= p
                e += 1
            if qq != 1:
                raise ModelError(f"{q} is not a prime power")
            return p, e
    raise ModelError(f"{q} is not a prime power")
