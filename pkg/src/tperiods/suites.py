"""Seeded verification suites behind the `verify` command.

Three groups: `algebraic` (exact identities, no tolerance), `analytic`
(cross-route numeric equalities at precision floors) and `roundtrip`
(lattice / delta round trips).  Every suite takes an explicit seed and
returns a list of result rows {name, passed, detail}; determinism is part of
the contract.
"""

from __future__ import annotations

import math
import random

from .ffcore import FqCtx, binom_mod_p
from .localfield import LocalFieldCfg, LocalNum, PINF, RefinementRequired
from .ratfunc import QPoly, RatFunc
from .ktalgebra import (Matrix, KtPoly, RatFuncField, kt_det,
                        kt_inv_unimodular, det_cofactor, smith_normal_form,
                        SkewPoly)
from .tate import (TateSeries, ThetaGerm, prolong, residue,
                   residue_via_hyperderivative, tail_limit_eval)
from .tmodule import (exp_functional_residuals, check_torsion_system)
from . import models as mdl
from . import motive as mtv


# -- random generators --------------------------------------------------------------


def random_fq(rng: random.Random, ctx: FqCtx):
    return ctx.elem([rng.randrange(ctx.p) for _ in range(ctx.e)])


def random_qpoly(rng: random.Random, ctx: FqCtx, deg: int) -> QPoly:
    rows = [[rng.randrange(ctx.p) for _ in range(ctx.e)] for _ in range(deg + 1)]
    return QPoly.make(ctx, rows)


def random_ratfunc(rng: random.Random, ctx: FqCtx, deg: int = 2) -> RatFunc:
    num = random_qpoly(rng, ctx, rng.randrange(deg + 1))
    den = QPoly.zero(ctx)
    while den.is_zero():
        den = random_qpoly(rng, ctx, rng.randrange(deg + 1))
    return RatFunc(num, den)


def random_ktpoly(rng: random.Random, dom, tdeg: int = 3, cdeg: int = 2) -> KtPoly:
    return KtPoly(dom, [random_ratfunc(rng, dom.ctx, cdeg) for _ in range(tdeg + 1)])


def random_kt_matrix(rng: random.Random, dom, n: int, tdeg: int = 3,
                     cdeg: int = 1) -> Matrix:
    return Matrix([[random_ktpoly(rng, dom, rng.randrange(tdeg + 1), cdeg)
                    for _ in range(n)] for _ in range(n)])


def random_unimodular(rng: random.Random, dom, n: int, steps: int = 6) -> Matrix:
    m = Matrix.identity(n, KtPoly.const(dom, dom.one()), KtPoly.zero(dom))
    for _ in range(steps):
        i, j = rng.randrange(n), rng.randrange(n)
        if i == j:
            continue
        f = random_ktpoly(rng, dom, rng.randrange(3), 1)
        for col in range(n):
            m.rows[i][col] = m.rows[i][col] + f * m.rows[j][col]
    return m


def random_localnum(rng: random.Random, cfg: LocalFieldCfg, span: int = 12,
                    prec: int | None = None) -> LocalNum:
    val = rng.randrange(-span, span)
    L = rng.randrange(1, span)
    rows = [[rng.randrange(cfg.coeff.p) for _ in range(cfg.coeff.e)] for _ in range(L)]
    rows[0][0] = max(rows[0][0], 1)
    return cfg.from_digits(val, rows, prec if prec is not None else cfg.default_prec)


def random_tate(rng: random.Random, cfg: LocalFieldCfg, D: int = 10) -> TateSeries:
    return TateSeries(cfg, [random_localnum(rng, cfg, 6) for _ in range(D)])


def random_germ(rng: random.Random, cfg: LocalFieldCfg, pole: int = 2,
                order: int = 6) -> ThetaGerm:
    coeffs = [random_localnum(rng, cfg, 5) for _ in range(pole + order)]
    return ThetaGerm(cfg, -pole, coeffs, order)


# -- result helpers -----------------------------------------------------------------


def _row(name, passed, detail=""):
    return {"name": name, "passed": bool(passed), "detail": str(detail)}


def _all_zero(mats) -> bool:
    return all(x.is_zero() for m in mats for r in m.rows for x in r)


# -- algebraic suite ----------------------------------------------------------------


def suite_algebraic(seed: int = 12345):
    rng = random.Random(seed)
    ctx = FqCtx(2)
    ctx3 = FqCtx(3)
    dom = RatFuncField(ctx)
    rows = []

    ok = all(binom_mod_p(i, n, p) == math.comb(i, n) % p
             for p in (2, 3, 5) for i in range(65) for n in range(65))
    rows.append(_row("lucas_vs_factorial_oracle", ok))

    ok = True
    for _ in range(200):
        m, n = rng.randrange(5), rng.randrange(5)
        if m + n > 8:
            continue
        f = random_ktpoly(rng, dom, 8, 1)
        lhs = f.hyperderive(n).hyperderive(m)
        rhs = f.hyperderive(m + n).scale(dom.from_int(binom_mod_p(m + n, n, dom.p)))
        ok = ok and (lhs - rhs).is_zero()
    rows.append(_row("hyperderivative_composition", ok))

    ok = True
    for _ in range(30):
        i, n = rng.randrange(40), rng.randrange(40)
        split = rng.randrange(1, 40)
        for p in (2, 3):
            lhs = binom_mod_p(i + split, n, p)
            rhs = sum(binom_mod_p(i, j, p) * binom_mod_p(split, n - j, p)
                      for j in range(n + 1)) % p
            ok = ok and lhs == rhs
    rows.append(_row("vandermonde_mod_p", ok))

    ok = True
    worst = None
    for _ in range(100):
        a = random_kt_matrix(rng, dom, 2, 2, 1)
        b = random_kt_matrix(rng, dom, 2, 2, 1)
        n = rng.randrange(1, 4)
        lhs = prolong(a * b, n)
        rhs = prolong(a, n) * prolong(b, n)
        ok = ok and all((lhs[i, j] - rhs[i, j]).is_zero()
                        for i in range(lhs.nrows) for j in range(lhs.ncols))
    rows.append(_row("prolongation_multiplicative", ok))

    ok = True
    for _ in range(40):
        m = random_kt_matrix(rng, dom, 2, 2, 1)
        l = rng.randrange(1, 4)
        lhs = kt_det(prolong(m, l))
        rhs = kt_det(m) ** (l + 1)
        ok = ok and (lhs - rhs).is_zero()
        lhs2 = prolong(m.twist(1), 1)
        rhs2 = prolong(m, 1).twist(1)
        ok = ok and all((lhs2[i, j] - rhs2[i, j]).is_zero()
                        for i in range(lhs2.nrows) for j in range(lhs2.ncols))
    rows.append(_row("prolongation_det_power_and_twist", ok))

    ok = True
    for _ in range(100):
        a = SkewPoly([random_ratfunc(rng, ctx) for _ in range(rng.randrange(1, 4))])
        b = SkewPoly([random_ratfunc(rng, ctx) for _ in range(rng.randrange(1, 4))])
        c = SkewPoly([random_ratfunc(rng, ctx) for _ in range(rng.randrange(1, 4))])
        lhs = (a * b) * c
        rhs = a * (b * c)
        d = lhs - rhs
        ok = ok and all(x.is_zero() for x in d.coeffs)
    rows.append(_row("skew_associativity", ok))

    ok = True
    for _ in range(100):
        m = random_kt_matrix(rng, dom, 3, 3, 1)
        u, d, v = smith_normal_form(m)
        prod = u * m * v
        ok = ok and all((prod[i, j] - d[i, j]).is_zero() for i in range(3) for j in range(3))
        ok = ok and all(d[i, j].is_zero() for i in range(3) for j in range(3) if i != j)
        du, dv = kt_det(u), kt_det(v)
        ok = ok and du.degree() == 0 and dv.degree() == 0
        for i in range(2):
            if d[i, i].is_zero():
                ok = ok and d[i + 1, i + 1].is_zero()
            elif not d[i + 1, i + 1].is_zero():
                ok = ok and d[i + 1, i + 1].divmod(d[i, i])[1].is_zero()
    rows.append(_row("smith_normal_form_contracts", ok))

    ok = True
    for _ in range(20):
        m = random_unimodular(rng, dom, 3)
        minv = kt_inv_unimodular(m)
        prod = minv * m
        ident = Matrix.identity(3, KtPoly.const(dom, dom.one()), KtPoly.zero(dom))
        ok = ok and all((prod[i, j] - ident[i, j]).is_zero()
                        for i in range(3) for j in range(3))
    rows.append(_row("kt_inv_times_m_is_identity", ok))

    ok = True
    for _ in range(40):
        m = random_kt_matrix(rng, dom, 3, 2, 1)
        ok = ok and (kt_det(m) - det_cofactor(m, KtPoly.zero(dom))).is_zero()
    rows.append(_row("det_bareiss_vs_cofactor_oracle", ok))

    for name, builder in (
        ("carlitz", lambda: mdl.make_carlitz(ctx)),
        ("carlitz_tensor_2", lambda: mdl.make_carlitz_tensor(ctx, 2)),
        ("carlitz_tensor_3", lambda: mdl.make_carlitz_tensor(ctx, 3)),
    ):
        E, _ = builder()
        res = exp_functional_residuals(E, 12)
        rows.append(_row(f"exp_functional_equation_exact_{name}", _all_zero(res)))
    return rows


# -- analytic suite -----------------------------------------------------------------


def _ac4_cfg(prec: int = 150):
    ctx = FqCtx(2)
    return LocalFieldCfg(ctx, 1, {-2: 1}, prec)


def _ac4_lattice(cfg):
    return [cfg.one(), cfg.from_digits(-1, [[1]], PINF)]


def suite_analytic(seed: int = 12345, prec: int = 150, D: int = 40):
    rng = random.Random(seed)
    rows = []

    # omega residue vs the pi-tilde product, q = 2 and ramified q = 3
    for q in (2, 3):
        cfg = mdl.default_cfg_for_q(q, prec=prec)
        ts, germ, cert = mdl.omega_product(cfg, D)
        pt = mdl.pi_tilde(cfg)
        agree = (-residue(germ)).digits_of_agreement(pt)
        need = 120 if q == 2 else 100
        rows.append(_row(f"omega_residue_vs_pi_tilde_q{q}", agree >= need,
                         f"agreeing digits {agree} (need {need}); factors {cert}"))

    # tau(omega) = (t - theta) omega
    cfg = mdl.default_cfg_for_q(2, prec=prec)
    ts, germ, _ = mdl.omega_product(cfg, D)
    resid = ts.twist(1) - ts.mul_t_minus_theta()
    floor = resid.precision_floor()
    worst = resid.worst_valuation()
    rows.append(_row("omega_functional_equation", worst >= floor - 5,
                     f"worst residual valuation {worst}, floor {floor}"))

    # agf(pi) equals omega entry-wise
    E, M = mdl.make_carlitz(cfg.base)
    pt = mdl.pi_tilde(cfg)
    g = mtv.agf(E, cfg, [pt], D)[0]
    dser = g - ts
    rows.append(_row("agf_pi_matches_omega", dser.worst_valuation() >= dser.precision_floor() - 5,
                     f"worst {dser.worst_valuation()}, floor {dser.precision_floor()}"))

    # residue routes agree on random germs
    ok = True
    detail = []
    for _ in range(25):
        f = random_germ(rng, cfg, pole=rng.randrange(0, 3), order=6)
        for l in range(max(1, f.pole_order), 5):
            r1 = residue(f)
            r2 = residue_via_hyperderivative(f, l)
            if not (r1 - r2).is_zero():
                ok = False
                detail.append(f"l={l}")
    rows.append(_row("residue_vs_hyperderivative_routes", ok, ";".join(detail)))

    # ultrametric + twist homomorphism + sigma/tau round trip
    ok_v = ok_t = ok_s = True
    for _ in range(1000):
        a = random_localnum(rng, cfg)
        b = random_localnum(rng, cfg)
        ab = a * b
        if ab.valuation_lb() != a.valuation_lb() + b.valuation_lb():
            ok_v = False
        if (a + b).valuation_lb() < min(a.valuation_lb(), b.valuation_lb()):
            ok_v = False
        if not ((a + b).twist(1) - (a.twist(1) + b.twist(1))).is_zero():
            ok_t = False
        if not ((a * b).twist(1) - a.twist(1) * b.twist(1)).is_zero():
            ok_t = False
        back = a.twist(1).untwist()
        if isinstance(back, RefinementRequired) or not (back - a).is_zero():
            ok_s = False
    rows.append(_row("ultrametric_valuations", ok_v))
    rows.append(_row("twist_ring_homomorphism", ok_t))
    rows.append(_row("sigma_tau_roundtrip", ok_s))

    # precision soundness: recompute pi-tilde and omega at N + 50
    cfg_hi = mdl.default_cfg_for_q(2, prec=prec + 50)
    pt_hi = mdl.pi_tilde(cfg_hi)
    pt_lo = mdl.pi_tilde(cfg)
    same = all((pt_lo.coeff_at(e) == cfg.coeff.elem(pt_hi.coeff_at(e).coeffs))
               for e in range(pt_lo.val, min(int(pt_lo.prec), prec)))
    rows.append(_row("precision_soundness_prefix", same))
    return rows


# -- roundtrip suite ----------------------------------------------------------------


def suite_roundtrip(seed: int = 12345, prec: int = 150, D: int = 40,
                    b_trunc: int = 3):
    rows = []
    cfg = mdl.default_cfg_for_q(2, prec=prec)
    E, M = mdl.make_carlitz(cfg.base)
    pt = mdl.pi_tilde(cfg)
    th = cfg.theta

    lams = [pt, th * pt, (th * th + cfg.one()) * pt]
    ok = True
    detail = []
    for i, lam in enumerate(lams):
        g = mtv.agf(E, cfg, [lam], D)
        back, rep = mtv.inverse_delta(E, cfg, g)
        agree = (back[0] - lam).valuation_lb()
        if not (back[0] - lam).is_zero():
            ok = False
        detail.append(f"lam{i}:v>={agree}")
    rows.append(_row("carlitz_inverse_delta_roundtrip", ok, " ".join(detail)))

    g_pi = mtv.agf(E, cfg, [pt], D)
    mem = mtv.check_H_membership(E, cfg, g_pi)
    rows.append(_row("carlitz_H_membership", mem["member"], str(mem)))

    tor = check_torsion_system(E, cfg, g_pi, depth=5)
    floor = min(c.prec for c in g_pi[0].coeffs[:7])
    rows.append(_row("carlitz_torsion_system_depth5",
                     tor["worst_residual_valuation"] == "inf"
                     or tor["worst_residual_valuation"] >= floor - 5, str(tor)))

    g80 = mtv.agf(E, cfg, [pt], 80)
    tail, cert = tail_limit_eval(g80, E.dphi_local(cfg))
    res = residue(mtv.agf_germ(E, cfg, [pt])[0])
    agree = tail[0].digits_of_agreement(res)
    rows.append(_row("tail_limit_vs_germ_residue", agree >= 50,
                     f"agreeing digits {agree}, certificate {cert}"))

    # Drinfeld lattice round trip
    cfg4 = _ac4_cfg(prec)
    lat = _ac4_lattice(cfg4)
    E4, M4, rep4 = mdl.make_drinfeld_from_lattice(cfg4, lat, b_trunc)
    T4 = mtv.build_trivialization_from_lattice(M4, cfg4, lat, D)
    prep = mtv.extract_periods(M4, T4, cfg4)
    p = [prep.periods[0, 0], prep.periods[0, 1]]
    w, wrep = mtv.lattice_basis_change(cfg4, p, lat)
    res_ok = (wrep["residual_valuation"] == "inf"
              or (isinstance(wrep["residual_valuation"], int)
                  and wrep["residual_valuation"] >= 30))
    rows.append(_row("drinfeld_lattice_roundtrip", wrep["unimodular"] and res_ok,
                     f"build {rep4}; basis change {wrep}"))

    samples = [lat[0], lat[1], cfg4.theta * lat[0] + lat[1]]
    ok = True
    for lam in samples:
        g = mtv.agf(E4, cfg4, [lam], D)
        back, _ = mtv.inverse_delta(E4, cfg4, g)
        if not (back[0] - lam).is_zero():
            ok = False
    rows.append(_row("drinfeld_inverse_delta_roundtrip", ok))

    # ABP predicate on the three model classes
    cd = mtv.coordinate_data(M)
    T = mdl.carlitz_tensor_trivialization(M, cfg, D)
    rows.append(_row("abp_carlitz_l0",
                     mtv.check_abp_conditions(M, T, cd.B, 0, cfg)["passed"]))
    E2, M2 = mdl.make_carlitz_tensor(cfg.base, 2)
    T2 = mdl.carlitz_tensor_trivialization(M2, cfg, D)
    rows.append(_row("abp_tensor2_l1",
                     mtv.check_abp_conditions(M2, T2, mtv.coordinate_data(M2).B, 1, cfg)["passed"]))
    rows.append(_row("abp_drinfeld_l0",
                     mtv.check_abp_conditions(M4, T4, mtv.coordinate_data(M4).B, 0, cfg4)["passed"]))
    return rows


SUITES = {
    "algebraic": suite_algebraic,
    "analytic": suite_analytic,
    "roundtrip": suite_roundtrip,
}


def run_suites(which: str = "all", seed: int = 12345):
    names = list(SUITES) if which == "all" else [which]
    out = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}")
        for row in SUITES[name](seed):
            row["suite"] = name
            out.append(row)
    return out
