import random

import pytest

from tperiods.ffcore import FqCtx
from tperiods.localfield import PINF
from tperiods.ratfunc import RatFunc
from tperiods.ktalgebra import Matrix, RatFuncField, LocalScalars
from tperiods.tate import TateSeries
from tperiods.tmodule import (TModuleDef, TModuleError, exp_series,
                              exp_functional_residuals, log_exp_compose_residuals,
                              eval_exp, eval_log, isometry_radius,
                              check_torsion_system)
from tperiods.models import make_carlitz_tensor, pi_tilde
from tperiods.motive import agf
from tperiods.suites import random_localnum, random_ratfunc


def _zero_mats(ms):
    return all(x.is_zero() for m in ms for r in m.rows for x in r)


@pytest.fixture(scope="module")
def carlitz():
    K = RatFuncField(FqCtx(2))
    return TModuleDef(K, [Matrix([[K.theta()]]), Matrix([[K.one()]])], r=1,
                      name="carlitz")


def test_nilpotency_enforced():
    K = RatFuncField(FqCtx(2))
    bad = Matrix([[K.theta(), K.zero()], [K.one(), K.theta() + K.one()]])
    with pytest.raises(TModuleError):
        TModuleDef(K, [bad, Matrix.identity(2, K.one(), K.zero())], r=1)


def test_carlitz_q1_first_recursion_step(carlitz):
    # [DERIVED] one step of the Sylvester recursion: Q_1 = 1/(theta^q - theta)
    th = carlitz.dom.theta()
    S = exp_series(carlitz, 4)
    assert S.Q[0][0, 0] == carlitz.dom.one()
    assert S.Q[1][0, 0] == (th.twist(1) - th).inv()
    assert S.P[1][0, 0] == -((th.twist(1) - th).inv())


def test_drinfeld_scalar_recursion_oracle():
    # [DERIVED] d = 1: Q_n (theta^(q^n) - theta) = sum a_i Q_{n-i}^(q^i)
    rng = random.Random(3)
    ctx = FqCtx(3)
    K = RatFuncField(ctx)
    coeffs = [random_ratfunc(rng, ctx, 1), RatFunc.const(ctx, 1)]
    E = TModuleDef(K, [Matrix([[K.theta()]])] + [Matrix([[c]]) for c in coeffs], r=2)
    S = exp_series(E, 5)
    th = K.theta()
    for n in range(1, 6):
        lhs = S.Q[n][0, 0] * (th.twist(n) - th)
        rhs = K.zero()
        for i in range(1, min(n, 2) + 1):
            rhs = rhs + coeffs[i - 1] * S.Q[n - i][0, 0].twist(i)
        assert (lhs - rhs).is_zero()


def test_exp_functional_equation_exact(carlitz):
    assert _zero_mats(exp_functional_residuals(carlitz, 8))


def test_log_compose_identity(carlitz):
    assert _zero_mats(log_exp_compose_residuals(carlitz, 8))
    E2, _ = make_carlitz_tensor(FqCtx(2), 2)
    assert _zero_mats(log_exp_compose_residuals(E2, 6))


def test_eval_exp_zero(carlitz, cfg_q2):
    v, p = eval_exp(carlitz, cfg_q2, [cfg_q2.zero(PINF)])
    assert v[0].is_zero()


def test_eval_exp_pi_vanishes(carlitz, cfg_q2):
    # [DERIVED] pi-tilde from the product formula is in the kernel
    pt = pi_tilde(cfg_q2)
    v, prec = eval_exp(carlitz, cfg_q2, [pt])
    assert v[0].is_zero()
    assert v[0].prec >= 100


def test_eval_log_roundtrip_small(carlitz, cfg_q2):
    rng = random.Random(5)
    for _ in range(20):
        x = [random_localnum(rng, cfg_q2, span=6)]
        if x[0].is_zero() or x[0].val < 3:
            continue  # stay well inside the radius
        y, _ = eval_exp(carlitz, cfg_q2, x)
        back, _ = eval_log(carlitz, cfg_q2, y)
        assert (back[0] - x[0]).is_zero()


def test_eval_exp_additive(carlitz, cfg_q2):
    rng = random.Random(7)
    for _ in range(20):
        a = [random_localnum(rng, cfg_q2, span=5)]
        b = [random_localnum(rng, cfg_q2, span=5)]
        va, _ = eval_exp(carlitz, cfg_q2, a)
        vb, _ = eval_exp(carlitz, cfg_q2, b)
        vs, _ = eval_exp(carlitz, cfg_q2, [a[0] + b[0]])
        assert (vs[0] - (va[0] + vb[0])).is_zero()


def test_exp_isometry_inside_radius(carlitz, cfg_q2):
    rng = random.Random(9)
    eps, _ = isometry_radius(carlitz, cfg_q2, 8)
    for _ in range(50):
        x = [random_localnum(rng, cfg_q2, span=8)]
        if x[0].is_zero() or -x[0].val >= eps:
            continue
        y, _ = eval_exp(carlitz, cfg_q2, x)
        assert y[0].valuation_lb() == x[0].valuation_lb()


def test_isometry_radius_carlitz_value(carlitz, cfg_q2):
    # [DERIVED] ||Q_1|| = q^-2 so the j=1 candidate is q^(2/(q-1)) = q^2
    eps, boundary = isometry_radius(carlitz, cfg_q2, 8)
    assert eps == 2
    assert not boundary


def test_isometry_radius_positive_tensor(cfg_q2):
    E, _ = make_carlitz_tensor(FqCtx(2), 2)
    eps, _ = isometry_radius(E, cfg_q2, 8)
    assert eps > 0


def test_eval_log_outside_radius_rejected(carlitz, cfg_q2):
    big = [cfg_q2.from_digits(-8, [[1]], PINF)]
    with pytest.raises(TModuleError):
        eval_log(carlitz, cfg_q2, big)


def test_torsion_system_report(carlitz, cfg_q2):
    pt = pi_tilde(cfg_q2)
    h = agf(carlitz, cfg_q2, [pt], D=12)
    rep = check_torsion_system(carlitz, cfg_q2, h, depth=5)
    floor = min(c.prec for c in h[0].coeffs[:7])
    assert rep["worst_residual_valuation"] == "inf" \
        or rep["worst_residual_valuation"] >= floor - 5
    # zero series is trivially compatible
    zero = [TateSeries.zero(cfg_q2, 12)]
    rep0 = check_torsion_system(carlitz, cfg_q2, zero, depth=5)
    assert rep0["worst_residual_valuation"] == "inf"


def test_torsion_system_flags_perturbation(carlitz, cfg_q2):
    pt = pi_tilde(cfg_q2)
    h = agf(carlitz, cfg_q2, [pt], D=12)
    coeffs = list(h[0].coeffs)
    coeffs[2] = coeffs[2] + cfg_q2.one()
    bad = [TateSeries(cfg_q2, coeffs)]
    rep = check_torsion_system(carlitz, cfg_q2, bad, depth=5)
    assert rep["worst_index"] in (2, 3)  # e_2 participates in two relations
    assert rep["worst_residual_valuation"] != "inf"
    assert rep["worst_residual_valuation"] < 10


def test_numeric_domain_module(cfg_ram2):
    dom = LocalScalars(cfg_ram2)
    E = TModuleDef(dom, [Matrix([[cfg_ram2.theta]]), Matrix([[cfg_ram2.one()]])], r=1)
    res = exp_functional_residuals(E, 6)
    assert _zero_mats(res)
