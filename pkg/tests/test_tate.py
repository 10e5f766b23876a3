import random

import pytest

from tperiods.ffcore import FqCtx, binom_mod_p
from tperiods.localfield import LocalFieldCfg, PINF
from tperiods.ktalgebra import Matrix, KtPoly, RatFuncField
from tperiods.tate import (TateSeries, ThetaGerm, TateError, ts_arith,
                           ts_twist_tau, hyperderive, prolong, germ_arith,
                           residue, residue_via_hyperderivative,
                           germ_from_ktpoly, tate_from_ktpoly, tail_limit_eval)
from tperiods.suites import random_tate, random_germ, random_kt_matrix


@pytest.fixture(scope="module")
def cfg():
    return LocalFieldCfg(FqCtx(2), 1, {-1: 1}, 60)


def _ts_equal(a, b):
    return (a - b).is_zero()


def test_mul_by_one_plus_theta_t(cfg):
    th = cfg.theta
    a = TateSeries.from_coeffs(cfg, [cfg.one(), th], 10)
    one = TateSeries.one(cfg, 10)
    assert _ts_equal(ts_arith(a, one, "mul"), a)


def test_geometric_series_inverse(cfg):
    # (1 - t/theta) * sum theta^(-i) t^i = 1 (to the t-truncation)
    D = 12
    thinv = cfg.theta_inv()
    geo = TateSeries.from_coeffs(cfg, [thinv ** i for i in range(D)], D)
    lin = TateSeries.from_coeffs(cfg, [cfg.one(), -thinv], D)
    prod = lin * geo
    assert _ts_equal(prod, TateSeries.one(cfg, D))
    assert _ts_equal(geo, lin.inv())


def test_mul_commutes_random(cfg):
    rng = random.Random(3)
    for _ in range(25):
        a, b = random_tate(rng, cfg), random_tate(rng, cfg)
        assert _ts_equal(a * b, b * a)


def test_hyperderive_examples(cfg):
    D = 8
    t3 = TateSeries.zero(cfg, D).coeffs[:]  # build t^3
    t3[3] = cfg.one()
    t3 = TateSeries(cfg, t3)
    d1 = hyperderive(t3, 1)
    assert d1.coeffs[2].same_digits(cfg.one()) and d1.t_prec == D - 1
    t5 = TateSeries.zero(cfg, D).coeffs[:]
    t5[5] = cfg.one()
    assert hyperderive(TateSeries(cfg, t5), 2).is_zero()  # C(5,2) = 0 mod 2
    tn = TateSeries.zero(cfg, D).coeffs[:]
    tn[6] = cfg.one()
    d6 = hyperderive(TateSeries(cfg, tn), 6)
    assert d6.coeffs[0].same_digits(cfg.one())


def test_hyperderivative_iterativity(cfg):
    # d^m o d^n = C(m+n, n) d^(m+n)
    rng = random.Random(5)
    for _ in range(60):
        a = random_tate(rng, cfg, D=12)
        m, n = rng.randrange(4), rng.randrange(4)
        lhs = a.hyperderive(n).hyperderive(m)
        rhs = a.hyperderive(m + n).scale(cfg.from_int(binom_mod_p(m + n, n, 2)))
        assert (lhs - rhs.truncate(lhs.t_prec)).is_zero()


def test_twist_commutes_with_hyperderivative(cfg):
    rng = random.Random(7)
    for _ in range(40):
        a = random_tate(rng, cfg, D=10)
        n = rng.randrange(3)
        assert (ts_twist_tau(a.hyperderive(n)) - ts_twist_tau(a).hyperderive(n)).is_zero()


def test_twist_is_ring_hom_on_series(cfg):
    rng = random.Random(9)
    for _ in range(30):
        a, b = random_tate(rng, cfg, 8), random_tate(rng, cfg, 8)
        assert ((a * b).twist(1) - a.twist(1) * b.twist(1)).is_zero()


def test_prolong_t_matrix():
    K = RatFuncField(FqCtx(2))
    t = KtPoly.t(K)
    m = Matrix([[t]])
    rho = prolong(m, 1)
    assert rho[0, 0] == t and rho[1, 1] == t
    assert rho[0, 1] == KtPoly.const(K, K.one())  # d(t) = 1
    assert rho[1, 0].is_zero()
    ident = Matrix.identity(2, KtPoly.const(K, K.one()), KtPoly.zero(K))
    rho_i = prolong(ident, 2)
    for i in range(6):
        for j in range(6):
            expect = K.one() if i == j else K.zero()
            assert K.is_zero(rho_i[i, j].coeff(0) - expect) and rho_i[i, j].degree() <= 0


def test_prolong_multiplicative_random():
    K = RatFuncField(FqCtx(2))
    rng = random.Random(11)
    for _ in range(100):
        a = random_kt_matrix(rng, K, 2, 2, 1)
        b = random_kt_matrix(rng, K, 2, 2, 1)
        n = rng.randrange(1, 4)
        lhs = prolong(a * b, n)
        rhs = prolong(a, n) * prolong(b, n)
        assert all((lhs[i, j] - rhs[i, j]).is_zero()
                   for i in range(lhs.nrows) for j in range(lhs.ncols))


def test_germ_invert_examples(cfg):
    u = ThetaGerm.u_power(cfg, 1)  # (t - theta)
    inv = germ_arith(u, u, "invert")
    assert inv.pole_order == 1 and (inv.coeff(-1) - cfg.one()).is_zero()
    rng = random.Random(13)
    for _ in range(25):
        a = random_germ(rng, cfg, pole=rng.randrange(3), order=6)
        prod = a * a.inv()
        assert (prod.coeff(0) - cfg.one()).is_zero()
        for e in range(prod.lo, min(4, prod.uprec if prod.uprec != PINF else 4)):
            if e != 0:
                assert prod.coeff(e).is_zero()


def test_germ_mul_adds_pole_orders(cfg):
    a = ThetaGerm.u_power(cfg, -2)
    b = ThetaGerm.u_power(cfg, -3)
    assert (a * b).pole_order == 5


def test_residue_examples(cfg):
    one_over = ThetaGerm.u_power(cfg, -1)
    assert (residue(one_over) - cfg.one()).is_zero()
    regular = ThetaGerm.const(cfg, cfg.theta)
    assert residue(regular).is_exact_zero()
    assert residue(ThetaGerm.u_power(cfg, -2)).is_exact_zero()


def test_residue_via_hyperderivative_examples(cfg):
    f = ThetaGerm.u_power(cfg, -1)
    assert (residue_via_hyperderivative(f, 1) - cfg.one()).is_zero()
    # c (t-theta)^(-k) + regular, any l >= k
    c = cfg.theta
    f = ThetaGerm(cfg, -2, [c, cfg.one(), cfg.theta, cfg.one()], 4)
    for l in (2, 3, 4):
        assert (residue_via_hyperderivative(f, l) - residue(f)).is_zero()


def test_residue_routes_agree_random(cfg):
    # [DERIVED] the two routes are independent implementations
    rng = random.Random(17)
    for _ in range(40):
        f = random_germ(rng, cfg, pole=rng.randrange(3), order=6)
        for l in range(max(1, f.pole_order), 5):
            assert (residue(f) - residue_via_hyperderivative(f, l)).is_zero()


def test_germ_from_ktpoly_expansion(cfg):
    K = RatFuncField(cfg.base)
    tmth = KtPoly.t_minus_theta(K)
    g = germ_from_ktpoly(tmth ** 3, cfg)
    assert g.lo == 3 and (g.coeff(3) - cfg.one()).is_zero()
    t = KtPoly.t(K)
    g2 = germ_from_ktpoly(t * t, cfg)  # t^2 = theta^2 + 2 theta u + u^2
    assert (g2.coeff(0) - cfg.theta * cfg.theta).is_zero()
    assert g2.coeff(1).is_zero()  # 2 theta = 0 in char 2
    assert (g2.coeff(2) - cfg.one()).is_zero()


def test_eval_at_theta_rejects_poles(cfg):
    f = ThetaGerm(cfg, -1, [cfg.one(), cfg.one()], 3)
    with pytest.raises(TateError):
        f.eval_at_theta()


def test_tail_limit_zero_and_linearity(cfg):
    D = 12
    dphi = Matrix([[cfg.theta]])
    zero = [TateSeries.zero(cfg, D)]
    v, cert = tail_limit_eval(zero, dphi)
    assert v[0].is_zero()
    # F_q-linearity on a decaying compatible-style series
    thinv = cfg.theta_inv()
    h = TateSeries.from_coeffs(cfg, [thinv ** (i + 1) for i in range(D)], D)
    v1, _ = tail_limit_eval([h], dphi)
    v2, _ = tail_limit_eval([h.scale(cfg.one())], dphi)
    assert (v1[0] - v2[0]).is_zero()


def test_tail_limit_divergence_error(cfg):
    D = 12
    dphi = Matrix([[cfg.theta]])
    growing = TateSeries.from_coeffs(cfg, [cfg.theta ** (i + 1) for i in range(D)], D)
    with pytest.raises(TateError):
        tail_limit_eval([growing], dphi)


def test_gauge_report(cfg):
    D = 10
    decaying = TateSeries.from_coeffs(cfg, [cfg.theta_inv() ** i for i in range(D)], D)
    assert not decaying.gauge()["tail_growth"]
    growing = TateSeries.from_coeffs(cfg, [cfg.theta ** i for i in range(D)], D)
    assert growing.gauge()["tail_growth"]


def test_tate_from_ktpoly(cfg):
    K = RatFuncField(cfg.base)
    p = KtPoly.t_minus_theta(K)
    ts = tate_from_ktpoly(p, cfg, 8)
    assert (ts.coeffs[0] + cfg.theta).is_zero()
    assert (ts.coeffs[1] - cfg.one()).is_zero()
