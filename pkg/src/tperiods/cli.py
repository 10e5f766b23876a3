"""Command-line front end.

Commands: period, verify, agf, omega, snf, model-info.  Configuration comes
from a TOML or JSON file (--config) plus overriding flags; all output is
either human-readable text or JSON (--json), and identical config + seed
yields byte-identical JSON.  No environment variables are required.

Exit codes: 0 = certified success, 1 = numeric failure (a residual exceeded
its precision floor or a pipeline step refused), 2 = usage/config error.

Config file schema (TOML shown; the same keys work in JSON):

    [field]
    q = 2              # prime power; alternatively p = 2, e = 1
    m = 1              # residue extension degree
    z_prec = 150
    # theta maps z-exponents to F_p coordinate vectors of F_{q^m} elements;
    # omitted: theta = -z^-(q-1), which always carries lambda_theta.
    [field.theta]
    "-1" = [1]
    # modulus = [...]  # optional base-field modulus (F_p coefficients)

    [model]
    kind = "carlitz"   # carlitz | carlitz-tensor | drinfeld-coeffs | drinfeld-lattice
    n = 2              # tensor power (carlitz-tensor)
    b_trunc = 3        # lattice truncation depth (drinfeld-lattice)
    # coeffs  = [...]  # drinfeld-coeffs: RatFunc JSON per coefficient
    # lattice = [{val = -1, prec = "inf", coeffs = [[1]]}, ...]

    [precision]
    t_prec = 40
    exp_order = 12
    germ_order = 0     # 0 = automatic (2 * dimension)

    [run]
    seed = 12345
"""

from __future__ import annotations

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .ffcore import FqCtx, FFError
from .localfield import LocalFieldCfg, LocalFieldError
from .ratfunc import ratfunc_from_json, RatFuncError
from .ktalgebra import Matrix, KtPoly, RatFuncField, smith_normal_form, AlgebraError
from .tate import TateError
from .tmodule import TModuleError, isometry_radius
from .motive import MotiveError, coordinate_data, agf as agf_fn
from .models import (ModelSpec, ModelError, build_model, default_cfg_for_q,
                     pi_tilde, omega_product)
from .suites import run_suites


class ConfigError(Exception):
    pass


DEFAULTS = {"t_prec": 40, "z_prec": 150, "exp_order": 12, "germ_order": 0,
            "seed": 12345}


def _expect(table, key, kind, where):
    v = table.get(key)
    if v is not None and not isinstance(v, kind):
        raise ConfigError(f"{where}.{key} must be {kind.__name__}, got {type(v).__name__}")
    return v


def load_config(path: str | None, overrides: argparse.Namespace):
    """Validated RunConfig-style dict from file + flag overrides."""
    raw = {}
    if path:
        try:
            if path.endswith(".json"):
                with open(path) as fh:
                    raw = json.load(fh)
            else:
                with open(path, "rb") as fh:
                    raw = tomllib.load(fh)
        except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    field = raw.get("field", {})
    model = raw.get("model", {})
    precision = raw.get("precision", {})
    run = raw.get("run", {})
    for name, tbl in (("field", field), ("model", model),
                      ("precision", precision), ("run", run)):
        if not isinstance(tbl, dict):
            raise ConfigError(f"[{name}] must be a table")

    z_prec = overrides.z_prec or _expect(field, "z_prec", int, "field") \
        or _expect(field, "default_prec", int, "field") or DEFAULTS["z_prec"]
    m = overrides.ext_m or _expect(field, "m", int, "field") or 1
    q = overrides.q or _expect(field, "q", int, "field")
    theta_raw = field.get("theta", field.get("theta_expansion"))
    try:
        if q is not None and theta_raw is None:
            cfg = default_cfg_for_q(q, m=m, prec=z_prec)
        else:
            p = _expect(field, "p", int, "field")
            e = _expect(field, "e", int, "field") or 1
            if p is None:
                if q is None:
                    raise ConfigError("field needs q (or p and e)")
                from .models import _factor_prime_power
                p, e = _factor_prime_power(q)
            ctx = FqCtx(p, e, field.get("modulus"))
            if theta_raw is None:
                cfg = default_cfg_for_q(p ** e, m=m, prec=z_prec)
            else:
                if not isinstance(theta_raw, dict):
                    raise ConfigError("field.theta must map exponents to coefficients")
                theta = {int(k): v for k, v in theta_raw.items()}
                cfg = LocalFieldCfg(ctx, m, theta, z_prec)
    except (FFError, LocalFieldError, ModelError, ValueError) as exc:
        raise ConfigError(f"invalid field configuration: {exc}")

    kind = overrides.model or _expect(model, "kind", str, "model") or "carlitz"
    spec = ModelSpec(
        kind=kind,
        n=overrides.n or _expect(model, "n", int, "model") or 1,
        coeffs=model.get("coeffs", []),
        lattice=model.get("lattice", []),
        b_trunc=overrides.b_trunc or _expect(model, "b_trunc", int, "model") or 3,
    )
    try:
        spec.validate()
    except ModelError as exc:
        raise ConfigError(str(exc))

    rc = {
        "cfg": cfg,
        "model": spec,
        "t_prec": overrides.t_prec or _expect(precision, "t_prec", int, "precision")
        or DEFAULTS["t_prec"],
        "exp_order": overrides.exp_order
        or _expect(precision, "exp_order", int, "precision") or DEFAULTS["exp_order"],
        "germ_order": _expect(precision, "germ_order", int, "precision") or 0,
        "seed": overrides.seed if overrides.seed is not None
        else (_expect(run, "seed", int, "run") or DEFAULTS["seed"]),
        "json": overrides.json,
    }
    for key in ("t_prec", "exp_order"):
        if rc[key] < 1:
            raise ConfigError(f"precision.{key} must be positive")
    if rc["germ_order"] < 0:
        raise ConfigError("precision.germ_order must be >= 0")
    return rc


def _emit(payload, as_json: bool, text_render=None):
    if as_json:
        print(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    else:
        print(text_render() if text_render is not None else
              json.dumps(payload, sort_keys=True, indent=2))


def cmd_period(rc) -> int:
    spec = rc["model"]
    if spec.kind == "drinfeld-coeffs":
        raise ConfigError(
            "drinfeld-coeffs has no trivialization route; supply the lattice "
            "(kind = drinfeld-lattice) to extract periods")
    E, M, T, rep = build_model(spec, rc["cfg"], rc["t_prec"], rc["exp_order"])
    from .motive import extract_periods
    report = extract_periods(M, T, rc["cfg"], rc["exp_order"])
    payload = {"model": E.name, "construction": rep, "report": report.to_json()}
    _emit(payload, rc["json"], report.render_text)
    worst_ok = True
    res = report.residuals
    floor = report.precision["period_floor"]
    for key in ("residue_vs_hyperderivative_valuation", "exp_vanishing_valuation"):
        v = res[key]
        if v != "inf" and isinstance(floor, int) and v < floor - 5:
            worst_ok = False
    return 0 if worst_ok else 1


def cmd_verify(rc, suite: str) -> int:
    rows = run_suites(suite, rc["seed"])
    payload = {"seed": rc["seed"], "suite": suite, "results": rows}

    def render():
        lines = []
        for r in rows:
            mark = "PASS" if r["passed"] else "FAIL"
            lines.append(f"[{mark}] {r['suite']}/{r['name']}"
                         + (f"  {r['detail']}" if r["detail"] else ""))
        lines.append(f"{sum(r['passed'] for r in rows)}/{len(rows)} checks passed")
        return "\n".join(lines)

    _emit(payload, rc["json"], render)
    return 0 if all(r["passed"] for r in rows) else 1


def cmd_agf(rc, lam_spec: str) -> int:
    E, M, T, _ = build_model(rc["model"], rc["cfg"], rc["t_prec"], rc["exp_order"])
    cfg = rc["cfg"]
    if lam_spec == "0":
        # the zero vector is trivially in the lattice; its image is the zero series
        from .tate import TateSeries
        series = [TateSeries.zero(cfg, rc["t_prec"]) for _ in range(E.d)]
    elif lam_spec == "pi":
        lam = _pi_column(E, M, T, cfg, rc)
        series = agf_fn(E, cfg, lam, rc["t_prec"], rc["exp_order"])
    else:
        raise ConfigError(f"unsupported --lam value {lam_spec!r} (use '0' or 'pi')")
    payload = {"model": E.name, "lambda": lam_spec,
               "series": [s.to_json() for s in series],
               "decay": [s.gauge() for s in series]}
    _emit(payload, rc["json"])
    return 0


def _pi_column(E, M, T, cfg, rc):
    """The period column used as the default AGF argument: the extracted
    first lattice basis vector."""
    from .motive import extract_periods
    return extract_periods(M, T, cfg, rc["exp_order"]).periods.col(0)


def cmd_omega(rc, terms: int) -> int:
    cfg = rc["cfg"]
    series, germ, cert = omega_product(cfg, max(terms, 1))
    payload = {
        "certificate": cert,
        "t_coefficients": [c.to_json_dict() for c in series.coeffs[:terms]],
        "germ": germ.to_json(),
        "pi_tilde": pi_tilde(cfg).to_json_dict(),
    }
    _emit(payload, rc["json"])
    return 0


def cmd_snf(rc, matrix_path: str) -> int:
    cfg = rc["cfg"]
    dom = RatFuncField(cfg.base)
    try:
        with open(matrix_path) as fh:
            rows = json.load(fh)
        mat = Matrix([[KtPoly(dom, [ratfunc_from_json(cfg.base, c) for c in entry])
                       for entry in row] for row in rows])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read matrix {matrix_path}: {exc}")
    u, d, v = smith_normal_form(mat)
    payload = {
        "U": [[p.to_json() for p in row] for row in u.rows],
        "D": [[p.to_json() for p in row] for row in d.rows],
        "V": [[p.to_json() for p in row] for row in v.rows],
    }
    _emit(payload, rc["json"])
    return 0


def cmd_model_info(rc) -> int:
    E, M, T, rep = build_model(rc["model"], rc["cfg"], rc["t_prec"], rc["exp_order"])
    eps, flag = isometry_radius(E, rc["cfg"], rc["exp_order"])
    info = {
        "name": E.name,
        "dimension": E.d,
        "rank": E.r,
        "tau_degree": E.s,
        "det_theta_power": M.det_power,
        "isometry_radius_log_q": str(eps),
        "radius_boundary_flag": flag,
        "construction": rep,
    }
    try:
        cd = coordinate_data(M)
        info["elementary_divisor_exponents"] = cd.alphas
        info["coordinate_rows"] = [{"row": i, "gamma": g} for i, g in cd.rows]
    except MotiveError as exc:
        info["coordinate_data_error"] = str(exc)
    if T is not None:
        info["trivialization"] = {
            "provenance": T.provenance,
            "tau_residual_valuation": T.tau_residual_valuation,
            "tau_residual_floor": T.tau_residual_floor,
        }
    _emit(info, rc["json"])
    return 0


_GLOBAL_DESTS = ("config", "q", "ext_m", "t_prec", "z_prec", "exp_order", "seed",
                 "json", "model", "n", "b_trunc")


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps subcommand parsing from overwriting flags given before
    # the subcommand; main() fills the gaps afterwards
    sup = argparse.SUPPRESS
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", default=sup, help="TOML or JSON configuration file")
    g.add_argument("--q", type=int, default=sup, help="field size (prime power)")
    g.add_argument("--ext-m", type=int, dest="ext_m", default=sup,
                   help="residue extension degree")
    g.add_argument("--t-prec", type=int, dest="t_prec", default=sup,
                   help="t-adic truncation")
    g.add_argument("--z-prec", type=int, dest="z_prec", default=sup,
                   help="z-adic precision")
    g.add_argument("--exp-order", type=int, dest="exp_order", default=sup,
                   help="exponential series order J")
    g.add_argument("--seed", type=int, default=sup, help="seed for randomized suites")
    g.add_argument("--json", action="store_true", default=sup,
                   help="machine-readable output")
    g.add_argument("--model", default=sup, help="model kind override")
    g.add_argument("--n", type=int, default=sup, help="tensor power")
    g.add_argument("--b-trunc", type=int, dest="b_trunc", default=sup,
                   help="lattice truncation")
    return g


def make_parser() -> argparse.ArgumentParser:
    shared = _global_flags()
    ap = argparse.ArgumentParser(
        prog="tperiods",
        parents=[shared],
        description="Period lattices of t-modules: Anderson generating functions, "
                    "residues at t = theta, and hyperderivative prolongations.")
    sub = ap.add_subparsers(dest="command")
    sub.add_parser("period", parents=[shared],
                   help="extract the period lattice basis")
    vp = sub.add_parser("verify", parents=[shared], help="run verification suites")
    vp.add_argument("--suite", default="all",
                    choices=["algebraic", "analytic", "roundtrip", "all"])
    gp = sub.add_parser("agf", parents=[shared],
                        help="dump an Anderson generating function")
    gp.add_argument("--lam", default="pi", help="'0' or 'pi' (default)")
    op = sub.add_parser("omega", parents=[shared],
                        help="dump the omega product expansion")
    op.add_argument("--terms", type=int, default=20)
    sp = sub.add_parser("snf", parents=[shared],
                        help="Smith normal form of a K[t] matrix")
    sp.add_argument("matrix", help="JSON file with the matrix")
    sub.add_parser("model-info", parents=[shared], help="print model structure data")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    for dest in _GLOBAL_DESTS:
        if not hasattr(args, dest):
            setattr(args, dest, False if dest == "json" else None)
    if not args.command:
        ap.print_help()
        return 2
    try:
        rc = load_config(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "period":
            return cmd_period(rc)
        if args.command == "verify":
            return cmd_verify(rc, args.suite)
        if args.command == "agf":
            return cmd_agf(rc, args.lam)
        if args.command == "omega":
            return cmd_omega(rc, args.terms)
        if args.command == "snf":
            return cmd_snf(rc, args.matrix)
        if args.command == "model-info":
            return cmd_model_info(rc)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MotiveError, TModuleError, ModelError, TateError, LocalFieldError,
            RatFuncError, AlgebraError, FFError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
