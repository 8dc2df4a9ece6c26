"""Command-line driver.

Usage::

    kpgive VERB --config run.json [--out report.json] [--seed N]
                [--override-cutoffs E,W,Z,T,D] [--allow-large-n] [--stabilize]

Exit status is 0 when every asserted residual is exactly zero within trust,
1 on a verification failure and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

from .checks import (bilinear_suite, clifford_suite, gamma_suite, oscillator_suite, q_suite,
                     vertex_suite)
from .errors import KPGiveError, TrustExceeded, VerificationFailed
from .fock import FockVector, apply_loop_group
from .frobenius import frobenius_from_psi, gradient_defect, summarize, theta_series, trr_defect, wdvv_defect
from .givental import compute_legs, verify_main_theorem
from .kptau import Cutoffs, orthogonality_defect, tau, wave_psi
from .loop import LoopAlgebraElement, LoopGroupElement, series_of_product, twisted_product_defect
from .sampling import Shape, fingerprint, sample_algebra, sample_group

MAX_N = 6
CHECK_TARGETS = ("orthogonality", "bilinear", "wdvv", "trr", "vertex", "gamma", "clifford",
                 "group-twist")
SIDES = ("lee-theta", "lee-psi", "kp", "dual")
_CUTOFF_KEYS = (("E", "energy2"), ("W", "xweight"), ("Z", "zorder"), ("T", "tdegree"),
                ("D", "thetaDepth"))


class ConfigError(KPGiveError, ValueError):
    pass


@dataclass
class RunConfig:
    n: int
    cutoffs: Cutoffs
    group: LoopGroupElement
    algebra: LoopAlgebraElement | None = None
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def echo(self):
        out = {"n": self.n, "cutoffs": self.cutoffs.to_json(), "group": self.group.to_json()}
        if self.algebra is not None:
            out["algebra"] = self.algebra.to_json()
        if self.options:
            out["options"] = self.options
        return out


def parse_cutoffs(obj, override=None):
    obj = obj or {}
    unknown = set(obj) - {k for _, k in _CUTOFF_KEYS} - {"trim"}
    if unknown:
        raise ConfigError(f"unknown cutoff keys: {sorted(unknown)}")
    values = {short: obj.get(key, getattr(Cutoffs, short)) for short, key in _CUTOFF_KEYS}
    if override:
        parts = override.split(",")
        if len(parts) != 5:
            raise ConfigError("--override-cutoffs expects E,W,Z,T,D")
        for (short, _), text in zip(_CUTOFF_KEYS, parts):
            if text.strip():
                values[short] = text.strip()
    for short, key in _CUTOFF_KEYS:
        try:
            v = int(values[short])
        except (TypeError, ValueError):
            raise ConfigError(f"cutoff {key} must be an integer") from None
        if v <= 0:
            raise ConfigError(f"cutoff {key} must be positive")
        values[short] = v
    return Cutoffs(**values, trim=bool(obj.get("trim", True)))


def _parse_group(obj, n, seed):
    if obj is None or obj == "identity":
        return LoopGroupElement.identity(n)
    if "sample" in obj:
        spec = obj["sample"]
        shape = Shape.from_json({**spec, "n": n})
        return sample_group(spec.get("seed", 0) if seed is None else seed, shape)
    if obj.get("n", n) != n:
        raise ConfigError("group n differs from config n")
    return LoopGroupElement.from_json(obj, n)


def _parse_algebra(obj, n, seed):
    if obj is None:
        return None
    if "sample" in obj:
        spec = obj["sample"]
        s = spec.get("seed", 0) if seed is None else seed + 1
        return sample_algebra(s, n, spec.get("sign", "+"), spec.get("levels", [1]),
                              spec.get("max_num", 3), spec.get("max_den", 2))
    return LoopAlgebraElement.from_json(obj, n)


def load_config(raw, *, override=None, seed=None, allow_large_n=False) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    n = raw.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError("n must be an integer >= 1")
    if n > MAX_N and not allow_large_n:
        raise ConfigError(f"n = {n} exceeds {MAX_N}; pass --allow-large-n to proceed")
    cutoffs = parse_cutoffs(raw.get("cutoffs"), override)
    try:
        group = _parse_group(raw.get("group"), n, seed)
        algebra = _parse_algebra(raw.get("algebra"), n, seed)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed loop element: {exc}") from None
    return RunConfig(n, cutoffs, group, algebra, dict(raw.get("options", {})), raw)


# ---------------------------------------------------------------------------
# verbs; each returns (payload, ok)


def _summary(label_pairs):
    return summarize(label_pairs).to_json()


def _series_summary(diff):
    first = diff.first_nonzero()
    return {"all_zero": first is None, "first_nonzero": first, "trust": diff.trust_order}


def _frobenius(cfg):
    psi = wave_psi(cfg.group, "+", cfg.cutoffs, regime="x1")
    return frobenius_from_psi(psi, cfg.cutoffs)


def run_tau(cfg):
    charge = cfg.options.get("charge")
    t = tau(cfg.group, charge, cfg.cutoffs, regime=cfg.options.get("regime", "all"))
    return t.to_json(), True


def run_psi(cfg, sign="+"):
    w = wave_psi(cfg.group, sign, cfg.cutoffs, regime=cfg.options.get("regime", "all"))
    return w.to_json(), True


def run_theta(cfg):
    psi = wave_psi(cfg.group, "+", cfg.cutoffs, regime="x1")
    return theta_series(psi, min(cfg.cutoffs.D, cfg.cutoffs.Z)).to_json(), True


def run_potential(cfg):
    _, frob = _frobenius(cfg)
    return frob.to_json(), True


def check_orthogonality(cfg):
    return _series_summary(orthogonality_defect(cfg.group, cfg.cutoffs))


def check_bilinear(cfg):
    v = apply_loop_group(cfg.group, FockVector.vacuum(cfg.n), cfg.cutoffs.E)
    if not v.certified:
        raise TrustExceeded("A|0> is not exact at this energy cut")
    res = bilinear_suite([("A|0>", v)])
    return {"all_zero": res.ok, "first_nonzero": res.first_failure, "energy2": cfg.cutoffs.E}


def check_wdvv(cfg):
    _, frob = _frobenius(cfg)
    return _summary(wdvv_defect(frob))


def check_trr(cfg):
    _, frob = _frobenius(cfg)
    out = {"gradient": _summary(gradient_defect(frob))}
    for s in cfg.options.get("trr_s", [2, 3]):
        out[f"s={s}"] = _summary(trr_defect(frob, s))
    out["all_zero"] = all(v["all_zero"] for v in out.values())
    return out


def _fock_energy(cfg):
    return int(cfg.options.get("fock_energy2", 12))


def _fock_suite(fn, cfg):
    return fn(cfg.n, _fock_energy(cfg)).to_json()


def check_clifford(cfg):
    out = {"clifford": clifford_suite(cfg.n, _fock_energy(cfg)).to_json(),
           "oscillator": oscillator_suite(cfg.n, _fock_energy(cfg)).to_json(),
           "Q": q_suite(cfg.n, _fock_energy(cfg)).to_json()}
    out["all_zero"] = all(v["all_zero"] for v in out.values())
    return out


def check_group_twist(cfg):
    """A(-ζ)ᵗA(ζ) - Id for the raising and lowering parts of A separately."""
    out = {"zorder": cfg.cutoffs.Z}
    first = None
    for sign, name in (("+", "raising"), ("-", "lowering")):
        part = [f for f in cfg.group.factors if f.sign == sign]
        C = series_of_product(part, cfg.cutoffs.Z, cfg.n)
        D = twisted_product_defect(C, cfg.n)
        hit = next(((l, i + 1, j + 1) for l, M in enumerate(D) for i, row in enumerate(M)
                    for j, x in enumerate(row) if x), None)
        out[name] = {"factors": len(part), "all_zero": hit is None}
        if hit is not None and first is None:
            first = f"{name} order {hit[0]} entry [{hit[1]}][{hit[2]}]"
    if cfg.algebra is not None:
        cfg.algebra.check_twisted()
        out["algebra_twisted"] = True
    out["all_zero"] = first is None
    out["first_nonzero"] = first
    return out


CHECKS = {
    "orthogonality": check_orthogonality,
    "bilinear": check_bilinear,
    "wdvv": check_wdvv,
    "trr": check_trr,
    "vertex": partial(_fock_suite, vertex_suite),
    "gamma": partial(_fock_suite, gamma_suite),
    "clifford": check_clifford,
    "group-twist": check_group_twist,
}


def _run_check(target, cfg):
    return target, CHECKS[target](cfg)


def run_check(cfg, targets):
    workers = max(1, int(os.environ.get("KPGIVE_THREADS", "1") or 1))
    if workers > 1 and len(targets) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(targets))) as pool:
            results = list(pool.map(_run_check, targets, [cfg] * len(targets)))
    else:
        results = [_run_check(t, cfg) for t in targets]
    payload = dict(results)
    return payload, all(r["all_zero"] for r in payload.values())


def _require_algebra(cfg):
    if cfg.algebra is None:
        raise ConfigError("this command needs an 'algebra' entry")
    return cfg.algebra


def run_derive(cfg, side):
    a = _require_algebra(cfg)
    legs, series = compute_legs(cfg.group, a, cfg.cutoffs)
    out = {"side": side, "dF": legs[side].to_json()}
    if side in ("kp", "dual"):
        out["dPsi"] = series[side].to_json("dpsi")
    return out, True


def run_verify(cfg):
    report = verify_main_theorem(cfg.group, _require_algebra(cfg), cfg.cutoffs)
    return report.to_json(), report.ok


def run_sample(cfg, seed):
    out = {"group": cfg.group.to_json(), "group_fingerprint": fingerprint(cfg.group)}
    if cfg.algebra is not None:
        out["algebra"] = cfg.algebra.to_json()
        out["algebra_fingerprint"] = fingerprint(cfg.algebra)
    out["seed"] = seed
    return out, True


def dispatch(cfg, args):
    verb = args.verb
    if verb == "tau":
        return run_tau(cfg)
    if verb == "psi":
        return run_psi(cfg, args.sign)
    if verb == "theta":
        return run_theta(cfg)
    if verb == "potential":
        return run_potential(cfg)
    if verb == "check":
        return run_check(cfg, args.targets)
    if verb == "derive":
        return run_derive(cfg, args.side)
    if verb == "verify-main-theorem":
        return run_verify(cfg)
    if verb == "sample":
        return run_sample(cfg, args.seed)
    raise ConfigError(f"unknown verb {verb!r}")


def stabilize(cfg, args):
    """Payload at the configured cutoffs and at E+4, both with forced energy cuts."""
    base = replace(cfg, cutoffs=replace(cfg.cutoffs, trim=False))
    bumped = replace(cfg, cutoffs=base.cutoffs.bumped(4))
    a, ok_a = dispatch(base, args)
    b, ok_b = dispatch(bumped, args)
    same = _canonical(a) == _canonical(b)
    return a, ok_a and ok_b, {"checked": True, "energy2": [base.cutoffs.E, bumped.cutoffs.E],
                              "identical": same}


def _canonical(obj):
    return json.dumps(_strip_cutoffs(obj), sort_keys=True)


def _strip_cutoffs(obj):
    if isinstance(obj, dict):
        return {k: _strip_cutoffs(v) for k, v in obj.items() if k not in ("cutoffs", "energy2")}
    if isinstance(obj, list):
        return [_strip_cutoffs(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, help="seed for sampled group/algebra entries")
    common.add_argument("--override-cutoffs", metavar="E,W,Z,T,D",
                        help="replace cutoffs; empty fields keep the configured value")
    common.add_argument("--allow-large-n", action="store_true", help=f"permit n > {MAX_N}")
    common.add_argument("--stabilize", action="store_true",
                        help="also recompute at E+4 and compare payloads")

    p = argparse.ArgumentParser(prog="kpgive", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("tau", parents=[common], help="tau-function component")
    ps = sub.add_parser("psi", parents=[common], help="wave matrix Ψ^±")
    ps.add_argument("--sign", choices=["+", "-"], default="+")
    sub.add_parser("theta", parents=[common], help="θ-vectors and the flat map")
    sub.add_parser("potential", parents=[common], help="genus-zero potential F")
    pc = sub.add_parser("check", parents=[common], help="identity suites")
    pc.add_argument("targets", nargs="+", choices=CHECK_TARGETS)
    pd = sub.add_parser("derive", parents=[common], help="tangent derivative of F")
    pd.add_argument("--side", choices=SIDES, required=True)
    sub.add_parser("verify-main-theorem", parents=[common],
                   help="compare every derivative leg; exit 1 on mismatch")
    st = sub.add_parser("stabilize", parents=[common], help="rerun a verb at E+4 and diff")
    st.add_argument("inner", choices=["tau", "psi", "theta", "potential", "check", "derive",
                                      "verify-main-theorem"])
    st.add_argument("targets", nargs="*", default=[], help="check targets when INNER is check")
    st.add_argument("--sign", choices=["+", "-"], default="+")
    st.add_argument("--side", choices=SIDES, default="kp")
    sub.add_parser("sample", parents=[common], help="print the sampled group/algebra")
    return p


def _error_report(verb, message, code):
    return {"command": verb, "error": message, "exit_code": code}


def run(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    code = 0
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        cfg = load_config(raw, override=args.override_cutoffs, seed=args.seed,
                          allow_large_n=args.allow_large_n)
        if args.verb == "stabilize":
            if args.inner == "check" and not args.targets:
                raise ConfigError("stabilize check needs at least one target")
            bad = [t for t in args.targets if t not in CHECK_TARGETS]
            if bad:
                raise ConfigError(f"unknown check targets: {bad}")
            inner = argparse.Namespace(**{**vars(args), "verb": args.inner})
            payload, ok, stab = stabilize(cfg, inner)
            ok = ok and stab["identical"]
        elif args.stabilize:
            payload, ok, stab = stabilize(cfg, args)
            ok = ok and stab["identical"]
        else:
            payload, ok = dispatch(cfg, args)
            stab = {"checked": False}
        code = 0 if ok else 1
        report = {"command": args.verb, "config": cfg.echo(), "payload": payload,
                  "stabilization": stab, "verified": ok}
    except VerificationFailed as exc:
        code = 1
        report = _error_report(args.verb, str(exc), code)
        report["first_nonzero"] = exc.first_nonzero
        if hasattr(exc.residual, "to_json"):
            report["payload"] = exc.residual.to_json()
    except (OSError, json.JSONDecodeError, ValueError, KPGiveError) as exc:
        code = 2
        report = _error_report(args.verb, str(exc), code)
        print(f"kpgive: error: {exc}", file=sys.stderr)
    report["timing"] = {"seconds": round(time.perf_counter() - start, 3)}
    text = json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
