"""Batch entry point: ``nonlocal-pucci --config run.json [--out dir] [--verbose]``.

The whole run is described by one JSON document.  It is validated against a
per-command schema (unknown keys are rejected), dispatched to the library,
and every emitted file is recorded with its SHA-256 in ``manifest.json``.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import fields as dc_fields
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .kernels import EllipticityBounds, Extremal, FractionalLaplacian
from .quadrature import QuadratureConfig

__all__ = ["main", "run", "validate_config", "UsageError", "SCHEMAS"]

log = logging.getLogger("nonlocal_pucci.cli")

COMMANDS = ("exponent", "eigen", "punctured", "barriers", "harnack", "heat", "dirichlet", "acceptance")


class UsageError(ValueError):
    pass


class StepFailed(RuntimeError):
    def __init__(self, step: str, exc: BaseException):
        super().__init__(f"step '{step}' failed: {type(exc).__name__}: {exc}")
        self.step = step


# -- schema --------------------------------------------------------------------------------

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_quad = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_angular": {"type": "integer", "minimum": 8},
        "panels_per_decade": {"type": "integer", "minimum": 4},
        "delta_in": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.1},
        "gauss_order": {"type": "integer", "minimum": 2},
        "R_factor": _pos,
        "kink_levels": {"type": "integer", "minimum": 1},
        "t_min_fraction": _pos,
    },
}
_common = {
    "command": {"enum": list(COMMANDS)},
    "out": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "quadrature": _quad,
    "tol": _pos,
}
_class = {
    "N": {"type": "integer", "minimum": 1, "maximum": 3},
    "s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "gamma": _pos,
    "Gamma": _pos,
}
_kernel = {"kernel": {"enum": ["fractional_laplacian", "extremal"]}, "sign": {"enum": ["plus", "minus"]}}
_domain = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["ball", "annulus", "whole_space"]},
        "R": _pos,
        "inner": _pos,
        "outer": _pos,
        "radii": {"type": "array", "items": _pos, "minItems": 3},
    },
}


def _schema(required, **props):
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", *required],
        "properties": {**_common, **props},
    }


SCHEMAS = {
    "exponent": _schema(["N", "s"], **_class, sign={"enum": ["plus", "minus", "both"]}),
    "eigen": _schema(["N", "s"], **_class, **_kernel, domain=_domain, drift={"enum": ["none", "selfsimilar"]},
                     h0=_pos),
    "punctured": _schema(["N", "s"], **_class, **_kernel, R=_pos, h0=_pos,
                         eps_list={"type": "array", "items": _pos, "minItems": 1}),
    "barriers": _schema(["N", "s"], **_class,
                        checks={"type": "array", "items": {"enum": ["subsolution", "corollary", "supersolution",
                                                                    "psi"]}},
                        M=_pos, beta=_pos, c=_pos, eps=_pos,
                        M_ladder={"type": "array", "items": _pos, "minItems": 1}),
    "harnack": _schema(["N", "s"], **_class, sign={"enum": ["plus", "minus"]}, M1={"type": "number", "minimum": 0},
                       M2={"type": "number", "minimum": 0}, count={"type": "integer", "minimum": 1}, h0=_pos),
    "heat": _schema(["N", "s"], N=_class["N"], s=_class["s"], R=_pos),
    "dirichlet": _schema(["N", "s"], **_class, **_kernel, R=_pos, rhs=_num, h0=_pos),
    "acceptance": _schema([], criteria={"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 13}},
                          harnack_count={"type": "integer", "minimum": 50}),
}


def _path_of(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return "config" + "".join(f"[{p}]" if p.isdigit() else f".{p}" for p in parts)


def validate_config(cfg) -> dict:
    """Raise :class:`UsageError` naming the offending key path."""
    if not isinstance(cfg, dict):
        raise UsageError("config: top level must be a JSON object")
    cmd = cfg.get("command")
    if cmd not in SCHEMAS:
        raise UsageError(f"config.command: must be one of {', '.join(COMMANDS)} (got {cmd!r})")
    errors = sorted(jsonschema.Draft202012Validator(SCHEMAS[cmd]).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        raise UsageError("; ".join(f"{_path_of(e)}: {e.message}" for e in errors))
    if "gamma" in cfg and "Gamma" in cfg and cfg["gamma"] > cfg["Gamma"]:
        raise UsageError("config.gamma: must not exceed config.Gamma")
    return cfg


# -- output bookkeeping --------------------------------------------------------------------


def _atomic_write(path: Path, data: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[Path] = []
        root.mkdir(parents=True, exist_ok=True)

    def text(self, name: str, text: str) -> Path:
        p = self.root / name
        _atomic_write(p, text.encode("utf-8"))
        self.files.append(p)
        return p

    def json(self, name: str, obj) -> Path:
        return self.text(name, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, header, rows) -> Path:
        lines = [",".join(header)]
        lines += [",".join(_cell(v) for v in row) for row in rows]
        return self.text(name, "\n".join(lines) + "\n")

    def register(self, *paths):
        self.files.extend(Path(p) for p in paths)

    def inventory(self) -> list[dict]:
        seen, out = set(), []
        for p in self.files:
            if p in seen:
                continue
            seen.add(p)
            out.append({"path": p.name, "bytes": p.stat().st_size, "sha256": _sha256(p)})
        return out


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    return repr(obj)


# -- commands ------------------------------------------------------------------------------


def _bounds(c) -> EllipticityBounds:
    return EllipticityBounds(float(c.get("gamma", 1.0)), float(c.get("Gamma", 1.0)), float(c["s"]), int(c["N"]))


def _kernel_of(c):
    if c.get("kernel", "fractional_laplacian") == "fractional_laplacian":
        return FractionalLaplacian(int(c["N"]), float(c["s"]))
    return Extremal(_bounds(c))


def _quad_cfg(c, base: QuadratureConfig) -> QuadratureConfig:
    q = c.get("quadrature", {})
    names = {f.name for f in dc_fields(QuadratureConfig)}
    return QuadratureConfig(**{**{n: getattr(base, n) for n in names}, **q})


def _cmd_exponent(c, out, step):
    from .exponents import solve_sigma

    b = _bounds(c)
    signs = ("plus", "minus") if c.get("sign", "plus") == "both" else (c.get("sign", "plus"),)
    cfg = _quad_cfg(c, QuadratureConfig())
    res = [step(f"solve_sigma[{sg}]", lambda sg=sg: solve_sigma(b, sg, tol=c.get("tol", 1e-7), cfg=cfg))
           for sg in signs]
    out.json("exponent.json", res[0].to_json() if len(res) == 1 else [r.to_json() for r in res])
    out.csv("exponent.csv", ["sign", "sigma", "Ntilde", "residual"],
            [[r.operator_sign, r.sigma, r.Ntilde, r.residual] for r in res])


def _cmd_eigen(c, out, step):
    from .discrete import DEFAULT_DISCRETE_CFG
    from .eigen import Annulus, Ball, decay_exponent, principal_eigenpair, whole_space_eigenpair
    from .fields import write_csv
    from .operators import OperatorSpec

    k = _kernel_of(c)
    sign = c.get("sign", "plus")
    dom = c.get("domain", {"type": "ball", "R": 1.0})
    cfg = _quad_cfg(c, DEFAULT_DISCRETE_CFG)
    tol = c.get("tol", 1e-9)
    if dom["type"] == "whole_space":
        pair, trace = step("whole_space_eigenpair", lambda: whole_space_eigenpair(
            k, sign, tuple(dom.get("radii", (10.0, 20.0, 40.0))), tol=tol, cfg=cfg, h0=c.get("h0", 0.05)))
        tail = decay_exponent(pair)
        out.json("eigen.json", {"lambda": pair.lam, **trace.to_json(), "tail_A": tail.A, "tail_p": tail.p})
        out.csv("exhaustion.csv", ["R", "lambda", "p"], [[R, lam, p] for R, lam, p in
                                                          zip(trace.radii, trace.lambdas, trace.decay)])
    else:
        domain = Ball(dom.get("R", 1.0)) if dom["type"] == "ball" else Annulus(dom["inner"], dom["outer"])
        drift = "selfsimilar" if c.get("drift", "none") == "selfsimilar" else None
        spec = OperatorSpec(k, sign, drift=drift)
        pair = step("principal_eigenpair", lambda: principal_eigenpair(spec, domain, tol, cfg, h0=c.get("h0")))
        out.json("eigen.json", pair.to_json())
    p = out.root / "eigenfunction.csv"
    write_csv(pair.phi, p)
    out.register(p, p.with_suffix(".json"))


def _cmd_punctured(c, out, step):
    from .discrete import DEFAULT_DISCRETE_CFG
    from .eigen import punctured_eigenvalue

    k = _kernel_of(c)
    res = step("punctured_eigenvalue", lambda: punctured_eigenvalue(
        k, c.get("sign", "plus"), tuple(c.get("eps_list", (0.2, 0.1, 0.05))), R=c.get("R", 10.0),
        tol=c.get("tol", 1e-9), cfg=_quad_cfg(c, DEFAULT_DISCRETE_CFG), h0=c.get("h0", 0.05)))
    out.csv("punctured.csv", ["eps", "lambda"], res)
    out.json("punctured.json", {"eps": [e for e, _ in res], "lambda": [lam for _, lam in res]})


def _cmd_barriers(c, out, step):
    from . import barriers as B

    b = _bounds(c)
    cfg = _quad_cfg(c, QuadratureConfig())
    N, s = b.N, b.s
    checks = c.get("checks", ["subsolution", "corollary", "supersolution", "psi"])
    summary = {}
    M = c.get("M", 4.0)
    for name in checks:
        if name == "subsolution":
            rep = step(name, lambda: B.verify_subsolution(b, M, beta=c.get("beta"), cfg=cfg))
        elif name == "corollary":
            def ladder():
                rep = None
                for m in c.get("M_ladder", (1.0, 2.0, 4.0, 8.0, 16.0)):
                    rep = B.verify_corollary(b, m, cfg=cfg)
                    if rep.passed and rep.constants.get("c_emp", 0) > 0:
                        break
                return rep
            rep = step(name, ladder)
        elif name == "supersolution":
            beta = c.get("beta", N + 2 * s - 0.5 if s > 0.25 else N + s)
            rep = step(name, lambda: B.verify_supersolution(b, beta, c.get("c", 1.0), cfg=cfg))
        else:
            rep = step(name, lambda: B.verify_psi(b, M=M, eps=c.get("eps", 1e-3), cfg=cfg))
        out.text(f"{name}.csv", rep.to_csv())
        summary[name] = rep.summary()
    out.json("barriers.json", summary)


def _cmd_harnack(c, out, step):
    from .harnack import run_harnack_experiment

    b = _bounds(c)
    rep = step("run_harnack_experiment", lambda: run_harnack_experiment(
        b, M1=c.get("M1", 1.0), M2=c.get("M2", 1.0), count=c.get("count", 100), seed=c.get("seed", 0),
        sign=c.get("sign", "plus"), h0=c.get("h0", 0.05)))
    out.text("harnack.csv", rep.to_csv())
    out.text("harnack.json", rep.to_json() + "\n")


def _cmd_heat(c, out, step):
    from .fields import write_csv
    from .heat import heat_profile, verify_eigen_relation, verify_kernel_bounds

    N, s = int(c["N"]), float(c["s"])
    prof = step("heat_profile", lambda: heat_profile(N, s, R=c.get("R", 200.0)))
    p = out.root / "profile.csv"
    write_csv(prof.field, p, {"s": s})
    out.register(p, p.with_suffix(".json"))
    lo, hi, ratio = step("verify_kernel_bounds", lambda: verify_kernel_bounds(prof))
    summary = {"N": N, "s": s, "P0": float(prof.field(np.array([0.0]))[0]), "mass": prof.mass(),
               "band": [lo, hi], "band_ratio": ratio, "tail_A": prof.field.tail.A, "tail_p": prof.field.tail.p}
    if s > 0.5:
        summary["eigen_residual"] = step("verify_eigen_relation", lambda: verify_eigen_relation(prof))
    out.json("heat.json", summary)


def _cmd_dirichlet(c, out, step):
    from .discrete import DEFAULT_DISCRETE_CFG
    from .eigen import Ball, solve_dirichlet
    from .fields import write_csv
    from .operators import OperatorSpec

    spec = OperatorSpec(_kernel_of(c), c.get("sign", "plus"))
    rhs = float(c.get("rhs", 1.0))
    u = step("solve_dirichlet", lambda: solve_dirichlet(
        spec, lambda r: np.full(np.shape(r), rhs), Ball(c.get("R", 1.0)), _quad_cfg(c, DEFAULT_DISCRETE_CFG),
        h0=c.get("h0")))
    p = out.root / "solution.csv"
    write_csv(u, p)
    out.register(p, p.with_suffix(".json"))
    out.json("dirichlet.json", {"u0": float(u(np.array([0.0]))[0]), "rhs": rhs, "R": c.get("R", 1.0)})


def _cmd_acceptance(c, out, step):
    from .acceptance import AcceptanceRun, run_acceptance

    run = AcceptanceRun(harnack_count=c.get("harnack_count", 100), seed=c.get("seed", 0))
    results = []
    for n in c.get("criteria", list(range(1, 14))):
        res = run_acceptance([n], run, echo=lambda line: print(line, flush=True))[0]
        results.append(res)
        log.info(json.dumps({"event": "criterion", "number": n, "passed": res.passed}))
    out.json("acceptance.json", [r.to_json() for r in results])
    out.csv("acceptance.csv", ["criterion", "passed", "seconds"], [[r.number, r.passed, r.seconds] for r in results])
    failed = [r.number for r in results if not r.passed]
    if failed:
        raise StepFailed("acceptance", RuntimeError(f"criteria failed: {failed}"))


_DISPATCH = {
    "exponent": _cmd_exponent,
    "eigen": _cmd_eigen,
    "punctured": _cmd_punctured,
    "barriers": _cmd_barriers,
    "harnack": _cmd_harnack,
    "heat": _cmd_heat,
    "dirichlet": _cmd_dirichlet,
    "acceptance": _cmd_acceptance,
}


# -- driver --------------------------------------------------------------------------------


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="milliseconds")


def run(config: dict, out_dir=None) -> dict:
    """Execute a validated config; returns the manifest (also written to disk).

    Raises :class:`StepFailed` after the manifest is written when a step fails.
    """
    validate_config(config)
    root = Path(out_dir or config.get("out") or "out")
    out = Outputs(root)
    steps: list[dict] = []
    started = _now()

    def step(name, fn):
        t0 = time.perf_counter()
        log.info(json.dumps({"event": "step_start", "step": name}))
        try:
            val = fn()
        except StepFailed:
            raise
        except Exception as exc:
            steps.append({"step": name, "status": "failed", "seconds": time.perf_counter() - t0,
                          "error": f"{type(exc).__name__}: {exc}"})
            raise StepFailed(name, exc) from exc
        steps.append({"step": name, "status": "ok", "seconds": time.perf_counter() - t0})
        log.info(json.dumps({"event": "step_end", "step": name, "seconds": steps[-1]["seconds"]}))
        return val

    failure = None
    try:
        _DISPATCH[config["command"]](config, out, step)
    except StepFailed as exc:
        failure = exc
    except Exception as exc:  # raised outside a named step, e.g. while building the operator
        failure = StepFailed(config["command"], exc)
    if failure is not None and (not steps or steps[-1]["status"] == "ok"):
        steps.append({"step": failure.step, "status": "failed", "error": str(failure)})
    manifest = {
        "tool": "nonlocal-pucci",
        "version": __version__,
        "config": config,
        "started": started,
        "finished": _now(),
        "status": "failed" if failure else "ok",
        "steps": steps,
        "outputs": out.inventory(),
    }
    _atomic_write(root / "manifest.json", (json.dumps(_jsonable(manifest), indent=2) + "\n").encode("utf-8"))
    if failure:
        raise failure
    return manifest


class _JsonLines(logging.Formatter):
    def format(self, record):
        msg = record.getMessage()
        try:
            payload = json.loads(msg)
        except ValueError:
            payload = {"message": msg}
        return json.dumps({"time": _now(), "level": record.levelname, "logger": record.name, **payload})


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonlocal-pucci", description="Run one configured computation.")
    p.add_argument("--config", required=True, help="path to the JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config's 'out')")
    p.add_argument("--verbose", action="store_true", help="JSON-lines diagnostics on stderr")
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLines())
    root_log = logging.getLogger("nonlocal_pucci")
    root_log.handlers[:] = [handler]
    root_log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        validate_config(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run(config, args.out)
    except StepFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything unexpected is still a computation failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"status": manifest["status"], "outputs": [o["path"] for o in manifest["outputs"]]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
