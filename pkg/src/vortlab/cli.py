"""Command line entry point: ``vortlab simulate|steady|verify|sweep``.

Runs are described by flat config files (see :mod:`vortlab.formats`)::

    model.name = model1
    domain.kind = ellipse
    domain.a = 1.0
    domain.b = 0.0
    domain.c = 1.0
    domain.n = 64
    init.kind = constant
    init.value = 2.0
    sim.t_end = 2.0

Every run directory receives ``config.resolved`` (the config with all
defaults filled in), so a run can be repeated from its own output.

Exit codes: 0 done, 2 blow-up detected, 1 error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import verify
from .dynamics import SimConfig, run_simulation
from .formats import (
    ConfigError,
    SnapshotError,
    dump_config,
    load_config,
    parse_value,
    read_snapshot,
    write_json,
    write_snapshot,
    write_timeseries_csv,
)
from .geometry import DomainError, EllipseDomain, MaskedGrid, PeriodicBox, RectangleDomain, build_masked_grid
from .models import ModelSpec
from .spectral import SineField
from .steady import L_multiplier, RestrictedProblem, SteadySolveError, VanishingSet, solve_restricted

log = logging.getLogger("vortlab")

EXIT_OK, EXIT_ERROR, EXIT_BLOWUP = 0, 1, 2
OUTPUT_ENV = "VORTLAB_OUTPUT"

DEFAULTS = {
    "model.name": "model1",
    "model.convection": False,
    "model.diffusion": False,
    "domain.kind": "ellipse",
    "domain.a": 1.0,
    "domain.b": 0.0,
    "domain.c": 1.0,
    "domain.n": 64,
    "domain.dim": 2,
    "domain.length": 2 * np.pi,
    "init.kind": "constant",
    "init.value": 0.0,
    "init.modes": "",
    "init.file": "",
    "sim.dt0": 1e-2,
    "sim.t_end": 1.0,
    "sim.integrator": "auto",
    "sim.blowup_threshold": 1e6,
    "sim.min_dt": 1e-12,
    "sim.output_every": 10,
    "sim.dealias": True,
    "sim.max_growth": 0.1,
    "sim.max_steps": 1_000_000,
    "output.dir": "",
    "seed": 0,
    "steady.alpha": 1.0,
    "steady.mask": "empty",
    "steady.mask_file": "",
    "steady.fraction": 0.3,
    "steady.tol": 1e-10,
    "steady.max_iter": 10_000,
    "sweep.command": "simulate",
    "sweep.key": "",
    "sweep.values": "",
    "sweep.workers": 1,
}


class RunError(RuntimeError):
    """A config that parses but cannot be run as written."""


# ------------------------------------------------------------------ config


def resolve_config(raw: dict, source: str = "<config>") -> dict:
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{source}: unknown keys {', '.join(unknown)}")
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    for key, default in DEFAULTS.items():
        v = cfg[key]
        if isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"{source}: {key} must be true or false, got {v!r}")
        elif isinstance(default, int):
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{source}: {key} must be an integer, got {v!r}")
        elif isinstance(default, float):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{source}: {key} must be a number, got {v!r}")
            cfg[key] = float(v)
        else:
            cfg[key] = str(v)
    return cfg


def _read(path) -> tuple[dict, Path]:
    path = Path(path)
    return resolve_config(load_config(path), str(path)), path


def output_dir(cfg: dict, config_path: Path) -> Path:
    if cfg["output.dir"]:
        out = Path(cfg["output.dir"])
        if not out.is_absolute():
            out = config_path.parent / out
    else:
        out = Path(os.environ.get(OUTPUT_ENV, "runs")) / config_path.stem
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_domain(cfg: dict):
    kind = cfg["domain.kind"]
    n = cfg["domain.n"]
    if kind == "ellipse":
        return build_masked_grid(EllipseDomain(cfg["domain.a"], cfg["domain.b"], cfg["domain.c"]), n)
    if kind == "rectangle":
        return RectangleDomain(n)
    if kind == "periodic":
        return PeriodicBox(cfg["domain.dim"], n, cfg["domain.length"])
    raise RunError(f"unknown domain.kind {kind!r}; choose ellipse, rectangle or periodic")


def _domain_header(domain):
    if isinstance(domain, MaskedGrid):
        d = domain.domain
        return "ellipse", (d.a, d.b, d.c, domain.origin, domain.spacing), domain.interior
    if isinstance(domain, RectangleDomain):
        return "rectangle", (), None
    return "periodic", (domain.length,), None


def parse_modes(text: str, dim: int):
    """``"k1 k2 amp; ..."`` entries, optionally prefixed ``cN:`` for component N."""
    modes = []
    for entry in filter(None, (e.strip() for e in text.split(";"))):
        comp = 0
        if entry.startswith("c") and ":" in entry:
            head, entry = entry.split(":", 1)
            try:
                comp = int(head[1:]) - 1
            except ValueError:
                raise ConfigError(f"bad component prefix {head!r} in init.modes") from None
        parts = entry.split()
        if len(parts) != dim + 1:
            raise ConfigError(f"init.modes entry {entry!r} needs {dim} wavenumbers and an amplitude")
        try:
            ks = tuple(int(p) for p in parts[:dim])
            amp = float(parts[dim])
        except ValueError:
            raise ConfigError(f"cannot parse init.modes entry {entry!r}") from None
        modes.append((comp, ks, amp))
    if not modes:
        raise ConfigError("init.kind = modes needs a non-empty init.modes")
    return modes


def initial_data(cfg: dict, spec: ModelSpec, base: Path):
    kind = cfg["init.kind"]
    if kind == "constant":
        return cfg["init.value"]
    if kind == "file":
        path = Path(cfg["init.file"])
        if not path.is_absolute():
            path = base / path
        snap = read_snapshot(path)
        return snap.field
    if kind == "modes":
        d = spec.domain
        dim = d.dim if isinstance(d, PeriodicBox) else 2
        w = np.zeros(spec.state_shape)
        view = w if spec.n_components > 1 else w[None]
        X = d.mesh()
        for comp, ks, amp in parse_modes(cfg["init.modes"], dim):
            if not 0 <= comp < spec.n_components:
                raise ConfigError(f"init.modes component {comp + 1} out of range for {spec.variant}")
            if isinstance(d, RectangleDomain):
                if min(ks) < 1:
                    raise ConfigError("sine modes on the rectangle need wavenumbers >= 1")
                view[comp] += amp * np.sin(ks[0] * X[0]) * np.sin(ks[1] * X[1])
            else:
                scale = 2 * np.pi / d.length if isinstance(d, PeriodicBox) else 1.0
                view[comp] += amp * np.cos(scale * sum(k * x for k, x in zip(ks, X)))
        return w
    raise RunError(f"unknown init.kind {kind!r}; choose constant, modes or file")


def sim_config(cfg: dict) -> SimConfig:
    return SimConfig(
        dt0=cfg["sim.dt0"],
        t_end=cfg["sim.t_end"],
        integrator=cfg["sim.integrator"],
        blowup_threshold=cfg["sim.blowup_threshold"],
        min_dt=cfg["sim.min_dt"],
        output_every=cfg["sim.output_every"],
        dealias=cfg["sim.dealias"],
        max_growth=cfg["sim.max_growth"],
        max_steps=cfg["sim.max_steps"],
    )


# ---------------------------------------------------------------- commands


def _guard(fn):
    """Map expected failures to exit code 1 with a one-line message."""

    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, SnapshotError, DomainError, RunError, ValueError, SteadySolveError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


@_guard
def cmd_simulate(config_path) -> int:
    cfg, path = _read(config_path)
    domain = build_domain(cfg)
    spec = ModelSpec(cfg["model.name"], domain, cfg["model.convection"], cfg["model.diffusion"])
    w0 = initial_data(cfg, spec, path.parent)
    sim = sim_config(cfg)
    out = output_dir(cfg, path)
    (out / "config.resolved").write_text(dump_config(cfg))

    result = run_simulation(spec, w0, sim)

    write_timeseries_csv(out / "timeseries.csv", result.series)
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    tag, params, mask = _domain_header(domain)
    comps = spec.n_components if spec.n_components > 1 else None
    for k, (t, w) in enumerate(result.snapshots):
        write_snapshot(snaps / f"snap_{k:05d}.clm2", w, tag, params, t, mask, comps)
    report = result.report.as_dict()
    report.update(status=result.status, steps=result.steps, model=spec.variant)
    write_json(out / "report.json", report)

    r = result.report
    if r.detected:
        print(f"blow-up detected: T_hat={r.T_hat:.8g} exponent={r.exponent_hat:.5g} ({r.message})")
        print(f"outputs in {out}")
        return EXIT_BLOWUP
    print(f"{result.status}: t={r.last_t:.6g} after {result.steps} steps; outputs in {out}")
    return EXIT_OK


def vanishing_set(cfg: dict, n: int, base: Path) -> VanishingSet:
    kind = cfg["steady.mask"]
    if kind == "empty":
        return VanishingSet.empty(n)
    if kind == "left_half":
        return VanishingSet.left_half(n)
    if kind == "random":
        return VanishingSet.random(n, np.random.default_rng(cfg["seed"]), cfg["steady.fraction"])
    if kind == "file":
        path = Path(cfg["steady.mask_file"])
        if not path.is_absolute():
            path = base / path
        snap = read_snapshot(path)
        m = snap.mask if snap.mask is not None else snap.field != 0
        if m.shape != (n, n):
            raise RunError(f"{path}: mask shape {m.shape} does not match domain.n = {n}")
        return VanishingSet(m)
    raise RunError(f"unknown steady.mask {kind!r}; choose empty, left_half, random or file")


def steady_oracle(alpha: float, E: VanishingSet):
    """Independent solution when one exists: L = 1 at alpha = 1, or E empty."""
    if alpha == 1.0:
        return (~E.mask).astype(float), "indicator"
    if not E.mask.any():
        ones = SineField.from_grid(np.ones((E.n, E.n)))
        return SineField(ones.coeffs / L_multiplier(alpha, E.n)).to_grid(), "diagonal"
    return None, None


@_guard
def cmd_steady(config_path) -> int:
    cfg, path = _read(config_path)
    if cfg["domain.kind"] != "rectangle":
        raise RunError("steady solves run on the rectangle; set domain.kind = rectangle")
    n = cfg["domain.n"]
    domain = RectangleDomain(n)
    E = vanishing_set(cfg, n, path.parent)
    problem = RestrictedProblem(cfg["steady.alpha"], E, cfg["steady.tol"], cfg["steady.max_iter"])
    out = output_dir(cfg, path)
    (out / "config.resolved").write_text(dump_config(cfg))

    try:
        w, cert = solve_restricted(problem)
        status = EXIT_OK
    except SteadySolveError as exc:
        w, cert, status = exc.best, exc.certificate, EXIT_ERROR
        print(f"error: {exc}", file=sys.stderr)

    data = cert.as_dict()
    oracle, name = steady_oracle(problem.alpha, E)
    if oracle is not None:
        data["oracle"] = name
        data["oracle_max_error"] = float(np.abs(w - oracle).max())
    write_snapshot(out / "solution.clm2", w, "rectangle", (), 0.0, E.mask)
    write_json(out / "certificate.json", data)
    if status == EXIT_OK:
        extra = f", {name} oracle error {data['oracle_max_error']:.2e}" if oracle is not None else ""
        print(
            f"converged in {cert.iterations} iterations, off-E residual {cert.off_E_residual:.2e}{extra}; "
            f"outputs in {out}"
        )
    return status


def cmd_verify(suite: str) -> int:
    if suite not in verify.SUITES:
        print(f"error: unknown suite {suite!r}; valid suites: {', '.join(verify.SUITES)}", file=sys.stderr)
        return EXIT_ERROR
    checks = verify.run_suite(suite)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{suite}: {len(checks) - failed}/{len(checks)} passed")
    return EXIT_OK if failed == 0 else EXIT_ERROR


def _sweep_values(text: str):
    vals = [parse_value(v.strip()) for v in text.split(",") if v.strip()]
    if not vals:
        raise ConfigError("sweep.values is empty")
    return vals


def _run_one(command: str, config_file: str) -> int:
    fn = cmd_simulate if command == "simulate" else cmd_steady
    return fn(config_file)


@_guard
def cmd_sweep(config_path) -> int:
    """Run one config per value of ``sweep.key``, each in its own directory."""
    cfg, path = _read(config_path)
    key, command = cfg["sweep.key"], cfg["sweep.command"]
    if key not in DEFAULTS or key.startswith(("sweep.", "output.")):
        raise ConfigError(f"sweep.key {key!r} is not a sweepable config key")
    if command not in ("simulate", "steady"):
        raise ConfigError(f"sweep.command must be simulate or steady, got {command!r}")
    values = _sweep_values(cfg["sweep.values"])
    root = output_dir(cfg, path)
    (root / "config.resolved").write_text(dump_config(cfg))

    jobs = []
    base = {k: v for k, v in cfg.items() if not k.startswith("sweep.")}
    for i, value in enumerate(values):
        run_dir = (root / f"run_{i:03d}").resolve()
        run_dir.mkdir(exist_ok=True)
        run_cfg = dict(base)
        run_cfg[key] = value
        run_cfg["output.dir"] = str(run_dir)
        for k in ("init.file", "steady.mask_file"):
            if run_cfg[k] and not Path(run_cfg[k]).is_absolute():
                run_cfg[k] = str((path.parent / run_cfg[k]).resolve())
        resolve_config(run_cfg, f"sweep value {value!r}")
        cfile = run_dir / "run.cfg"
        cfile.write_text(dump_config(run_cfg))
        jobs.append((value, cfile))

    workers = max(1, cfg["sweep.workers"])
    if workers == 1:
        codes = [_run_one(command, str(f)) for _, f in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_run_one, [command] * len(jobs), [str(f) for _, f in jobs]))

    summary = {
        "key": key,
        "command": command,
        "runs": [
            {"value": v, "dir": str(f.parent), "exit_code": c} for (v, f), c in zip(jobs, codes)
        ],
    }
    write_json(root / "sweep.json", summary)
    for (v, f), c in zip(jobs, codes):
        print(f"{key}={v!r}: exit {c} ({f.parent})")
    return EXIT_ERROR if EXIT_ERROR in codes else EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortlab", description="Nonlocal vorticity model laboratory.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "integrate a model from a config file"),
        ("steady", "solve the restricted steady problem on the rectangle"),
        ("sweep", "run a config over a list of values of one key"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config", help="path to the run config")
    sp = sub.add_parser("verify", help="run a built-in self-check suite")
    sp.add_argument("suite", help=f"one of: {', '.join(verify.SUITES)}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify(args.suite)
    return {"simulate": cmd_simulate, "steady": cmd_steady, "sweep": cmd_sweep}[args.command](args.config)


if __name__ == "__main__":
    sys.exit(main())
