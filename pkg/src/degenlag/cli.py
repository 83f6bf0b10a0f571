"""
Command-line front end.

    degenlag <simulate|parasites|defect-order|selftest> --config <path>
             [--h-list a,b,c] [--only suite] [--output prefix]

``--config`` takes a JSON file or the name of a built-in preset. A JSON file
may itself name a ``preset`` and override any of its fields. The document is
flat; ``system`` selects which of the system-specific keys are used:

* ``pendulum``: no extra keys
* ``toy``: ``u_coeffs``, ``v_coeffs`` (increasing degree)
* ``vortex``: ``gamma``, ``positions`` (list of ``[x, y]``)
* ``quadratic``: ``A``, ``S``

Exit codes: 0 success, 1 selftest failure, 2 configuration error,
3 numerical failure.
"""
import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import modified
from .analysis import decompose_parasites, defect_order, reference_solve
from .core import as_state, el_field
from .errors import DegenLagError
from .integrators import (
    ALTERNATING_UNIT,
    JacobianMode,
    MethodId,
    NewtonConfig,
    StarterMode,
    StarterSpec,
    del_residual,
    integrate,
)
from .modified import DoubledState, TruncationOrder, doubled_del_residual, parasite_growth_indicator
from .systems import (
    COLLISION_RADIUS,
    PointVortexSystem,
    QuadraticLinearSystem,
    ToySeparable,
    pendulum,
    vortex_rhs_complex,
)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SYSTEM_KINDS = ("pendulum", "toy", "vortex", "quadratic")
# points per step on the emitted exact and modified curves
CURVE_SAMPLES = 10


class ConfigError(ValueError):
    pass


def _tuple(x):
    if isinstance(x, (list, tuple)):
        return tuple(_tuple(v) for v in x)
    return float(x)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    system: str = "pendulum"
    q0: tuple = (3.0, 0.0)
    u_coeffs: tuple = ()
    v_coeffs: tuple = ()
    gamma: tuple = ()
    positions: tuple = ()
    A: tuple = ()
    S: tuple = ()
    method: str = "midpoint"
    h: float = 0.35
    steps: int = 200
    starter: str = StarterMode.REFERENCE_FLOW.value
    epsilon: float = 0.0
    direction: object = ALTERNATING_UNIT
    truncation: str = "two"
    reference_dt_divisor: int = 100
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    newton_jacobian: str = JacobianMode.ANALYTIC.value
    h_list: tuple = ()
    t_end: object = None
    output_prefix: str = "degenlag"

    def __post_init__(self):
        if self.system not in SYSTEM_KINDS:
            raise ConfigError(f"system must be one of {', '.join(SYSTEM_KINDS)}; got {self.system!r}")
        for name in ("q0", "u_coeffs", "v_coeffs", "gamma", "positions", "A", "S", "h_list"):
            object.__setattr__(self, name, _tuple(getattr(self, name)))
        if not isinstance(self.direction, str):
            object.__setattr__(self, "direction", _tuple(self.direction))
        try:
            object.__setattr__(self, "method", MethodId.parse(self.method).value)
            object.__setattr__(self, "truncation", TruncationOrder.parse(self.truncation).name.lower())
            object.__setattr__(self, "h", float(self.h))
            object.__setattr__(self, "epsilon", float(self.epsilon))
            object.__setattr__(self, "newton_tol", float(self.newton_tol))
            for name in ("steps", "reference_dt_divisor", "newton_max_iter"):
                v = getattr(self, name)
                if isinstance(v, bool) or int(v) != v:
                    raise ConfigError(f"{name} must be an integer")
                object.__setattr__(self, name, int(v))
            if self.t_end is not None:
                object.__setattr__(self, "t_end", float(self.t_end))
            # validate the nested specs eagerly
            self.starter_spec()
            self.newton_config()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not self.h > 0 or not math.isfinite(self.h):
            raise ConfigError("h must be positive")
        if self.steps < 1:
            raise ConfigError("steps must be at least 1")
        if self.reference_dt_divisor < 1:
            raise ConfigError("reference_dt_divisor must be at least 1")
        if self.system == "vortex":
            pos = np.asarray(self.positions, float)
            if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] != len(self.gamma) or pos.shape[0] < 2:
                raise ConfigError("vortex needs matching gamma[] and positions[[x, y], ...] with at least two vortices")
            d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
            if np.any(d[np.triu_indices(len(pos), 1)] < COLLISION_RADIUS):
                raise ConfigError("vortex positions must be pairwise distinct")

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        doc = dict(doc)
        preset = doc.pop("preset", None)
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            doc = {**PRESETS[preset], **doc}
        known = {f.name for f in dataclasses.fields(cls)}
        extra = sorted(set(doc) - known)
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(extra)}")
        return cls(**doc)

    def to_dict(self):
        def plain(v):
            return [plain(x) for x in v] if isinstance(v, tuple) else v
        return {f.name: plain(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def starter_spec(self):
        return StarterSpec(StarterMode(self.starter), self.epsilon, self.direction)

    def newton_config(self):
        return NewtonConfig(self.newton_tol, self.newton_max_iter, JacobianMode(self.newton_jacobian))

    def build_system(self):
        try:
            if self.system == "pendulum":
                return pendulum()
            if self.system == "toy":
                return ToySeparable.from_polynomials(self.u_coeffs, self.v_coeffs)
            if self.system == "vortex":
                return PointVortexSystem(self.gamma)
            return QuadraticLinearSystem(self.A, self.S)
        except (TypeError, ValueError, DegenLagError) as exc:
            raise ConfigError(f"cannot build {self.system} system: {exc}") from exc

    def initial_state(self, system):
        q0 = np.ravel(self.positions) if self.system == "vortex" else self.q0
        try:
            return as_state(q0, system.dim)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _pendulum_preset(method, q0):
    # h_list and t_end only feed defect-order
    return {"system": "pendulum", "method": method, "q0": q0, "h": 0.35, "steps": 200,
            "h_list": [0.2, 0.1, 0.05, 0.025, 0.0125], "t_end": 2.0}


PRESETS = {
    "pendulum-fig1a": _pendulum_preset("midpoint", [3.0, 0.0]),
    "pendulum-fig1b": _pendulum_preset("trapezoidal", [3.0, 0.0]),
    "pendulum-fig1c": _pendulum_preset("midpoint", [1.5, 0.0]),
    "pendulum-fig1d": _pendulum_preset("trapezoidal", [1.5, 0.0]),
    "vortex-leapfrog": {
        "system": "vortex",
        "gamma": [1.0, -1.0, 2.0, -2.0],
        "positions": [[1.0, 1.0], [1.0, -1.0], [2.0, 1.0], [2.0, -1.0]],
        "method": "midpoint",
        "h": 0.5,
        "steps": 160,
    },
    "quadratic-zero": {
        "system": "quadratic",
        "A": [[0.0, 0.5], [-0.5, 0.0]],
        "S": [[0.0, 0.0], [0.0, 0.0]],
        "q0": [1.0, 0.5],
        "h": 0.1,
        "steps": 20,
        "h_list": [0.2, 0.1, 0.05],
    },
}


def load_config(source):
    """Config from a JSON file path or a preset name."""
    path = Path(source)
    if not path.is_file():
        if source in PRESETS:
            return ExperimentConfig.from_dict({"preset": source})
        raise ConfigError(f"no such config file or preset: {source}")
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {source}: {exc}") from exc
    return ExperimentConfig.from_dict(doc)


# -- output --------------------------------------------------------------------


def _fmt(x):
    return "%.17g" % x


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _state_header(n, name="q"):
    return [f"{name}_{i + 1}" for i in range(n)]


def _write_curve(path, times, points):
    write_csv(path, ["t"] + _state_header(points.shape[1]), np.column_stack([times, points]))


def _sampled_flow(field, q0, t_end, h, divisor):
    """Flow sampled ``CURVE_SAMPLES`` times per step, integrated at ``dt <= h / divisor``."""
    sub = max(1, math.ceil(divisor / CURVE_SAMPLES))
    n_out = CURVE_SAMPLES * max(1, round(t_end / h))
    ref = reference_solve(field, q0, t_end, t_end / (n_out * sub))
    return ref.times[::sub], ref.points[::sub]


def _plot_script(cfg, prefix, dim):
    name = Path(prefix).name
    lines = [
        f"# {cfg.system}, {cfg.method} rule, h = {cfg.h:g}",
        "set datafile separator ','",
        "set key outside",
        "set size ratio -1",
    ]
    if cfg.system == "vortex":
        plots = []
        for k in range(dim // 2):
            a, b = 2 * k + 2, 2 * k + 3
            plots.append(f"'{name}_exact.csv' every ::1 using {a}:{b} with lines dt 2 lc {k + 1} notitle")
            plots.append(f"'{name}_modified.csv' every ::1 using {a}:{b} with lines lc {k + 1} notitle")
            plots.append(f"'{name}_discrete.csv' every ::1 using {a}:{b} with points pt 7 ps 0.4 lc {k + 1} "
                         f"title 'vortex {k + 1}'")
    else:
        plots = [
            f"'{name}_exact.csv' every ::1 using 2:3 with lines dt 2 title 'exact'",
            f"'{name}_modified.csv' every ::1 using 2:3 with lines title 'modified'",
            f"'{name}_discrete.csv' every ::1 using 2:3 with points pt 7 ps 0.5 title 'discrete'",
        ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


class _Failure(Exception):
    def __init__(self, operation, exc):
        super().__init__(f"{operation} failed: {exc}")


def _run(operation, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DegenLagError as exc:
        raise _Failure(operation, exc) from exc


def _discrete(cfg, system):
    q0 = cfg.initial_state(system)
    return _run("integrate", integrate, cfg.method, system, q0, cfg.h, cfg.steps,
                cfg.starter_spec(), cfg.newton_config())


def cmd_simulate(cfg, prefix):
    system = cfg.build_system()
    traj = _discrete(cfg, system)
    q0 = traj.points[0]
    t_end = traj.t_end
    order = TruncationOrder.parse(cfg.truncation)
    exact = _run("reference_solve", _sampled_flow, lambda q: el_field(system, q),
                 q0, t_end, cfg.h, cfg.reference_dt_divisor)
    mod = _run("principal_field", _sampled_flow,
               lambda q: modified.principal_field(cfg.method, system, q, cfg.h, order),
               q0, t_end, cfg.h, cfg.reference_dt_divisor)
    _write_curve(f"{prefix}_discrete.csv", traj.times, traj.points)
    _write_curve(f"{prefix}_exact.csv", *exact)
    _write_curve(f"{prefix}_modified.csv", *mod)
    Path(f"{prefix}.gp").write_text(_plot_script(cfg, prefix, system.dim))
    print(f"wrote {prefix}_discrete.csv ({len(traj)} points), {prefix}_exact.csv, "
          f"{prefix}_modified.csv, {prefix}.gp")
    return EXIT_OK


def cmd_parasites(cfg, prefix):
    system = cfg.build_system()
    traj = _discrete(cfg, system)
    dec = _run("decompose_parasites", decompose_parasites, traj)
    n = system.dim
    write_csv(f"{prefix}_parasites.csv",
              ["t"] + _state_header(n, "x") + _state_header(n, "y") + ["amplitude"],
              np.column_stack([dec.times, dec.x, dec.y, dec.amplitude]))
    ind = [_run("parasite_growth_indicator", parasite_growth_indicator, system, x) for x in dec.x]
    write_csv(f"{prefix}_indicator.csv", ["t", "indicator"], np.column_stack([dec.times, ind]))
    print(f"wrote {prefix}_parasites.csv, {prefix}_indicator.csv; "
          f"amplitude min {dec.amplitude.min():.3e} max {dec.amplitude.max():.3e}")
    return EXIT_OK


def cmd_defect_order(cfg, prefix, h_list=None):
    hs = tuple(h_list) if h_list else cfg.h_list
    if len(hs) < 3:
        raise ConfigError("defect-order needs at least three h values (--h-list)")
    if any(not h > 0 for h in hs):
        raise ConfigError("h values must be positive")
    system = cfg.build_system()
    q0 = cfg.initial_state(system)
    t_end = cfg.t_end if cfg.t_end is not None else cfg.h * cfg.steps
    try:
        report = _run("defect_order", defect_order, cfg.method, system, cfg.truncation, q0, t_end, hs,
                      cfg.reference_dt_divisor)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [f"{_fmt(h)},{_fmt(d)}" for h, d in zip(report.h_values, report.defect_norms)]
    text = "h,defect\n" + "\n".join(rows) + f"\nslope,{_fmt(report.slope)}\n"
    with open(f"{prefix}_defect.csv", "w", newline="\n") as fh:
        fh.write(text)
    if report.degenerate:
        print("degenerate: zero defect")
    else:
        flag = "" if report.valid else " (fit rejected)"
        print(f"slope {report.slope:.4f} r^2 {report.r_squared:.6f}{flag}")
    return EXIT_OK


# -- self tests ----------------------------------------------------------------


def _suite_doubled(rng):
    sys_ = pendulum()
    worst = 0.0
    for _ in range(100):
        method = MethodId.MIDPOINT if rng.random() < 0.5 else MethodId.TRAPEZOIDAL
        h = rng.uniform(0.05, 0.5)
        xs, ys = rng.uniform(-2, 2, (3, 2)), rng.uniform(-0.5, 0.5, (3, 2))
        s = [DoubledState(x, y) for x, y in zip(xs, ys)]
        rx, ry = doubled_del_residual(method, sys_, *s, h)
        rp = del_residual(method, sys_, xs[0] - ys[0], xs[1] + ys[1], xs[2] - ys[2], h)
        rm = del_residual(method, sys_, xs[0] + ys[0], xs[1] - ys[1], xs[2] + ys[2], h)
        worst = max(worst, np.abs(rx - 0.5 * (rp + rm)).max(), np.abs(ry - 0.5 * (rp - rm)).max())
    return worst < 1e-13, worst


def _suite_toy(rng):
    sys_ = pendulum()
    worst = 0.0
    for _ in range(100):
        q = rng.uniform(-2, 2, 2)
        for method in MethodId:
            for h in (0.1, 0.35):
                gen = modified.principal_field(method, sys_, q, h, TruncationOrder.TWO)
                ref = modified.toy_principal_field_closed_form(method, sys_, q[0], q[1], h)
                worst = max(worst, np.abs(gen - ref).max())
    return worst < 1e-10, worst


def _suite_vortex(rng):
    worst = 0.0
    done = 0
    while done < 100:
        z = rng.uniform(-3, 3, 8)
        gamma = rng.uniform(-2, 2, 4)
        sys_ = PointVortexSystem(gamma)
        pos = sys_.positions(z)
        d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
        if d[np.triu_indices(4, 1)].min() < 0.1:
            continue
        a, b = el_field(sys_, z), vortex_rhs_complex(sys_, z)
        worst = max(worst, np.abs(a - b).max() / (1 + np.abs(b).max()))
        done += 1
    return worst < 1e-12, worst


SUITES = {"doubled": _suite_doubled, "toy": _suite_toy, "vortex": _suite_vortex}


def cmd_selftest(only=None):
    names = list(SUITES) if only is None else [only]
    try:
        seed = int(os.environ.get("DEGENLAG_SEED", "0"))
    except ValueError:
        print("config error: DEGENLAG_SEED must be an integer", file=sys.stderr)
        return EXIT_CONFIG
    ok = True
    for name in names:
        rng = np.random.default_rng(seed)
        try:
            passed, err = SUITES[name](rng)
        except DegenLagError as exc:
            passed, err = False, float("nan")
            print(f"{name}: error {exc}")
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'} {name} (max deviation {err:.3e})")
    return EXIT_OK if ok else EXIT_SELFTEST


# -- entry point ---------------------------------------------------------------


def _parse_h_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad --h-list {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="degenlag", description="Variational integrators for degenerate Lagrangians.")
    p.add_argument("command", choices=["simulate", "parasites", "defect-order", "selftest"])
    p.add_argument("--config", help="JSON config file or preset name (" + ", ".join(PRESETS) + ")")
    p.add_argument("--h-list", help="comma-separated step sizes for defect-order")
    p.add_argument("--only", choices=sorted(SUITES), help="run a single selftest suite")
    p.add_argument("--output", help="output prefix (overrides output_prefix)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    if args.command == "selftest":
        return cmd_selftest(args.only)
    try:
        if not args.config:
            raise ConfigError("--config is required")
        cfg = load_config(args.config)
        prefix = args.output or cfg.output_prefix
        if args.command == "simulate":
            return cmd_simulate(cfg, prefix)
        if args.command == "parasites":
            return cmd_parasites(cfg, prefix)
        h_list = _parse_h_list(args.h_list) if args.h_list else None
        return cmd_defect_order(cfg, prefix, h_list)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Failure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
