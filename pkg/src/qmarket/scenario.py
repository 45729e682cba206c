"""Scenario configs, experiment drivers, CSV and matrix-dump I/O."""

from __future__ import annotations

import csv
import io
import math
import os
import re
import tempfile
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dynamics
from .errors import CompletePositivityWarning, ConfigError, DimensionError
from .market_model import (
    BOUNDARY_MODES,
    HARD_WALL,
    LindbladCoefficients,
    dirac_state,
    gaussian_state,
    make_shift_operators,
    price_grid,
)
from .matrix_core import haar_random_unitary
from .metrics import MetricsRecord

CONFIG_DIR = Path(__file__).parent / "configs"

CLASSICAL = "classical"
NONCLASSICAL = "nonclassical"


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    x_min: float
    x_max: float
    dt: float
    sigma: float
    nu_u: float
    nu_d: float
    segments: tuple
    initial: tuple
    boundary_mode: str = HARD_WALL
    record_stride: int = 100
    seed: int = 0
    type2_conjugation: bool = False
    output_path: str | None = None

    def coefficients(self, mode: str) -> LindbladCoefficients:
        if mode == CLASSICAL:
            return LindbladCoefficients.from_rates(self.sigma)
        return LindbladCoefficients.from_rates(self.sigma, self.nu_u, self.nu_d)

    @property
    def total_steps(self) -> int:
        return sum(n for n, _ in self.segments)


REQUIRED = ("n", "x_min", "x_max", "dt", "sigma", "nu_u", "nu_d", "segments", "initial")
OPTIONAL = ("boundary_mode", "record_stride", "seed", "type2_conjugation", "output_path")

_INITIAL_RE = re.compile(r"^(dirac|gaussian)\s*\(\s*([^)]+?)\s*\)$")


def _parse_segments(value: str, line: int) -> tuple:
    segs = []
    for part in filter(None, (p.strip() for p in value.split(","))):
        try:
            steps, mode = (s.strip() for s in part.split(":"))
            steps = int(steps)
        except ValueError:
            raise ConfigError(f"malformed segment {part!r}; expected <steps>:<mode>", line) from None
        if mode not in (CLASSICAL, NONCLASSICAL):
            raise ConfigError(f"segment mode must be classical or nonclassical, got {mode!r}", line)
        if steps <= 0:
            raise ConfigError(f"segment step count must be positive, got {steps}", line)
        segs.append((steps, mode))
    return tuple(segs)


def _parse_initial(value: str, line: int) -> tuple:
    m = _INITIAL_RE.match(value)
    if not m:
        raise ConfigError(f"initial must be dirac(k) or gaussian(sigma0), got {value!r}", line)
    kind, arg = m.groups()
    try:
        return (kind, int(arg)) if kind == "dirac" else (kind, float(arg))
    except ValueError:
        raise ConfigError(f"malformed {kind} argument {arg!r}", line) from None


def _parse_bool(value: str, line: int) -> bool:
    v = value.lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}", line)


_CONVERTERS = {
    "n": int, "record_stride": int, "seed": int,
    "x_min": float, "x_max": float, "dt": float, "sigma": float, "nu_u": float, "nu_d": float,
}


def parse_config(text: str) -> ScenarioConfig:
    """Parse flat ``key = value`` lines (``#`` starts a comment)."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in REQUIRED and key not in OPTIONAL:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        raw[key] = (value, lineno)

    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    values = {}
    for key, (value, lineno) in raw.items():
        if key in _CONVERTERS:
            try:
                values[key] = _CONVERTERS[key](value)
            except ValueError:
                raise ConfigError(f"malformed number for {key!r}: {value!r}", lineno) from None
        elif key == "segments":
            values[key] = _parse_segments(value, lineno)
        elif key == "initial":
            values[key] = _parse_initial(value, lineno)
        elif key == "type2_conjugation":
            values[key] = _parse_bool(value, lineno)
        elif key == "boundary_mode":
            if value not in BOUNDARY_MODES:
                raise ConfigError(f"boundary_mode must be one of {BOUNDARY_MODES}, got {value!r}", lineno)
            values[key] = value
        else:
            values[key] = value or None

    def fail(key, msg):
        raise ConfigError(msg, raw[key][1])

    if values["n"] < 2:
        fail("n", "n must be >= 2")
    if values["dt"] <= 0:
        fail("dt", "dt must be positive")
    if values.get("record_stride", 1) < 1:
        fail("record_stride", "record_stride must be >= 1")
    if not values["x_min"] < values["x_max"]:
        fail("x_max", "x_min must be below x_max")
    if values["sigma"] < 0:
        fail("sigma", "sigma must be non-negative")
    kind, arg = values["initial"]
    if kind == "dirac" and not 1 <= arg <= values["n"]:
        fail("initial", f"dirac index {arg} outside 1..{values['n']}")
    if kind == "gaussian" and arg <= 0:
        fail("initial", "gaussian width must be positive")
    return ScenarioConfig(**values)


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def packaged_config(name: str) -> ScenarioConfig:
    """One of the bundled configs, e.g. ``sim1`` or ``onestep_type1``."""
    return load_config(CONFIG_DIR / f"{name}.cfg")


def initial_state(config: ScenarioConfig) -> np.ndarray:
    kind, arg = config.initial
    if kind == "dirac":
        return dirac_state(config.n, arg)
    values = price_grid(config.n, config.x_min, config.x_max)
    return gaussian_state(config.n, values, arg)


def scenario_operators(config: ScenarioConfig):
    ops = make_shift_operators(config.n, config.boundary_mode)
    if config.type2_conjugation:
        ops = ops.conjugated(haar_random_unitary(config.n, config.seed))
    return ops


@dataclass
class RunSummary:
    total_steps: int
    segment_wall_times: list = field(default_factory=list)
    cp_violations: list = field(default_factory=list)
    positivity_dips: int = 0
    min_eigenvalue: float | None = None
    max_trace_error: float = 0.0
    d2_peak_step: int | None = None
    d2_peak_value: float | None = None
    csv_path: str | None = None
    final_state_path: str | None = None


def run_scenario(config: ScenarioConfig):
    """Run the configured protocol; returns ``(records, summary, final_state)``.

    A :class:`CompletePositivityWarning` is emitted for each segment whose
    coefficients fail the complete-positivity inequality.
    """
    rho0 = initial_state(config)
    ops = scenario_operators(config)
    values = price_grid(config.n, config.x_min, config.x_max)

    cp_bad = []
    for i, (_, mode) in enumerate(config.segments):
        coeffs = config.coefficients(mode)
        ok, diag = dynamics.is_completely_positive(coeffs)
        if not ok:
            cp_bad.append(i)
            warnings.warn(
                f"segment {i + 1} ({mode}): |nu_u2|+|nu_d2| = {diag.lhs:.6g} exceeds sigma2 = {diag.rhs:.6g}"
                f" (Kossakowski eigenvalues {diag.c_eigenvalues}); continuing",
                CompletePositivityWarning,
                stacklevel=2,
            )

    summary = RunSummary(total_steps=config.total_steps, cp_violations=cp_bad)
    if not config.segments:
        return [], summary, rho0

    schedule = dynamics.StepSchedule(
        tuple((n, config.coefficients(mode)) for n, mode in config.segments), config.dt
    )
    result = dynamics.simulate(rho0, schedule, ops, config.record_stride, values)
    summary.segment_wall_times = result.segment_wall_times
    summary.max_trace_error = result.max_trace_error
    summary.min_eigenvalue = result.min_eigenvalue
    summary.positivity_dips = sum(
        1 for r in result.records if r.min_eigenvalue is not None and r.min_eigenvalue < -1e-12
    )
    peak = max(result.records, key=lambda r: r.d2_power)
    summary.d2_peak_step, summary.d2_peak_value = peak.step, peak.d2_power
    return result.records, summary, result.final


def csv_text(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MetricsRecord.header())
    for rec in records:
        w.writerow(rec.as_row())
    return buf.getvalue()


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_matrix(m) -> str:
    """One row per line, entries ``re+imj`` with 17 significant digits."""
    m = np.asarray(m, dtype=np.complex128)
    lines = [" ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row) for row in m]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = [[complex(tok) for tok in line.split()] for line in text.splitlines() if line.strip()]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise DimensionError("matrix dump is not square")
    return np.array(rows, dtype=np.complex128)


def one_step_report(config: ScenarioConfig) -> np.ndarray:
    """Post-step density matrix for a single-step config.

    With ``type2_conjugation`` the operators are first conjugated by a Haar
    unitary drawn from ``config.seed``.
    """
    if len(config.segments) != 1 or config.segments[0][0] != 1:
        raise ConfigError("one-step report needs exactly one segment of one step")
    ops = scenario_operators(config)
    coeffs = config.coefficients(config.segments[0][1])
    dynamics.warn_if_not_cp(coeffs, "one-step")
    return dynamics.euler_step(initial_state(config), coeffs, ops, config.dt)


@dataclass(frozen=True)
class OracleRow:
    dt: float
    steps: int
    max_error: float
    ratio: float | None
    order: float | None


def oracle_check(n: int, coeffs: LindbladCoefficients, t: float, dt_list, rho0=None,
                 boundary_mode: str = HARD_WALL) -> list[OracleRow]:
    """Max-entry gap between Euler and the exact propagator for each ``dt``.

    ``ratio`` and ``order`` compare each row with the previous one.
    """
    if n > dynamics.MAX_EXACT_DIM:
        raise DimensionError(f"oracle limited to n <= {dynamics.MAX_EXACT_DIM}")
    ops = make_shift_operators(n, boundary_mode)
    if rho0 is None:
        rho0 = dirac_state(n, (n + 1) // 2)
    exact = dynamics.exact_propagate_small(rho0, coeffs, ops, t)
    rows = []
    prev = None
    for dt in dt_list:
        steps = int(round(t / dt))
        if not math.isclose(steps * dt, t, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(f"t={t} is not a whole number of steps of dt={dt}")
        approx = dynamics.euler_steps(rho0, coeffs, ops, dt, steps) if steps else np.array(rho0, dtype=complex)
        err = float(np.max(np.abs(approx - exact)))
        ratio = order = None
        if prev is not None and err > 0:
            ratio = prev[1] / err
            order = math.log(ratio) / math.log(prev[0] / dt)
        rows.append(OracleRow(float(dt), steps, err, ratio, order))
        prev = (dt, err)
    return rows


def with_overrides(config: ScenarioConfig, **kw) -> ScenarioConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
