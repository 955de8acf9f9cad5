"""Run configuration: flat ``key=value`` text, repeated keys for sweeps.

Every value round-trips exactly (floats are written with ``repr``).  The
config hash ignores keys that cannot change results (output paths, jobs).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

from .errors import ConfigError

COMMANDS = ("eigen", "lambda", "width", "diagram", "continue", "depin", "compare")
MODELS = ("cubic_const", "cubic_quintic")
KINDS = ("square", "hex")
FORMATS = ("csv", "json")

# keys that never affect numbers in the output
_UNHASHED = ("output", "state_output", "rung_output", "trajectory_output", "jobs", "fmt")

_SCALAR_TYPES = {
    "command": str, "model": str, "kind": str, "output": str, "fmt": str,
    "J": int, "n_max": int, "grid_n": int, "M_max": int, "skip_folds": int, "max_folds": int,
    "rungs": int, "jobs": int, "lambda_abs": float, "T": float, "dt": float,
    "side": str, "bracket_inner": float, "bracket_outer": float, "tol": float,
    "center": str, "scan_appendix": bool, "echo_metadata": bool, "L_min": float,
    "L_max": float, "n_samples": int, "state_output": str, "rung_output": str,
    "trajectory_output": str, "trajectory_r": float,
}
_LIST_KEYS = ("s", "orient")


@dataclass
class RunConfig:
    command: str
    model: str = "cubic_const"
    s: list = field(default_factory=lambda: [1.0])
    orient: list = field(default_factory=lambda: [(1, 0)])
    kind: str = "square"
    output: str | None = None
    fmt: str = "csv"
    J: int | None = None
    n_max: int | None = None
    grid_n: int = 400
    M_max: int = 3
    skip_folds: int = 4
    max_folds: int = 14
    rungs: int = 0
    jobs: int = 1
    lambda_abs: float | None = None
    T: float = 1e4
    dt: float | None = None
    side: str = "both"
    bracket_inner: float = 0.3
    bracket_outer: float = 1.5
    tol: float | None = None
    center: str = "site"
    scan_appendix: bool = False
    echo_metadata: bool = True
    L_min: float | None = None
    L_max: float | None = None
    n_samples: int = 65
    state_output: str | None = None
    rung_output: str | None = None
    trajectory_output: str | None = None
    trajectory_r: float | None = None

    def validate(self) -> "RunConfig":
        _one_of("command", self.command, COMMANDS)
        _one_of("model", self.model, MODELS)
        _one_of("kind", self.kind, KINDS)
        _one_of("fmt", self.fmt, FORMATS)
        _one_of("center", self.center, ("site", "bond"))
        _one_of("side", self.side, ("left", "right", "both"))
        if not self.s:
            raise ConfigError("s: give at least one value")
        for v in self.s:
            if not 0 < v <= 4:
                raise ConfigError(f"s={v!r}: must lie in (0, 4]")
        if not self.orient:
            raise ConfigError("orient: give at least one orientation")
        for m in self.orient:
            if len(m) != 2 or m == (0, 0):
                raise ConfigError(f"orient={m!r}: need two integers, not both zero")
        _bounded("J", self.J, 16, 200000)
        _bounded("n_max", self.n_max, 12, 200)
        _bounded("grid_n", self.grid_n, 100, 5000)
        _bounded("M_max", self.M_max, 1, 100)
        _bounded("skip_folds", self.skip_folds, 0, 1000)
        _bounded("max_folds", self.max_folds, self.skip_folds + 4, 10000)
        _bounded("rungs", self.rungs, 0, 100)
        _bounded("jobs", self.jobs, 1, 256)
        _bounded("n_samples", self.n_samples, 2, 100000)
        for name in ("lambda_abs", "T", "dt", "tol"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name}={v!r}: must be positive")
        if not 0 < self.bracket_inner < self.bracket_outer:
            raise ConfigError("bracket_inner and bracket_outer: need 0 < inner < outer "
                              "(both in units of the analytic half-width)")
        if (self.L_min is None) != (self.L_max is None):
            raise ConfigError("L_min and L_max go together")
        if self.L_min is not None and not 0 < self.L_min < self.L_max:
            raise ConfigError("L window: need 0 < L_min < L_max")
        return self

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "s":
                lines += [f"s={x!r}" for x in v]
            elif f.name == "orient":
                lines += [f"orient={a},{b}" for a, b in v]
            elif isinstance(v, bool):
                lines.append(f"{f.name}={'true' if v else 'false'}")
            elif isinstance(v, float):
                lines.append(f"{f.name}={v!r}")
            else:
                lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    def result_lines(self) -> list:
        """Config lines that can change the numbers, as echoed into output metadata."""
        return [ln for ln in self.dumps().splitlines() if ln.split("=", 1)[0] not in _UNHASHED]

    def config_hash(self) -> str:
        return hashlib.sha256("\n".join(self.result_lines()).encode()).hexdigest()[:16]


def _one_of(name, v, allowed):
    if v not in allowed:
        raise ConfigError(f"{name}={v!r}: expected one of {', '.join(allowed)}")


def _bounded(name, v, lo, hi):
    if v is not None and not lo <= v <= hi:
        raise ConfigError(f"{name}={v!r}: must lie in [{lo}, {hi}]")


def parse_orientation(text: str) -> tuple:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"orient={text!r}: expected 'm1,m2' with integers") from None
    return a, b


def _parse_scalar(key, text):
    typ = _SCALAR_TYPES[key]
    if typ is bool:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}={text!r}: expected true or false")
    try:
        return typ(text)
    except ValueError:
        raise ConfigError(f"{key}={text!r}: expected {typ.__name__}") from None


def loads(text: str) -> RunConfig:
    """Parse key=value lines; '#' starts a comment; s and orient may repeat."""
    values: dict = {}
    lists: dict = {k: [] for k in _LIST_KEYS}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {raw!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        if key == "s":
            lists["s"].append(_parse_scalar("T", val))
        elif key == "orient":
            lists["orient"].append(parse_orientation(val))
        elif key in _SCALAR_TYPES:
            if key in values:
                raise ConfigError(f"line {n}: key {key!r} given twice (only s and orient repeat)")
            values[key] = _parse_scalar(key, val)
        else:
            raise ConfigError(f"line {n}: unknown key {key!r}")
    if "command" not in values:
        raise ConfigError("missing required key 'command'")
    for k in _LIST_KEYS:
        if lists[k]:
            values[k] = lists[k]
    return RunConfig(**values).validate()


def load(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
