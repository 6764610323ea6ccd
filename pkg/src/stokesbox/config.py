"""Run configuration: flat dotted-key text format with hard validation.

The config format is intentionally flat (``disc.N = 12`` style lines, ``#``
comments).  Unknown keys are hard errors so typos cannot silently fall back
to defaults; every violated constraint is collected and reported together.

Forcing modes are written as semicolon-separated entries
``component:index:amplitude:profile``, e.g. ``1:(1,1,1):1.0:const`` or
``2:(2,1,1):0.5:sinusoid(3.0)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = ["RunConfig", "ForcingMode", "ConfigError", "parse_config", "DEFAULTS"]


class ConfigError(ValueError):
    """Raised with the full list of config violations."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


@dataclass(frozen=True)
class ForcingMode:
    component: int  # 1..3
    index: tuple[int, int, int]
    amplitude: float
    profile: str  # const | linear | sinusoid
    omega: float = 0.0


@dataclass
class RunConfig:
    lengths: tuple[float, float, float] = (1.0, 1.0, 1.0)
    rho: float = 1.0
    n_modes: int = 12
    grid_points: int = 32
    time_steps: int = 128
    t_final: float = 0.5
    forcing_kind: str = "modes"  # modes | manufactured | random
    forcing_modes: tuple[ForcingMode, ...] = (
        ForcingMode(1, (1, 1, 1), 1.0, "const"),
    )
    seed: int = 2024
    suites: tuple[str, ...] = (
        "kernels",
        "consistency",
        "corrector_heat",
        "corrector_inverse_laplacian",
        "integral_equation",
        "pressure_poisson",
        "divergence",
        "manufactured",
        "estimate",
        "integrability",
    )
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "out"


DEFAULTS = RunConfig()

KNOWN_SUITES = set(DEFAULTS.suites)

_MODE_RE = re.compile(
    r"^(?P<comp>[123]):\((?P<i1>\d+),(?P<i2>\d+),(?P<i3>\d+)\):"
    r"(?P<amp>[-+0-9.eE]+):(?P<prof>const|linear|sinusoid\(([-+0-9.eE]+)\))$"
)


def _parse_mode(text: str, problems: list[str]) -> ForcingMode | None:
    m = _MODE_RE.match(text.strip())
    if not m:
        problems.append(f"malformed forcing mode entry {text.strip()!r}")
        return None
    profile = m.group("prof")
    omega = 0.0
    if profile.startswith("sinusoid"):
        omega = float(profile[len("sinusoid(") : -1])
        profile = "sinusoid"
    return ForcingMode(
        int(m.group("comp")),
        (int(m.group("i1")), int(m.group("i2")), int(m.group("i3"))),
        float(m.group("amp")),
        profile,
        omega,
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate flat dotted-key configuration text.

    Raises ConfigError listing every violated invariant; unknown keys are
    errors.
    """
    cfg = RunConfig()
    problems: list[str] = []
    seen: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen[key] = value

    def grab_float(key, problems):
        try:
            return float(seen.pop(key))
        except ValueError:
            problems.append(f"malformed number for {key!r}: {seen.pop(key, '')!r}")
            return None

    def grab_int(key, problems):
        raw = seen.pop(key)
        try:
            return int(raw)
        except ValueError:
            problems.append(f"malformed integer for {key!r}: {raw!r}")
            return None

    if "domain.lengths" in seen:
        parts = seen.pop("domain.lengths").split(",")
        try:
            lengths = tuple(float(p) for p in parts)
            if len(lengths) != 3:
                problems.append("domain.lengths needs exactly 3 comma-separated values")
            else:
                cfg.lengths = lengths
        except ValueError:
            problems.append("domain.lengths: malformed number")
    if "physics.rho" in seen:
        v = grab_float("physics.rho", problems)
        if v is not None:
            cfg.rho = v
    for key, attr in (
        ("disc.N", "n_modes"),
        ("disc.M", "grid_points"),
        ("disc.K", "time_steps"),
    ):
        if key in seen:
            v = grab_int(key, problems)
            if v is not None:
                setattr(cfg, attr, v)
    if "disc.t_final" in seen:
        v = grab_float("disc.t_final", problems)
        if v is not None:
            cfg.t_final = v
    if "forcing.kind" in seen:
        kind = seen.pop("forcing.kind")
        if kind not in ("modes", "manufactured", "random"):
            problems.append(f"forcing.kind must be modes|manufactured|random, got {kind!r}")
        else:
            cfg.forcing_kind = kind
    if "forcing.modes" in seen:
        entries = [e for e in seen.pop("forcing.modes").split(";") if e.strip()]
        modes = [_parse_mode(e, problems) for e in entries]
        if all(m is not None for m in modes):
            cfg.forcing_modes = tuple(modes)
    if "forcing.seed" in seen:
        v = grab_int("forcing.seed", problems)
        if v is not None:
            cfg.seed = v
    if "suites" in seen:
        suites = tuple(s.strip() for s in seen.pop("suites").split(",") if s.strip())
        unknown = [s for s in suites if s not in KNOWN_SUITES]
        for s in unknown:
            problems.append(f"unknown suite {s!r}")
        if not unknown:
            cfg.suites = suites
    if "output.dir" in seen:
        cfg.output_dir = seen.pop("output.dir")
    for key in [k for k in seen if k.startswith("tolerances.")]:
        name = key[len("tolerances.") :]
        try:
            cfg.tolerances[name] = float(seen.pop(key))
        except ValueError:
            problems.append(f"malformed number for {key!r}")

    for key in seen:
        problems.append(f"unknown key {key!r}")

    # invariants
    if any(length <= 0 for length in cfg.lengths):
        problems.append("domain.lengths must all be positive")
    if cfg.rho <= 0:
        problems.append("physics.rho must be positive")
    if cfg.n_modes < 1:
        problems.append("disc.N must be >= 1")
    if cfg.grid_points < 2 * cfg.n_modes:
        problems.append(
            f"M >= 2N violated: M={cfg.grid_points}, N={cfg.n_modes}"
        )
    if cfg.time_steps < 2:
        problems.append("disc.K must be >= 2")
    if cfg.t_final <= 0:
        problems.append("disc.t_final must be positive")
    for m in cfg.forcing_modes:
        if any(i < 1 for i in m.index):
            problems.append(f"mode index {m.index} has entries < 1")
        elif any(i > cfg.n_modes for i in m.index):
            problems.append(
                f"mode index {m.index} exceeds the truncation N={cfg.n_modes}"
            )
    if problems:
        raise ConfigError(problems)
    return cfg
