"""Flat ``key = value`` run configuration with exact pi-fraction literals.

Angle values accept ``pi`` multiples so that grid positions like ``0.79pi``
parse to exactly ``0.79 * math.pi`` with no decimal drift: ``pi``, ``-pi``,
``0.79pi``, ``pi/2``, ``-pi/4``, ``3pi/2`` are all valid, as are plain
numbers (radians). The writer emits plain numbers at 17 significant digits,
because re-deriving a pi coefficient from a float can shift the value by one
ulp and the round trip parse(write(config)) == config must be exact.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Per-angle contrast entries use bracketed keys: ``visibility[pi/2] = 0.73``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .apparatus import (
    DEFAULT_MEAN_RATE,
    REFERENCE_CONTRASTS,
    REFERENCE_PHASE_OFFSET,
    ApparatusModel,
)
from .errors import ConfigError
from .montecarlo import DEFAULT_ALPHAS, DEFAULT_CHI_POINTS, DEFAULT_REPETITIONS, check_seed

_PI_LITERAL = re.compile(
    r"""^(?P<sign>[+-]?)
        (?P<coef>\d+(?:\.\d*)?|\.\d+)?
        pi
        (?:/(?P<div>\d+(?:\.\d*)?))?$""",
    re.VERBOSE,
)


def parse_angle(token: str) -> float:
    """Parse a radian value, accepting exact pi-fraction literals."""
    token = token.strip().lower().replace(" ", "")
    m = _PI_LITERAL.match(token)
    if m:
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        if m.group("sign") == "-":
            coef = -coef
        value = coef * math.pi
        if m.group("div"):
            div = float(m.group("div"))
            if div == 0.0:
                raise ConfigError(f"division by zero in angle literal {token!r}")
            value /= div
        return value
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"cannot parse angle {token!r}") from None


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs: apparatus, scan shape, seed, output.

    ``sign_convention`` is the negated CHSH term index 0..3, or None for the
    maximum-violation choice (negate the most negative term). ``seed`` has no
    default on purpose: every stochastic run states its seed explicitly.
    """

    seed: int
    mean_rate: float = DEFAULT_MEAN_RATE
    default_visibility: float = 0.73
    visibilities: tuple[tuple[float, float], ...] = REFERENCE_CONTRASTS
    phase_offset: float = REFERENCE_PHASE_OFFSET
    drift_sigma: float = 0.0
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    chi_points: int = DEFAULT_CHI_POINTS
    repetitions: int = DEFAULT_REPETITIONS
    alpha1: float = 0.0
    alpha2: float = math.pi / 2.0
    chi1: float = 0.79 * math.pi
    chi2: float = 1.29 * math.pi
    out_dir: str = "out"
    sign_convention: int | None = None

    def __post_init__(self):
        check_seed(self.seed)
        if self.chi_points < 1:
            raise ConfigError(f"chi_points must be positive, got {self.chi_points}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be positive, got {self.repetitions}")
        if self.sign_convention is not None and self.sign_convention not in (0, 1, 2, 3):
            raise ConfigError(
                f"sign_convention must be 0..3 or auto, got {self.sign_convention!r}"
            )
        # Apparatus validation happens eagerly so bad values fail at load time.
        self.apparatus_model()

    def apparatus_model(self) -> ApparatusModel:
        return ApparatusModel(
            mean_rate=self.mean_rate,
            visibility_map=self.visibilities,
            default_visibility=self.default_visibility,
            phase_offset=self.phase_offset,
            drift_sigma=self.drift_sigma,
        )

    def chi_grid(self) -> tuple[float, ...]:
        n = self.chi_points
        return tuple(2.0 * math.pi * k / n for k in range(n))

    def canonical_text(self) -> str:
        """The configuration's identity: every field that influences results,
        in a fixed order. Excludes ``out_dir``, so the same run written to two
        directories hashes identically in the manifests."""
        lines = [
            f"seed = {self.seed}",
            f"mean_rate = {_fmt(self.mean_rate)}",
            f"default_visibility = {_fmt(self.default_visibility)}",
        ]
        for alpha, v in self.visibilities:
            lines.append(f"visibility[{_fmt(alpha)}] = {_fmt(v)}")
        lines += [
            f"phase_offset = {_fmt(self.phase_offset)}",
            f"drift_sigma = {_fmt(self.drift_sigma)}",
            "alphas = " + ", ".join(_fmt(a) for a in self.alphas),
            f"chi_points = {self.chi_points}",
            f"repetitions = {self.repetitions}",
            f"alpha1 = {_fmt(self.alpha1)}",
            f"alpha2 = {_fmt(self.alpha2)}",
            f"chi1 = {_fmt(self.chi1)}",
            f"chi2 = {_fmt(self.chi2)}",
            "sign_convention = "
            + ("auto" if self.sign_convention is None else str(self.sign_convention)),
        ]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        return self.canonical_text() + f"out_dir = {self.out_dir}\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="ascii")


_ANGLE_KEYS = {"phase_offset", "alpha1", "alpha2", "chi1", "chi2", "drift_sigma"}
_FLOAT_KEYS = {"mean_rate", "default_visibility"}
_INT_KEYS = {"seed", "chi_points", "repetitions"}


def config_from_text(text: str, *, require_seed: bool = True) -> RunConfig:
    values: dict = {}
    visibilities: list[tuple[float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key.startswith("visibility[") and key.endswith("]"):
                angle = parse_angle(key[len("visibility[") : -1])
                visibilities.append((angle, float(value)))
            elif key in _ANGLE_KEYS:
                values[key] = parse_angle(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key == "alphas":
                values[key] = tuple(parse_angle(tok) for tok in value.split(",") if tok.strip())
            elif key == "out_dir":
                values[key] = value
            elif key == "sign_convention":
                values[key] = None if value.lower() == "auto" else int(value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if visibilities:
        values["visibilities"] = tuple(visibilities)
    if "seed" not in values:
        if require_seed:
            raise ConfigError("config must set a seed (no silent nondeterminism)")
        values["seed"] = 0
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, *, require_seed: bool = True) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_text(text, require_seed=require_seed)
