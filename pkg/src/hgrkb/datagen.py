"""Synthetic deterministic-relation-plus-noise datasets with known optimal copulas."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from hgrkb.errors import InvalidSpec, NoOracle

RELATIONS = ("linear", "quadratic", "cubic", "circular", "sin_of_square")

# base interval for x, per relation (circular draws an angle instead)
_INTERVALS = {
    "linear": (-1.0, 1.0),
    "quadratic": (-1.0, 1.0),
    "cubic": (-1.0, 1.0),
    "sin_of_square": (0.0, 1.0),
}

_FUNCTIONS = {
    "linear": lambda x: x,
    "quadratic": lambda x: x**2,
    "cubic": lambda x: x**3,
    "sin_of_square": lambda x: np.sin(4.0 * np.pi * x**2),
}

# optimal copula pairs (f applied to a, g applied to b)
COPULAS = {
    "linear": (lambda a: a, lambda b: b),
    "quadratic": (lambda a: a**2, lambda b: b),
    "cubic": (lambda a: a**3, lambda b: b),
    "circular": (lambda a: a**2, lambda b: -(b**2)),
    "sin_of_square": (lambda a: np.sin(4.0 * np.pi * a**2), lambda b: b),
}


@dataclass(frozen=True)
class SyntheticSpec:
    relation: str
    n: int = 1000
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise InvalidSpec(f"unknown relation {self.relation!r}; choose from {RELATIONS}")
        if int(self.n) != self.n or self.n < 8:
            raise InvalidSpec("n must be an integer >= 8")
        if not np.isfinite(self.noise_sigma) or self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be finite and >= 0")

    @classmethod
    def parse(cls, text: str) -> "SyntheticSpec":
        """Parse ``relation[:n=..][:sigma=..][:seed=..]``."""
        parts = text.strip().split(":")
        kwargs = {}
        for item in parts[1:]:
            if "=" not in item:
                raise InvalidSpec(f"malformed field {item!r} in {text!r}")
            key, val = item.split("=", 1)
            try:
                if key == "n":
                    kwargs["n"] = int(val)
                elif key in ("sigma", "noise_sigma"):
                    kwargs["noise_sigma"] = float(val)
                elif key == "seed":
                    kwargs["seed"] = int(val)
                else:
                    raise InvalidSpec(f"unknown field {key!r} in {text!r}")
            except ValueError as exc:
                if isinstance(exc, InvalidSpec):
                    raise
                raise InvalidSpec(f"bad value for {key!r}: {val!r}") from exc
        return cls(parts[0], **kwargs)

    def label(self) -> str:
        return f"{self.relation}:n={self.n}:sigma={self.noise_sigma!r}:seed={self.seed}"


def generate(spec: SyntheticSpec):
    """Draw ``(a, b)``; the relation is applied before noise is added."""
    rng = np.random.default_rng(spec.seed)
    if spec.relation == "circular":
        theta = rng.uniform(0.0, 2.0 * np.pi, spec.n)
        a, b = np.cos(theta), np.sin(theta)
        if spec.noise_sigma > 0:
            a = a + rng.normal(0.0, spec.noise_sigma, spec.n)
            b = b + rng.normal(0.0, spec.noise_sigma, spec.n)
        return a, b
    lo, hi = _INTERVALS[spec.relation]
    a = rng.uniform(lo, hi, spec.n)
    b = _FUNCTIONS[spec.relation](a)
    if spec.noise_sigma > 0:
        b = b + rng.normal(0.0, spec.noise_sigma, spec.n)
    return a, b


def oracle_correlation(spec: SyntheticSpec, a, b) -> float:
    """Pearson correlation after applying the relation's registered optimal copulas."""
    if spec.relation not in COPULAS:
        raise NoOracle(f"no optimal copulas registered for {spec.relation!r}")
    f, g = COPULAS[spec.relation]
    fa, gb = f(np.asarray(a, dtype=float)), g(np.asarray(b, dtype=float))
    return float(np.corrcoef(fa, gb)[0, 1])


def to_csv(a, b) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b"])
    for x, y in zip(np.asarray(a, dtype=float), np.asarray(b, dtype=float)):
        w.writerow([repr(float(x)), repr(float(y))])
    return buf.getvalue()
