from dataclasses import dataclass
from enum import Enum
from functools import cache
from math import sqrt

from numpy import abs as np_abs
from numpy.random import SeedSequence, default_rng
from scipy.special import gamma

from _config import MC_SAMPLES, MC_SHARD, SEED
from _errors import InputError


class Method(Enum):
    """How an asymptotic constant was obtained."""

    GAMMA_FORMULA = "gamma_formula"
    MONTE_CARLO = "monte_carlo"
    FLUX_QUADRATURE = "flux_quadrature"


@dataclass(frozen=True, slots=True)
class AsymptoticConstant:
    """The constant c_d of the critical asymptotics."""

    d: int
    value: float
    method: Method
    stderr: float = 0.0

    def __post_init__(self) -> None:
        if self.d < 2 or not self.value > 0:
            raise InputError("c_d needs d >= 2 and a positive value")


def _check_dimension(d: int) -> float:
    """Return q = d/(d-1) after checking d >= 2."""
    if d < 2:
        raise InputError(f"c_d is defined for d >= 2, got {d}")

    return d / (d - 1)


@cache
def c_d_gamma(d: int) -> float:
    """Return d vol(B_q^d) = d 2^d Gamma(1+1/q)^d / Gamma(1+d/q),
    the total cone measure of the unit q-sphere, q = d/(d-1).
    """
    q = _check_dimension(d)
    return float(d * 2**d * gamma(1 + 1 / q) ** d / gamma(1 + d / q))


def c_d_monte_carlo(
    d: int,
    samples: int = MC_SAMPLES,
    seed: int = SEED,
    shard: int = MC_SHARD,
) -> tuple[float, float]:
    """Estimate c_d by rejection sampling of B_q^d inside [-1, 1]^d.

    Samples are drawn in shards of fixed size, each from its own child of
    the seed sequence, so the estimate depends only on (samples, seed).
    Returns the estimate and its binomial standard error.
    """
    q = _check_dimension(d)

    if samples < 10_000:
        raise InputError("Monte Carlo needs at least 10^4 samples")

    sizes = [shard] * (samples // shard) + (
        [samples % shard] if samples % shard else []
    )
    hits = 0

    for size, child in zip(sizes, SeedSequence(seed).spawn(len(sizes))):
        u = default_rng(child).uniform(-1.0, 1.0, size=(size, d))
        hits += int(((np_abs(u) ** q).sum(axis=1) <= 1.0).sum())

    frac, scale = hits / samples, d * 2**d
    return scale * frac, scale * sqrt(frac * (1 - frac) / samples)
