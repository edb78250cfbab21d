from dataclasses import dataclass
from logging import getLogger
from math import log, pi, sin

from numpy import (abs as np_abs, arange, concatenate, full, indices, int64,
                   ndarray, ravel_multi_index)
from numpy import log as np_log
from numpy.random import default_rng

from _config import MAX_VERTICES
from _errors import BudgetExceededError, CapacityError, InputError
from _network import (Exponent, Network, Potential, VertexValues, as_exponent,
                      dirichlet_energy, network_from_arrays)

logger = getLogger(__name__)


@dataclass(frozen=True, slots=True)
class LatticeSpec:
    """The box D_n = {|x|_inf <= n} in Z^d with exponent p."""

    d: int
    n: int
    p: Exponent

    def __post_init__(self) -> None:
        if self.d < 1 or self.n < 1:
            raise InputError(f"need d >= 1 and n >= 1, got {self.d}, {self.n}")

        object.__setattr__(self, "p", as_exponent(self.p))

    @property
    def side(self) -> int:
        """Points per axis."""
        return 2 * self.n + 1

    @property
    def vertex_count(self) -> int:
        """Number of vertices of D_n."""
        return self.side**self.d

    @property
    def q(self) -> float:
        """The norm exponent d/(d-1) of the critical case."""
        if self.d < 2:
            raise InputError("q = d/(d-1) needs d >= 2")

        return self.d / (self.d - 1)

    @property
    def critical(self) -> bool:
        """Whether p = d."""
        return self.p.p == self.d


def lattice_coordinates(spec: LatticeSpec) -> ndarray:
    """Coordinates of D_n in row-major order, one row per vertex."""
    grid = indices((spec.side,) * spec.d).reshape(spec.d, -1).T
    return (grid - spec.n).astype(int64)


def vertex_id(spec: LatticeSpec, x: ndarray) -> ndarray:
    """Row-major ids of lattice points (last axis holds coordinates)."""
    shifted = (x + spec.n).T
    return ravel_multi_index(tuple(shifted), (spec.side,) * spec.d)


def build_lattice(
    spec: LatticeSpec, max_vertices: int = MAX_VERTICES
) -> Network:
    """Build D_n with unit conductances, A = {0} and B = boundary of D_n."""
    if spec.vertex_count > max_vertices:
        raise BudgetExceededError(spec.vertex_count, max_vertices)

    coords = lattice_coordinates(spec)
    ids = arange(spec.vertex_count, dtype=int64)
    tails, heads = [], []

    for axis in range(spec.d):
        stride = spec.side ** (spec.d - 1 - axis)
        inner = ids[coords[:, axis] < spec.n]
        tails.append(inner)
        heads.append(inner + stride)

    tail, head = concatenate(tails), concatenate(heads)
    origin = int(vertex_id(spec, full(spec.d, 0)))
    sink = ids[np_abs(coords).max(axis=1) == spec.n]
    logger.info(
        "lattice d=%d n=%d: %d vertices, %d edges",
        spec.d, spec.n, ids.size, tail.size,
    )
    return network_from_arrays(
        ids, tail, head, full(tail.size, 1.0), [origin], sink.tolist(),
        coordinates=coords,
    )


def q_norm(x: ndarray, q: float) -> ndarray:
    """The l^q norm along the last axis."""
    return (np_abs(x) ** q).sum(axis=-1) ** (1 / q)


def log_profile(spec: LatticeSpec, net: Network | None = None) -> Potential:
    """The warm-start profile log(d|x|_q + 1)/log n clipped to [0, 1],
    1 on the boundary and 0 at the origin; |x|_inf/n when d = 1.
    """
    net = build_lattice(spec) if net is None else net
    x = net.coordinates if net.coordinates is not None else (
        lattice_coordinates(spec)
    )

    if spec.n == 1:
        f = full(x.shape[0], 0.0)

    elif spec.d == 1:
        f = np_abs(x[:, 0]) / spec.n

    else:
        f = np_log(spec.d * q_norm(x, spec.q) + 1) / log(spec.n)

    f = f.clip(0.0, 1.0)
    f[net.sink_mask], f[net.source_mask] = 1.0, 0.0
    return Potential(net, f)


def upper_bound_test_function(
    spec: LatticeSpec, net: Network | None = None
) -> tuple[Potential, float]:
    """Return the explicit test function of the critical case and its
    energy, an upper bound on the capacity.
    """
    if not spec.critical or spec.n < 2 or spec.d < 2:
        raise InputError("test function needs p = d >= 2 and n >= 2")

    net = build_lattice(spec) if net is None else net
    x = net.coordinates if net.coordinates is not None else (
        lattice_coordinates(spec)
    )
    raw = np_log(spec.d * q_norm(x, spec.q) + 1) / log(spec.n)

    if (raw[net.sink_mask] < 1).any():
        raise CapacityError("test function is below 1 on the boundary")

    f = log_profile(spec, net)
    return f, dirichlet_energy(net, f, spec.p)


def kappa(spec: LatticeSpec, cap: float) -> float:
    """Normalize a capacity by its regime: identity for p < d,
    (log n)^(d-1) for p = d, and n^(p-d) for p > d.
    """
    if not cap > 0:
        raise InputError(f"capacity must be positive, got {cap}")

    p, d, n = spec.p.p, spec.d, spec.n

    if p == d and n < 2:
        raise InputError("the critical normalization needs n >= 2")

    return (
        cap
        if p < d
        else log(n) ** (d - 1) * cap if p == d else n ** (p - d) * cap
    )


def default_relaxation(n: int) -> float:
    """Over-relaxation factor 2/(1 + sin(pi/(2n))) for a box of radius n."""
    return 2 / (1 + sin(pi / (2 * max(n, 1)))) if n > 1 else 1.0


def symmetry_defect(
    spec: LatticeSpec, h: VertexValues, samples: int = 200, seed: int = 0
) -> float:
    """Largest |h(x) - h(gx)| over sampled vertices x and random signed
    coordinate permutations g.
    """
    rng = default_rng(seed)
    picks = rng.integers(spec.vertex_count, size=samples)
    x = lattice_coordinates(spec)[picks]
    perms = rng.permuted(
        arange(spec.d)[None, :].repeat(samples, axis=0), axis=1
    )
    flips = rng.choice([-1, 1], size=(samples, spec.d))
    images = flips * x[arange(samples)[:, None], perms]
    v = h.values
    return float(
        np_abs(v[vertex_id(spec, x)] - v[vertex_id(spec, images)]).max()
    )
