from dataclasses import dataclass
from functools import lru_cache
from logging import getLogger
from typing import Iterable, Mapping, Sequence

from numpy import (abs as np_abs, arange, asarray, bincount, clip, float64,
                   full, int64, isfinite, maximum, minimum, ndarray, ptp,
                   searchsorted, sign, unique, zeros)
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from _config import CYCLE_LAW_TOL, NETWORK_CACHE, NODE_LAW_TOL
from _errors import (CycleLawError, DegenerateNetworkError, InputError,
                     NodeLawError)

logger = getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Exponent:
    """The exponent p of the energy, with p >= 1."""

    p: float

    def __post_init__(self) -> None:
        if not isfinite(self.p) or self.p < 1:
            raise InputError(f"exponent must satisfy p >= 1, got {self.p}")

    @property
    def conjugate(self) -> float:
        """Return p/(p-1), the exponent of the flow energy."""
        self.require_strict("conjugate exponent")
        return self.p / (self.p - 1)

    def require_strict(self, what: str) -> None:
        """Reject p = 1 for operations that divide by p - 1."""
        if self.p == 1:
            raise InputError(f"{what} needs p > 1, use the p = 1 cut instead")


def as_exponent(p: "Exponent | float") -> Exponent:
    """Accept a bare number wherever an exponent is expected."""
    return p if isinstance(p, Exponent) else Exponent(float(p))


@dataclass(frozen=True, eq=False, slots=True)
class Network:
    """A finite network with coalesced positive conductances.

    Vertices are kept as a sorted array of integer ids; edges are stored
    once, oriented from the lower id to the higher id, as index pairs into
    that array. Build instances with `make_network` or `network_from_arrays`.
    """

    ids: ndarray
    tail: ndarray
    head: ndarray
    conductance: ndarray
    source_mask: ndarray
    sink_mask: ndarray
    coordinates: ndarray | None = None

    @property
    def vertices(self) -> tuple[int, ...]:
        """Vertex ids in increasing order."""
        return tuple(int(v) for v in self.ids)

    @property
    def source(self) -> frozenset[int]:
        """The source set A."""
        return frozenset(int(v) for v in self.ids[self.source_mask])

    @property
    def sink(self) -> frozenset[int]:
        """The sink set B."""
        return frozenset(int(v) for v in self.ids[self.sink_mask])

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        """Edges as (u, v, c) with u < v."""
        return [
            (int(self.ids[i]), int(self.ids[j]), float(c))
            for i, j, c in zip(self.tail, self.head, self.conductance)
        ]

    @property
    def order(self) -> int:
        """Number of vertices."""
        return int(self.ids.size)

    @property
    def size(self) -> int:
        """Number of coalesced edges."""
        return int(self.tail.size)

    @property
    def boundary_mask(self) -> ndarray:
        """Mask of A and B together."""
        return self.source_mask | self.sink_mask

    def index(self, vertex: int) -> int:
        """Return the position of a vertex id in `ids`."""
        k = int(searchsorted(self.ids, vertex))

        if k >= self.ids.size or self.ids[k] != vertex:
            raise InputError(f"unknown vertex {vertex}")

        return k

    def edge_index(self, x: int, y: int) -> tuple[int, float]:
        """Return the edge position and the orientation sign of x -> y."""
        i, j = self.index(x), self.index(y)
        k = _edge_lookup(self).get((min(i, j), max(i, j)))

        if k is None:
            raise InputError(f"vertices {x} and {y} are not adjacent")

        return k, 1.0 if i < j else -1.0


def network_from_arrays(
    ids: Iterable[int],
    tail_ids: Sequence[int] | ndarray,
    head_ids: Sequence[int] | ndarray,
    conductance: Sequence[float] | ndarray,
    source: Iterable[int],
    sink: Iterable[int],
    coordinates: ndarray | None = None,
) -> Network:
    """Build a network from parallel edge arrays.

    Parallel edges are summed, self-loops and zero conductances are
    dropped, and the positive-conductance graph must be connected.
    """
    vertex_ids = asarray(sorted(set(int(v) for v in ids)), dtype=int64)
    c = asarray(conductance, dtype=float64)
    t_ids = asarray(tail_ids, dtype=int64)
    h_ids = asarray(head_ids, dtype=int64)

    if vertex_ids.size == 0:
        raise InputError("network has no vertices")

    if c.size and (not isfinite(c).all() or (c < 0).any()):
        raise InputError("conductances must be finite and nonnegative")

    t, h = _positions(vertex_ids, t_ids), _positions(vertex_ids, h_ids)
    keep = (c > 0) & (t != h)
    lo, hi = minimum(t[keep], h[keep]), maximum(t[keep], h[keep])
    keys, inverse = unique(lo * vertex_ids.size + hi, return_inverse=True)
    merged = bincount(inverse, weights=c[keep], minlength=keys.size)
    a, b = _mask(vertex_ids, source), _mask(vertex_ids, sink)

    if not a.any() or not b.any():
        raise InputError("source and sink sets must be nonempty")

    if (a & b).any():
        raise InputError("source and sink sets must be disjoint")

    net = Network(
        ids=_frozen(vertex_ids),
        tail=_frozen(keys // vertex_ids.size),
        head=_frozen(keys % vertex_ids.size),
        conductance=_frozen(merged.astype(float64)),
        source_mask=_frozen(a),
        sink_mask=_frozen(b),
        coordinates=None if coordinates is None else _frozen(coordinates),
    )

    if components(net) != 1:
        raise InputError("positive-conductance graph is not connected")

    logger.debug("network with %d vertices, %d edges", net.order, net.size)
    return net


def make_network(
    edges: Iterable[tuple[int, int, float]],
    source: Iterable[int],
    sink: Iterable[int],
    vertices: Iterable[int] = (),
) -> Network:
    """Build a network from (u, v, c) triples."""
    triples = list(edges)
    listed = set(vertices) | {u for u, _, _ in triples} | {
        v for _, v, _ in triples
    }
    a, b = set(source), set(sink)

    if not (a | b) <= listed:
        raise InputError("source and sink must be vertices of the network")

    return network_from_arrays(
        listed,
        [u for u, _, _ in triples],
        [v for _, v, _ in triples],
        [c for _, _, c in triples],
        a,
        b,
    )


def _positions(ids: ndarray, query: ndarray) -> ndarray:
    """Map vertex ids to positions, rejecting unknown ids."""
    k = searchsorted(ids, query).clip(max=max(ids.size - 1, 0))

    if query.size and (ids[k] != query).any():
        raise InputError("edge endpoint is not a vertex")

    return k.astype(int64)


def _mask(ids: ndarray, members: Iterable[int]) -> ndarray:
    """Boolean mask of `members` over `ids`."""
    wanted = asarray(sorted(set(int(v) for v in members)), dtype=int64)
    mask = zeros(ids.size, dtype=bool)

    if wanted.size:
        mask[_positions(ids, wanted)] = True

    return mask


def _frozen(a: ndarray) -> ndarray:
    """Return a read-only array."""
    out = asarray(a)
    out.setflags(write=False)
    return out


def components(net: Network) -> int:
    """Count connected components of the positive-conductance graph."""
    return int(connected_components(_adjacency(net), directed=False)[0])


def _adjacency(net: Network) -> coo_matrix:
    """Sparse symmetric adjacency weighted by conductance."""
    return coo_matrix(
        (net.conductance, (net.tail, net.head)), shape=(net.order,) * 2
    )


@lru_cache(maxsize=NETWORK_CACHE)
def _edge_lookup(net: Network) -> dict[tuple[int, int], int]:
    """Index of each edge by its ordered endpoint positions."""
    return {
        (int(i), int(j)): k for k, (i, j) in enumerate(zip(net.tail, net.head))
    }


@dataclass(frozen=True, eq=False, slots=True)
class VertexValues:
    """A real value per vertex of a network."""

    network: Network
    values: ndarray

    def __post_init__(self) -> None:
        values = _frozen(asarray(self.values, dtype=float64).copy())

        if values.shape != (self.network.order,):
            raise InputError("one value per vertex is required")

        object.__setattr__(self, "values", values)

    def __getitem__(self, vertex: int) -> float:
        return float(self.values[self.network.index(vertex)])

    def as_dict(self) -> dict[int, float]:
        """Return the values keyed by vertex id."""
        return dict(zip(self.network.vertices, self.values.tolist()))


class Potential(VertexValues):
    """A candidate minimizer of the Dirichlet energy."""

    __slots__ = ()

    @classmethod
    def from_mapping(
        cls, net: Network, values: Mapping[int, float]
    ) -> "Potential":
        """Build a potential from a vertex -> value mapping."""
        missing = [v for v in net.vertices if v not in values]

        if missing:
            raise InputError(f"potential undefined at vertex {missing[0]}")

        return cls(
            net, asarray([values[v] for v in net.vertices], dtype=float64)
        )

    @classmethod
    def constant(cls, net: Network, value: float) -> "Potential":
        """Return the constant potential."""
        return cls(net, full(net.order, float(value)))


@dataclass(frozen=True, eq=False, slots=True)
class Flow:
    """An antisymmetric edge function, one signed value per edge.

    The stored value is theta(u -> v) for the canonical orientation
    u < v; the reverse direction is its negation.
    """

    network: Network
    values: ndarray

    def __post_init__(self) -> None:
        values = _frozen(asarray(self.values, dtype=float64).copy())

        if values.shape != (self.network.size,):
            raise InputError("one value per edge is required")

        object.__setattr__(self, "values", values)

    def at(self, x: int, y: int) -> float:
        """Return theta(x -> y)."""
        k, s = self.network.edge_index(x, y)
        return float(self.values[k]) if s > 0 else -float(self.values[k])

    def scaled(self, factor: float) -> "Flow":
        """Return the flow multiplied by a constant."""
        return Flow(self.network, self.values * factor)

    @classmethod
    def from_mapping(
        cls, net: Network, values: Mapping[tuple[int, int], float]
    ) -> "Flow":
        """Build a flow from directed-edge values; unset edges are 0."""
        out = zeros(net.size)

        for (x, y), v in values.items():
            k, s = net.edge_index(x, y)
            out[k] = s * v

        return cls(net, out)

    @classmethod
    def zero(cls, net: Network) -> "Flow":
        """Return the zero flow."""
        return cls(net, zeros(net.size))


def _check_potential(net: Network, f: VertexValues) -> ndarray:
    """Return the values of f after checking it lives on `net`."""
    if f.values.shape != (net.order,):
        raise InputError("potential is not defined on this network")

    return f.values


def _check_flow(net: Network, theta: Flow) -> ndarray:
    """Return the values of theta after checking it lives on `net`."""
    if theta.values.shape != (net.size,):
        raise InputError("flow is not defined on this network")

    return theta.values


def differences(net: Network, f: VertexValues) -> ndarray:
    """Return f(head) - f(tail) on every edge."""
    v = _check_potential(net, f)
    return v[net.head] - v[net.tail]


def dirichlet_energy(
    net: Network, f: VertexValues, p: Exponent | float
) -> float:
    """Return the sum over edges of c |f(u) - f(v)|^p."""
    e = as_exponent(p)
    return float((net.conductance * np_abs(differences(net, f)) ** e.p).sum())


def dirichlet_energy_by_vertex(
    net: Network, f: VertexValues, p: Exponent | float
) -> float:
    """Return the same energy as half the sum over vertices of the
    sum over neighbours.
    """
    e = as_exponent(p)
    term = net.conductance * np_abs(differences(net, f)) ** e.p
    per_vertex = bincount(net.tail, term, net.order) + bincount(
        net.head, term, net.order
    )
    return float(per_vertex.sum() / 2)


def thomson_energy(net: Network, theta: Flow, p: Exponent | float) -> float:
    """Return the sum over edges of r^(1/(p-1)) |theta|^(p/(p-1))."""
    e = as_exponent(p)
    e.require_strict("thomson energy")
    v = _check_flow(net, theta)
    return float(
        (
            net.conductance ** (-1 / (e.p - 1)) * np_abs(v) ** e.conjugate
        ).sum()
    )


def node_residual(net: Network, theta: Flow) -> VertexValues:
    """Return the net outflow sum_y theta(x -> y) at every vertex."""
    v = _check_flow(net, theta)
    return VertexValues(
        net,
        bincount(net.tail, v, net.order) - bincount(net.head, v, net.order),
    )


def ohm_drop(theta: ndarray, conductance: ndarray, p: float) -> ndarray:
    """Return r^(1/(p-1)) theta / |theta|^((p-2)/(p-1)), 0 where theta = 0."""
    return sign(theta) * (np_abs(theta) / conductance) ** (1 / (p - 1))


def cycle_residual(
    net: Network, theta: Flow, p: Exponent | float, cycle: Sequence[int]
) -> float:
    """Return the cycle-law sum along a closed vertex sequence."""
    e = as_exponent(p)
    e.require_strict("cycle law")
    v = _check_flow(net, theta)

    if len(cycle) < 2 or cycle[0] != cycle[-1]:
        raise InputError("cycle must start and end at the same vertex")

    total = 0.0

    for x, y in zip(cycle, cycle[1:]):
        k, s = net.edge_index(x, y)
        total += float(
            ohm_drop(
                asarray([s * v[k]]), net.conductance[k : k + 1], e.p
            )[0]
        )

    return total


def current_from_potential(
    net: Network, h: VertexValues, p: Exponent | float, flat: float = 0.0
) -> Flow:
    """Return I(x -> y) = c |h(y) - h(x)|^(p-2) (h(y) - h(x)).

    Edges whose potential difference is at most flat carry no current.
    """
    e = as_exponent(p)
    e.require_strict("current flow")
    d = differences(net, h)
    d[np_abs(d) <= flat] = 0.0
    return Flow(net, net.conductance * sign(d) * np_abs(d) ** (e.p - 1))


def harmonic_residual(
    net: Network, h: VertexValues, p: Exponent | float
) -> VertexValues:
    """Return the left side of the p-harmonic condition at every vertex."""
    return node_residual(net, current_from_potential(net, h, p))


def potential_from_flow(
    net: Network,
    theta: Flow,
    p: Exponent | float,
    anchor: int,
    anchor_value: float = 0.0,
    tol: float = CYCLE_LAW_TOL,
) -> Potential:
    """Integrate the Ohm drops of theta along a spanning tree.

    Every non-tree edge closes one fundamental cycle; the worst cycle
    residual above `tol` is reported as a CycleLawError.
    """
    e = as_exponent(p)
    e.require_strict("potential of a flow")
    v = _check_flow(net, theta)
    root = net.index(anchor)
    drop = ohm_drop(v, net.conductance, e.p)
    order, parent = breadth_first_order(
        _adjacency(net), root, directed=False, return_predecessors=True
    )
    via = _edge_lookup(net)
    h = zeros(net.order)
    h[root] = anchor_value
    tree = zeros(net.size, dtype=bool)

    for x in order[1:]:
        u = int(parent[x])
        k = via[(min(u, int(x)), max(u, int(x)))]
        tree[k] = True
        h[x] = h[u] + (drop[k] if u < x else -drop[k])

    loops = arange(net.size)[~tree]
    misfit = h[net.tail[loops]] + drop[loops] - h[net.head[loops]]

    if misfit.size and np_abs(misfit).max() > tol:
        worst = int(np_abs(misfit).argmax())
        cycle = _fundamental_cycle(
            net, parent, int(net.tail[loops[worst]]),
            int(net.head[loops[worst]]),
        )
        raise CycleLawError(cycle, float(misfit[worst]))

    return Potential(net, h)


def _fundamental_cycle(
    net: Network, parent: ndarray, u: int, v: int
) -> list[int]:
    """Return the cycle u -> v -> (tree path) -> u as vertex ids."""
    up_u, up_v = _tree_path(parent, u), _tree_path(parent, v)
    shared = set(up_u) & set(up_v)
    meet = next(x for x in up_u if x in shared)
    left = up_u[: up_u.index(meet) + 1]
    right = up_v[: up_v.index(meet)]
    walk = [u] + [v] + right[1:] + [meet] + list(reversed(left[1:-1])) + [u]
    compact = [walk[0]] + [b for a, b in zip(walk, walk[1:]) if a != b]
    return [int(net.ids[x]) for x in compact]


def _tree_path(parent: ndarray, x: int) -> list[int]:
    """Return x and its ancestors up to the root."""
    path = [x]

    while parent[path[-1]] >= 0:
        path.append(int(parent[path[-1]]))

    return path


def check_node_law(
    net: Network, theta: Flow, tol: float = NODE_LAW_TOL
) -> tuple[float, float]:
    """Validate the node law off A and B; return (out of A, into B).

    The tolerance is relative to the larger of the two boundary fluxes.
    """
    res = node_residual(net, theta).values
    out, into = float(res[net.source_mask].sum()), -float(
        res[net.sink_mask].sum()
    )
    inner = res.copy()
    inner[net.boundary_mask] = 0.0
    scale = max(abs(out), abs(into)) or 1.0

    if inner.size and np_abs(inner).max() > tol * scale:
        k = int(np_abs(inner).argmax())
        raise NodeLawError(int(net.ids[k]), float(inner[k]))

    return out, into


def strength(net: Network, theta: Flow, tol: float = NODE_LAW_TOL) -> float:
    """Return the total flux out of A of a flow from A to B."""
    return check_node_law(net, theta, tol)[0]


def effective_resistance(
    net: Network, h: VertexValues, p: Exponent | float
) -> float:
    """Return |h(b)-h(a)|^(p-2) (h(b)-h(a)) / ||I|| for a p-harmonic h
    that is constant on A and on B.
    """
    e = as_exponent(p)
    v = _check_potential(net, h)
    lo, hi = v[net.source_mask], v[net.sink_mask]

    if ptp(lo) or ptp(hi):
        raise InputError("potential must be constant on A and on B")

    drop = float(hi[0] - lo[0])
    flux = strength(net, current_from_potential(net, h, e), tol=1e-6)

    if flux == 0:
        raise DegenerateNetworkError("current flow has zero strength")

    return float(sign(drop) * abs(drop) ** (e.p - 1)) / flux


def truncate(
    f: VertexValues, low: float = 0.0, high: float = 1.0
) -> Potential:
    """Clip a potential to [low, high]."""
    return Potential(f.network, clip(f.values, low, high))
