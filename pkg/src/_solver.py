from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from logging import getLogger
from math import ceil, log2

from networkx import (Graph, biconnected_components, greedy_color,
                      is_bipartite)
from networkx.algorithms.bipartite import color as bipartite_color
from numpy import (abs as np_abs, argsort, arange, bincount, clip, concatenate,
                   float64, full, inf, int64, isin, ndarray, sign, where,
                   zeros)

from _config import (BISECTION_TOL, BRACKET_SLACK, MAX_SWEEPS, NETWORK_CACHE,
                     NODE_LAW_TOL, RELAXATION, TOL_ENERGY, TOL_RESIDUAL)
from _errors import (BracketError, DegenerateNetworkError, InputError,
                     NodeLawError)
from _network import (Exponent, Flow, Network, Potential, VertexValues,
                      as_exponent, check_node_law, current_from_potential,
                      dirichlet_energy, thomson_energy)

logger = getLogger(__name__)


class WarmStart(Enum):
    """Initial potential on the free vertices."""

    ZERO = "zero"
    LOG_PROFILE = "log_profile"
    USER = "user"


@dataclass(frozen=True, slots=True)
class SolverConfig:
    """Stopping rules and warm start of the relaxation solver."""

    tol_residual: float = TOL_RESIDUAL
    tol_energy: float = TOL_ENERGY
    max_sweeps: int = MAX_SWEEPS
    bisection_tol: float = BISECTION_TOL
    warm_start: WarmStart = WarmStart.ZERO
    relaxation: float = RELAXATION

    def __post_init__(self) -> None:
        if min(self.tol_residual, self.tol_energy, self.bisection_tol) <= 0:
            raise InputError("solver tolerances must be positive")

        if self.max_sweeps < 1:
            raise InputError("max_sweeps must be at least 1")

        if not 1.0 <= self.relaxation < 2.0:
            raise InputError("relaxation must lie in [1, 2)")


@dataclass(frozen=True, slots=True)
class CapacityReport:
    """A capacity together with the bounds that certify it."""

    capacity: float
    lower_bound: float
    upper_bound: float
    duality_gap: float
    sweeps: int
    max_residual: float
    converged: bool = True
    lower_certified: bool = False
    flow_lower_bound: float | None = None
    energy_trace: tuple[float, ...] = field(default=(), repr=False)


@lru_cache(maxsize=NETWORK_CACHE)
def neighbour_table(net: Network) -> tuple[ndarray, ndarray]:
    """Return padded (vertex, degree) tables of neighbours and
    conductances; padding points at the vertex itself with conductance 0.
    """
    ends = concatenate([net.tail, net.head])
    others = concatenate([net.head, net.tail])
    c = concatenate([net.conductance, net.conductance])
    order = argsort(ends, kind="stable")
    ends, others, c = ends[order], others[order], c[order]
    degree = bincount(ends, minlength=net.order)
    width = int(degree.max(initial=0)) or 1
    start = concatenate([[0], degree.cumsum()[:-1]])
    slot = arange(ends.size) - start[ends]
    nbr = arange(net.order)[:, None].repeat(width, axis=1)
    cond = zeros((net.order, width))
    nbr[ends, slot] = others
    cond[ends, slot] = c
    nbr.setflags(write=False)
    cond.setflags(write=False)
    return nbr, cond


@lru_cache(maxsize=NETWORK_CACHE)
def color_classes(net: Network) -> tuple[ndarray, ...]:
    """Split the free vertices into classes with no internal edges.

    Lattices use the parity of the coordinate sum (red/black); other
    networks use a bipartite colouring when one exists and a greedy
    colouring otherwise. Each class is in increasing vertex order.
    """
    free = ~net.boundary_mask

    if net.coordinates is not None:
        parity = net.coordinates.sum(axis=1) % 2
        labels = parity.astype(int64)

    else:
        g = Graph()
        g.add_nodes_from(range(net.order))
        g.add_edges_from(zip(net.tail.tolist(), net.head.tolist()))
        colouring = (
            bipartite_color(g)
            if is_bipartite(g)
            else greedy_color(g, strategy="largest_first")
        )
        labels = zeros(net.order, dtype=int64)
        labels[list(colouring)] = list(colouring.values())

    return tuple(
        arange(net.order)[free & (labels == k)]
        for k in range(int(labels.max(initial=0)) + 1)
        if (free & (labels == k)).any()
    )


@lru_cache(maxsize=NETWORK_CACHE)
def core_anchor(net: Network) -> ndarray:
    """Map every vertex to the vertex of the A-B core it hangs off.

    With A and B each merged into one vertex and joined by an extra edge,
    the core is the biconnected block holding that edge: the vertices on
    some simple path from A to B. Every other piece hangs off a single
    core vertex, carries no current at the optimum and takes the value of
    its attachment point. Boxes are all core.
    """
    anchor = arange(net.order)

    if net.coordinates is None:
        s, t = net.order, net.order + 1
        merged = where(net.source_mask, s, where(net.sink_mask, t, anchor))
        g = Graph(
            [
                (u, v)
                for u, v in zip(merged[net.tail].tolist(),
                                merged[net.head].tolist())
                if u != v
            ]
        )
        g.add_edge(s, t)
        block = next(b for b in biconnected_components(g) if {s, t} <= b)
        core = net.boundary_mask | isin(anchor, list(block))
        adjacency = Graph(list(zip(net.tail.tolist(), net.head.tolist())))
        queue = deque(core.nonzero()[0].tolist())

        while queue:
            x = queue.popleft()

            for y in adjacency[x]:
                if not core[y]:
                    core[y], anchor[y] = True, anchor[x]
                    queue.append(y)

    anchor.setflags(write=False)
    return anchor


def _flux(values: ndarray, cond: ndarray, t: ndarray, p: float) -> ndarray:
    """Row sums of c |v - t|^(p-2) (v - t)."""
    d = values - t[:, None]
    return (cond * sign(d) * np_abs(d) ** (p - 1)).sum(axis=1)


def _local_energy(
    values: ndarray, cond: ndarray, t: ndarray, p: float
) -> ndarray:
    """Row sums of c |v - t|^p."""
    return (cond * np_abs(values - t[:, None]) ** p).sum(axis=1)


def _bracket(values: ndarray, cond: ndarray) -> tuple[ndarray, ndarray]:
    """Smallest and largest neighbour value of each row."""
    present = cond > 0
    return (
        where(present, values, inf).min(axis=1),
        where(present, values, -inf).max(axis=1),
    )


def solve_nodes(
    values: ndarray, cond: ndarray, p: float, tol: float
) -> ndarray:
    """Solve the scalar p-harmonic equation for a batch of vertices.

    Each row holds the neighbour values and conductances of one vertex.
    The flux is strictly decreasing in t, so bisection on the neighbour
    range converges for every p > 1; p = 2 is the weighted mean.
    """
    if p == 2:
        return (cond * values).sum(axis=1) / cond.sum(axis=1)

    lo, hi = _bracket(values, cond)
    width = float((hi - lo).max(initial=0.0))
    steps = ceil(log2(width / tol)) if width > tol else 0

    for _ in range(steps):
        mid = (lo + hi) / 2
        up = _flux(values, cond, mid, p) > 0
        lo, hi = where(up, mid, lo), where(up, hi, mid)

    return (lo + hi) / 2


def node_update(
    net: Network,
    h: VertexValues,
    x: int,
    p: Exponent | float,
    bisection_tol: float = BISECTION_TOL,
) -> float:
    """Return the value at x that makes h p-harmonic there."""
    e = as_exponent(p)
    e.require_strict("node update")
    nbr, cond = neighbour_table(net)
    k = net.index(x)

    if not (cond[k] > 0).any():
        raise InputError(f"vertex {x} has no neighbour")

    return float(
        solve_nodes(h.values[nbr[k : k + 1]], cond[k : k + 1], e.p,
                    bisection_tol)[0]
    )


def max_free_residual(
    net: Network, h: ndarray, p: float, flat: float = 0.0
) -> float:
    """Largest |p-harmonic residual| over vertices outside A and B.

    Differences of at most flat count as 0, as in the current flow.
    """
    nbr, cond = neighbour_table(net)
    free = ~net.boundary_mask

    if not free.any():
        return 0.0

    d = h[nbr[free]] - h[free][:, None]
    d[np_abs(d) <= flat] = 0.0
    r = (cond[free] * sign(d) * np_abs(d) ** (p - 1)).sum(axis=1)
    return float(np_abs(r).max())


def _sweep(
    h: ndarray,
    classes: tuple[ndarray, ...],
    nbr: ndarray,
    cond: ndarray,
    p: float,
    cfg: SolverConfig,
) -> float:
    """One relaxation sweep over all colour classes, in place; return the
    largest change of a value.
    """
    step = 0.0

    for nodes in classes:
        values, c = h[nbr[nodes]], cond[nodes]
        old = h[nodes]
        t = solve_nodes(values, c, p, cfg.bisection_tol)

        if cfg.relaxation != 1.0:
            lo, hi = _bracket(values, c)
            over = clip(old + cfg.relaxation * (t - old), lo, hi)
            keep = _local_energy(values, c, over, p) <= _local_energy(
                values, c, old, p
            )
            t = where(keep, over, t)

        step = max(step, float(np_abs(t - old).max(initial=0.0)))
        h[nodes] = t

    return step


def solve_dirichlet(
    net: Network,
    p: Exponent | float,
    cfg: SolverConfig = SolverConfig(),
    initial: VertexValues | None = None,
    boundary: tuple[float, float] = (0.0, 1.0),
) -> tuple[Potential, CapacityReport]:
    """Minimize the Dirichlet energy with h = low on A and h = high on B.

    Nonlinear Gauss-Seidel: every free vertex in turn is set to the exact
    minimizer of the energy in its own value, one colour class at a time.
    The capacity is the minimal energy divided by (high - low)^p.
    """
    e = as_exponent(p)
    e.require_strict("Dirichlet solver")
    low, high = boundary

    if high == low:
        raise InputError("boundary values on A and B must differ")

    if cfg.warm_start is not WarmStart.ZERO and initial is None:
        raise InputError(
            f"{cfg.warm_start.value} warm start needs a potential"
        )

    h = (
        full(net.order, float(low))
        if cfg.warm_start is WarmStart.ZERO or initial is None
        else initial.values.astype(float64)
    )
    h[net.source_mask], h[net.sink_mask] = low, high
    nbr, cond = neighbour_table(net)
    classes = color_classes(net)
    anchor = core_anchor(net)
    core = anchor == arange(net.order)
    hanging = not core.all()

    if hanging:
        cond = where(core[:, None] & core[nbr], cond, 0.0)
        classes = tuple(c[core[c]] for c in classes if core[c].any())
        h = h[anchor]

    logger.info(
        "solving p=%g on %d vertices, %d edges, %d colours, warm start %s, "
        "%d off every A-B path",
        e.p, net.order, net.size, len(classes), cfg.warm_start.value,
        int((~core).sum()),
    )

    energy = dirichlet_energy(net, Potential(net, h), e)
    trace: list[float] = []
    scale = abs(high - low)
    flat = cfg.bisection_tol * scale
    residual = max_free_residual(net, h, e.p, flat)
    converged, sweeps = residual <= cfg.tol_residual, 0

    while not converged and sweeps < cfg.max_sweeps:
        step = _sweep(h, classes, nbr, cond, e.p, cfg)
        sweeps += 1

        if hanging:
            h = h[anchor]

        previous, energy = energy, dirichlet_energy(
            net, Potential(net, h), e
        )
        trace.append(energy)
        residual = max_free_residual(net, h, e.p, flat)
        converged = (
            residual <= cfg.tol_residual
            or step <= cfg.tol_residual * scale
            or previous - energy <= cfg.tol_energy * energy
        )

        if sweeps % 1000 == 0:
            logger.debug(
                "sweep %d: energy %.15g, residual %.3e",
                sweeps, energy, residual,
            )

    if not converged:
        logger.warning(
            "no convergence after %d sweeps, residual %.3e", sweeps, residual
        )

    unit = Potential(net, (h - low) / (high - low))
    cap = energy / scale**e.p
    slack = max(cfg.tol_residual, residual) if converged else cfg.tol_residual
    slack /= cap * scale ** (e.p - 1)
    report = certify(
        net, e, unit, tol=max(NODE_LAW_TOL, 10 * slack), flat=flat / scale
    )
    return Potential(net, h), CapacityReport(
        capacity=cap,
        lower_bound=report.lower_bound,
        upper_bound=report.upper_bound,
        duality_gap=report.duality_gap,
        sweeps=sweeps,
        max_residual=residual,
        converged=converged,
        lower_certified=report.lower_certified,
        energy_trace=tuple(trace),
    )


def thomson_lower_bound(
    net: Network,
    p: Exponent | float,
    theta: Flow,
    tol: float = NODE_LAW_TOL,
) -> float:
    """Return thomson_energy(theta / ||theta||)^-(p-1), a lower bound on
    the capacity for any valid flow from A to B.
    """
    e = as_exponent(p)
    e.require_strict("Thomson bound")
    out, _ = check_node_law(net, theta, tol)

    if out == 0:
        raise DegenerateNetworkError("flow has zero strength")

    return float(thomson_energy(net, theta.scaled(1 / out), e) ** -(e.p - 1))


def checked_lower(
    lower: float, upper: float, slack: float = BRACKET_SLACK
) -> float:
    """Return lower clipped to upper; raise when it is above upper by more
    than the relative slack.
    """
    if lower > upper * (1 + slack):
        raise BracketError(lower, upper)

    return min(lower, upper)


def certify(
    net: Network,
    p: Exponent | float,
    h: VertexValues,
    tol: float = NODE_LAW_TOL,
    flat: float = BISECTION_TOL,
) -> CapacityReport:
    """Bracket the capacity using a feasible potential and its current.

    The energy of h is the upper bound. The normalized current of h is a
    unit flow only when h is close to p-harmonic; when its node law fails
    the lower bound falls back to the trivial 0. Edges whose potential
    difference is at most flat carry no current; at the optimum they carry
    none. A lower bound above the upper one by more than the node-law
    tolerance allows raises BracketError.
    """
    e = as_exponent(p)
    e.require_strict("certificate")
    v = h.values

    if (np_abs(v[net.source_mask]) > 1e-12).any() or (
        np_abs(v[net.sink_mask] - 1) > 1e-12
    ).any():
        raise InputError("potential must be 0 on A and 1 on B")

    upper = dirichlet_energy(net, h, e)
    current = current_from_potential(net, h, e, flat)

    if not (np_abs(current.values) > 0).any():
        raise DegenerateNetworkError("current flow of h is identically 0")

    try:
        lower, certified = thomson_lower_bound(net, e, current, tol), True

    except (NodeLawError, DegenerateNetworkError) as err:
        logger.debug("no flow certificate: %s", err)
        lower, certified = 0.0, False

    lower = checked_lower(lower, upper, max(BRACKET_SLACK, e.p * tol))
    return CapacityReport(
        capacity=upper,
        lower_bound=lower,
        upper_bound=upper,
        duality_gap=upper - lower,
        sweeps=0,
        max_residual=max_free_residual(net, v, e.p, flat),
        lower_certified=certified,
    )
