from dataclasses import dataclass
from logging import getLogger

from networkx import (DiGraph, NetworkXUnbounded, maximum_flow_value,
                      minimum_cut)
from networkx.algorithms.flow import edmonds_karp

from _errors import CapacityError, DegenerateNetworkError
from _network import Network

logger = getLogger(__name__)

_SOURCE, _SINK = "A", "B"


@dataclass(frozen=True, slots=True)
class CutReport:
    """Both sides of the p = 1 duality."""

    capacity: float
    bottleneck: float
    dual_capacity: float
    source_side: frozenset[int]
    iterations: int


def _flow_graph(net: Network, scale: float = 1.0) -> DiGraph:
    """Directed graph with both orientations of every edge at capacity
    scale * c and uncapacitated arcs from the merged source and into the
    merged sink.
    """
    g = DiGraph()

    for u, v, c in net.edges:
        g.add_edge(u, v, capacity=scale * c)
        g.add_edge(v, u, capacity=scale * c)

    g.add_edges_from((_SOURCE, a) for a in net.source)
    g.add_edges_from((b, _SINK) for b in net.sink)
    return g


def min_cut(net: Network) -> tuple[float, frozenset[int]]:
    """Return the minimum A-B cut value and the source side of a cut."""
    try:
        value, (side, _) = minimum_cut(
            _flow_graph(net), _SOURCE, _SINK, flow_func=edmonds_karp
        )

    except NetworkXUnbounded:
        raise DegenerateNetworkError("A and B are not separable") from None

    return float(value), frozenset(v for v in side if v != _SOURCE)


def bottleneck(net: Network, rel_tol: float = 1e-13) -> tuple[float, int]:
    """Return inf |r theta|_inf over unit flows from A to B.

    Binary search on t: a unit flow with |theta(e)| <= t c_e exists iff
    the maximum flow with capacities t c_e is at least 1.
    """

    def feasible(t: float) -> bool:
        value = maximum_flow_value(
            _flow_graph(net, t), _SOURCE, _SINK, flow_func=edmonds_karp
        )
        return bool(value >= 1.0)

    lo, hi, iterations = 0.0, 1.0, 0

    while not feasible(hi):
        lo, hi, iterations = hi, 2 * hi, iterations + 1

    while hi - lo > rel_tol * hi:
        mid = (lo + hi) / 2
        lo, hi = (lo, mid) if feasible(mid) else (mid, hi)
        iterations += 1

    return hi, iterations


def p1_report(net: Network, agreement: float = 1e-9) -> CutReport:
    """Compute the p = 1 capacity as a minimum cut and as the inverse of
    the bottleneck of unit flows, and check that they agree.
    """
    cap, side = min_cut(net)
    t, iterations = bottleneck(net)

    if abs(cap - 1 / t) > agreement * max(1.0, cap):
        raise CapacityError(
            f"cut {cap!r} and bottleneck dual {1 / t!r} disagree"
        )

    logger.info("p=1 capacity %.15g after %d feasibility checks", cap,
                iterations)
    return CutReport(cap, t, 1 / t, side, iterations)


def p1_capacity(net: Network) -> float:
    """Return the p = 1 capacity between A and B."""
    return p1_report(net).capacity
