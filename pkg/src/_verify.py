from dataclasses import dataclass, replace
from itertools import combinations, product
from logging import getLogger
from math import log, pi
from time import perf_counter
from typing import Callable, Iterator

from networkx import Graph, is_connected
from numpy import abs as np_abs, asarray, bincount, ndarray, sign
from numpy.random import Generator, default_rng
from scipy.optimize import minimize

from _config import SEED
from _constants import c_d_gamma, c_d_monte_carlo
from _continuum import (QuadratureConfig, lyons_flow, strength_identity_check)
from _cut import p1_report
from _errors import CapacityError
from _lattice import (LatticeSpec, build_lattice, kappa,
                      upper_bound_test_function)
from _network import (Network, Potential, current_from_potential,
                      dirichlet_energy, make_network, node_residual,
                      potential_from_flow, strength)
from _solver import SolverConfig, WarmStart, certify, solve_dirichlet
from capacity import capacity, lattice_config

logger = getLogger(__name__)

TIGHT = SolverConfig(tol_residual=1e-10, tol_energy=1e-18)


@dataclass(frozen=True, slots=True)
class SuiteResult:
    """Outcome of one property suite."""

    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def random_network(
    rng: Generator,
    max_vertices: int,
    unit: bool = False,
    min_vertices: int = 3,
) -> Network:
    """A random connected network: a random spanning tree plus extra edges,
    conductances in (0, 1] (or all 1), and small disjoint A and B.
    """
    n = int(rng.integers(min_vertices, max_vertices + 1))
    edges = [(v, int(rng.integers(v)), 1.0) for v in range(1, n)]
    edges += [
        (int(u), int(v), 1.0)
        for u, v in rng.integers(n, size=(int(rng.integers(n)), 2))
        if u != v
    ]
    c = [1.0] * len(edges) if unit else (1 - rng.random(len(edges))).tolist()
    order = rng.permutation(n).tolist()
    a = int(rng.integers(1, max(2, n // 3) + 1))
    b = int(rng.integers(1, max(2, n // 3) + 1))
    a, b = min(a, n - 1), min(b, n - a)
    return make_network(
        [(u, v, w) for (u, v, _), w in zip(edges, c)],
        order[:a],
        order[a : a + b],
        range(n),
    )


def brute_force_capacity(net: Network, p: float) -> float:
    """Minimize the energy over the free values with a generic optimizer.

    L-BFGS-B with the analytic gradient, values boxed in [0, 1].
    """
    free = ~net.boundary_mask
    base = net.sink_mask.astype(float)

    def energy(x: ndarray) -> tuple[float, ndarray]:
        h = base.copy()
        h[free] = x
        d = h[net.head] - h[net.tail]
        g = p * net.conductance * sign(d) * np_abs(d) ** (p - 1)
        grad = bincount(net.head, g, net.order) - bincount(
            net.tail, g, net.order
        )
        return float((net.conductance * np_abs(d) ** p).sum()), grad[free]

    if not free.any():
        return energy(asarray([]))[0]

    result = minimize(
        energy,
        asarray([0.5] * int(free.sum())),
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, 1.0)] * int(free.sum()),
        options={"ftol": 1e-16, "gtol": 1e-11, "maxiter": 50_000},
    )
    return float(result.fun)


def small_networks(max_vertices: int = 5) -> Iterator[Network]:
    """Every connected unit network on 2 to max_vertices labelled vertices,
    with A = {0} and B = {n - 1}.
    """
    for n in range(2, max_vertices + 1):
        pairs = list(combinations(range(n), 2))

        for k in range(n - 1, len(pairs) + 1):
            for chosen in combinations(pairs, k):
                g = Graph(chosen)

                if g.number_of_nodes() < n or not is_connected(g):
                    continue

                yield make_network(
                    [(u, v, 1.0) for u, v in chosen], [0], [n - 1], range(n)
                )


def cut_enumeration(net: Network) -> float:
    """The p = 1 capacity by trying every 0/1 potential on free vertices."""
    free = (~net.boundary_mask).nonzero()[0]
    base = net.sink_mask.astype(float)
    best = float("inf")

    for bits in product((0.0, 1.0), repeat=free.size):
        h = base.copy()
        h[free] = bits
        best = min(best, dirichlet_energy(net, Potential(net, h), 1))

    return best


def suite_d1_exact(
    ps: tuple[float, ...] = (1.5, 2, 3), ns: tuple[int, ...] = (2, 5, 10, 50)
) -> SuiteResult:
    """d = 1 capacities from a zero start against 2 n^(1-p), and against
    the generic optimizer for n <= 5.
    """
    worst, worst_oracle = 0.0, 0.0

    for p, n in product(ps, ns):
        spec = LatticeSpec(1, n, p)
        cap = capacity(spec, TIGHT).capacity
        worst = max(worst, abs(cap / (2 * n ** (1 - p)) - 1))

        if n <= 5:
            oracle = brute_force_capacity(build_lattice(spec), p)
            worst_oracle = max(worst_oracle, abs(cap / oracle - 1))

    return SuiteResult(
        "d1_exact",
        worst <= 1e-8 and worst_oracle <= 1e-6,
        f"worst rel error {worst:.2e}, optimizer {worst_oracle:.2e}",
    )


def suite_critical_d2(
    ns: tuple[int, ...] = (16, 32, 64, 128),
    band: tuple[float, float] = (3.5, 8.5),
) -> SuiteResult:
    """Certified bracket and trend of (log n) Cap_2(n) for p = 2."""
    scaled, problems = [], []

    for n in ns:
        spec = LatticeSpec(2, n, 2)
        report = capacity(spec)
        _, upper = upper_bound_test_function(spec)
        flow = report.flow_lower_bound or 0.0

        if not flow <= report.capacity <= upper * (1 + 1e-12):
            problems.append(f"n={n}: bracket broken")

        scaled.append(log(n) * report.capacity)

    if not all(band[0] <= s <= band[1] for s in scaled):
        problems.append(f"out of band: {scaled}")

    gaps = [abs(s - 2 * pi) for s in scaled]

    if any(b >= a for a, b in zip(gaps, gaps[1:])):
        problems.append(f"not approaching 2 pi: {scaled}")

    return SuiteResult(
        "critical_d2", not problems, "; ".join(problems) or f"{scaled}"
    )


def suite_duality_gap(
    count: int = 200, seed: int = SEED, ps: tuple[float, ...] = (1.5, 2, 3)
) -> SuiteResult:
    """certify() closes the gap at the solved optimum."""
    rng, worst = default_rng(seed), 0.0

    for k in range(count):
        net = random_network(rng, 40)
        p = ps[k % len(ps)]
        _, report = solve_dirichlet(net, p, TIGHT)
        worst = max(worst, report.duality_gap / report.capacity)

    return SuiteResult(
        "duality_gap", worst <= 1e-6, f"worst relative gap {worst:.2e}"
    )


def suite_lyons_validity(
    n: int = 20, dims: tuple[int, ...] = (2, 3), points: int = 16
) -> SuiteResult:
    """Node law of the face-flux flow and its strength out of the origin."""
    quad, problems = QuadratureConfig(points_per_axis=points), []

    for d in dims:
        spec = LatticeSpec(d, n, d)
        net = build_lattice(spec)
        flow = lyons_flow(spec, quad, net)
        res = node_residual(net, flow).values
        inner = np_abs(res[~net.boundary_mask]).max()
        out = float(res[net.source_mask].sum())
        tol = 1e-8 if d == 2 else 1e-5

        if inner > 1e-9:
            problems.append(f"d={d}: node residual {inner:.2e}")

        if abs(out - c_d_gamma(d)) > tol:
            problems.append(f"d={d}: strength {out!r}")

    return SuiteResult("lyons_validity", not problems, "; ".join(problems))


def suite_constants(
    samples: int = 1_000_000, seed: int = SEED
) -> SuiteResult:
    """c_d by the gamma formula against Monte Carlo and flux quadrature."""
    problems = []

    for d in (2, 3, 4, 5):
        est, err = c_d_monte_carlo(d, samples, seed)

        if abs(est - c_d_gamma(d)) > 3 * err:
            problems.append(f"d={d}: Monte Carlo {est:.6f} +- {err:.1e}")

    for d in (2, 3):
        flux, exact = strength_identity_check(2, d)

        if abs(flux - exact) > 1e-5:
            problems.append(f"d={d}: flux {flux!r} vs {exact!r}")

    return SuiteResult("constants", not problems, "; ".join(problems))


def suite_regimes(
    cases: tuple[tuple[int, float], ...] = ((2, 1.5), (2, 2), (2, 3), (3, 3)),
    ns: tuple[int, ...] = (4, 8, 16, 32),
    d3_cap: int = 16,
) -> SuiteResult:
    """kappa stays within a factor 3 for every (d, p)."""
    problems = []

    for d, p in cases:
        values = []

        for n in ns:
            if d == 3 and n > d3_cap:
                continue

            spec = LatticeSpec(d, n, p)
            cfg = replace(lattice_config(spec), tol_residual=1e-7)
            values.append(kappa(spec, capacity(spec, cfg).capacity))

        if max(values) > 3 * min(values):
            problems.append(f"(d, p)=({d}, {p}): {values}")

    return SuiteResult("regimes", not problems, "; ".join(problems))


def suite_p1_duality(count: int = 100, seed: int = SEED) -> SuiteResult:
    """Minimum cut, bottleneck dual and exhaustive enumeration agree."""
    rng, worst = default_rng(seed), 0.0

    for _ in range(count):
        net = random_network(rng, 12)
        cut = p1_report(net)
        worst = max(
            worst,
            abs(cut.capacity - cut_enumeration(net)),
            abs(cut.capacity - cut.dual_capacity),
        )

    return SuiteResult("p1_duality", worst <= 1e-9, f"worst gap {worst:.2e}")


def suite_principles(count: int = 50, seed: int = SEED) -> SuiteResult:
    """Maximum and comparison principles, strength uniqueness, Ohm's law
    round trip and monotone energy on random networks.
    """
    rng, problems = default_rng(seed), []
    ps = (1.5, 2.0, 3.0, 4.0)

    for k in range(count):
        net = random_network(rng, 50)
        p = ps[k % len(ps)]
        h, report = solve_dirichlet(net, p, TIGHT)
        v = h.values

        if v.min() < -1e-12 or v.max() > 1 + 1e-12:
            problems.append(f"#{k}: maximum principle")

        trace = asarray(report.energy_trace)

        if (trace[1:] > trace[:-1] * (1 + 1e-12) + 1e-15).any():
            problems.append(f"#{k}: energy increased")

        current = current_from_potential(net, h, p)
        anchor = min(net.source)
        back = potential_from_flow(net, current, p, anchor, 0.0, tol=1e-7)

        if np_abs(back.values - v).max() > 1e-9:
            problems.append(f"#{k}: Ohm round trip")

        if p == 4.0:
            continue

        shifted, _ = solve_dirichlet(net, p, TIGHT, boundary=(0.25, 1.25))

        if np_abs(shifted.values - v - 0.25).max() > 1e-7:
            problems.append(f"#{k}: affine shift")

        start = Potential(net, rng.random(net.order))
        other, _ = solve_dirichlet(
            net,
            p,
            SolverConfig(
                tol_residual=TIGHT.tol_residual,
                tol_energy=TIGHT.tol_energy,
                warm_start=WarmStart.USER,
            ),
            initial=start,
        )
        i1 = current.values / strength(net, current, tol=1e-6)
        second = current_from_potential(net, other, p)
        i2 = second.values / strength(net, second, tol=1e-6)

        if np_abs(i1 - i2).max() > 1e-6:
            problems.append(f"#{k}: strength uniqueness")

    return SuiteResult(
        "principles", not problems, "; ".join(problems[:5])
    )


def suite_brute_force(
    max_vertices: int = 5, ps: tuple[float, ...] = (1.5, 2.0, 3.0)
) -> SuiteResult:
    """The solver against a generic optimizer on every connected unit
    network with at most max_vertices vertices.
    """
    worst, cases = 0.0, 0

    for net in small_networks(max_vertices):
        for p in ps:
            _, report = solve_dirichlet(net, p, TIGHT)
            oracle = brute_force_capacity(net, p)
            worst, cases = max(worst, abs(report.capacity - oracle)), cases + 1

    return SuiteResult(
        "brute_force", worst <= 1e-6, f"worst {worst:.2e} over {cases} cases"
    )


def suite_certify_sandwich(seed: int = SEED) -> SuiteResult:
    """An unsolved warm start has a strictly positive gap."""
    spec = LatticeSpec(2, 8, 2)
    net = build_lattice(spec)
    f, _ = upper_bound_test_function(spec, net)
    report = certify(net, 2, f)
    ok = report.upper_bound > report.lower_bound
    return SuiteResult("certify_sandwich", ok, f"{report.duality_gap:.3e}")


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "d1_exact": suite_d1_exact,
    "duality_gap": suite_duality_gap,
    "p1_duality": suite_p1_duality,
    "principles": suite_principles,
    "brute_force": suite_brute_force,
    "certify_sandwich": suite_certify_sandwich,
    "constants": suite_constants,
    "lyons_validity": suite_lyons_validity,
    "critical_d2": suite_critical_d2,
    "regimes": suite_regimes,
}


def run_suites(names: list[str] | None = None) -> list[SuiteResult]:
    """Run the named suites (all by default) and time each one. A suite
    that raises a CapacityError fails with the message as its detail.
    """
    results = []

    for name in names or list(SUITES):
        start = perf_counter()

        try:
            result = SUITES[name]()

        except CapacityError as err:
            logger.error("%s raised %s: %s", name, type(err).__name__, err)
            result = SuiteResult(name, False, f"{type(err).__name__}: {err}")

        seconds = perf_counter() - start
        logger.info("%s: %s in %.1fs", name, result.passed, seconds)
        results.append(
            SuiteResult(result.name, result.passed, result.detail, seconds)
        )

    return results
