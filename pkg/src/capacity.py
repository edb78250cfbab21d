from logging import getLogger

from _constants import (AsymptoticConstant, Method, c_d_gamma,
                        c_d_monte_carlo)
from _config import MC_SAMPLES, SEED
from _continuum import (QuadratureConfig, lyons_lower_bound, sphere_flux)
from _cut import p1_report
from _errors import InputError
from _lattice import (LatticeSpec, build_lattice, default_relaxation,
                      log_profile, upper_bound_test_function)
from _network import Exponent, Network, VertexValues, as_exponent
from _solver import (CapacityReport, SolverConfig, WarmStart, checked_lower,
                     solve_dirichlet)

logger = getLogger(__name__)


def _cut_report(net: Network) -> CapacityReport:
    """Wrap the p = 1 cut and its bottleneck dual as a report."""
    cut = p1_report(net)
    return CapacityReport(
        capacity=cut.capacity,
        lower_bound=min(cut.capacity, cut.dual_capacity),
        upper_bound=max(cut.capacity, cut.dual_capacity),
        duality_gap=abs(cut.capacity - cut.dual_capacity),
        sweeps=0,
        max_residual=0.0,
        lower_certified=True,
    )


def lattice_config(spec: LatticeSpec) -> SolverConfig:
    """Default solver settings for a box: log-profile warm start and the
    over-relaxation factor of the box size.
    """
    return SolverConfig(
        warm_start=WarmStart.LOG_PROFILE,
        relaxation=default_relaxation(spec.n),
    )


def capacity(
    spec: LatticeSpec,
    cfg: SolverConfig | None = None,
    quad: QuadratureConfig | None = None,
    initial: VertexValues | None = None,
    flow_bound: bool = True,
) -> CapacityReport:
    """Return Cap_{d,p}(n) between the origin and the boundary of D_n.

    p = 1 goes through the cut. When p = d >= 2 and n >= 2 and
    `flow_bound` is set, the report also carries the face-flux lower
    bound, and the certified lower bound is the better of it and the
    solver's own flow bound.
    """
    net = build_lattice(spec)

    if spec.p.p == 1:
        return _cut_report(net)

    cfg = lattice_config(spec) if cfg is None else cfg

    if initial is None and cfg.warm_start is WarmStart.LOG_PROFILE:
        initial = log_profile(spec, net)

    _, report = solve_dirichlet(net, spec.p, cfg, initial=initial)

    if not (flow_bound and spec.critical and spec.d >= 2 and spec.n >= 2):
        return report

    flow = lyons_lower_bound(spec, quad or QuadratureConfig(), net)
    lower = max(report.lower_bound, checked_lower(flow, report.upper_bound))
    logger.info(
        "d=%d n=%d: flow bound %.15g, solver %.15g", spec.d, spec.n, flow,
        report.capacity,
    )
    return CapacityReport(
        capacity=report.capacity,
        lower_bound=lower,
        upper_bound=report.upper_bound,
        duality_gap=report.upper_bound - lower,
        sweeps=report.sweeps,
        max_residual=report.max_residual,
        converged=report.converged,
        lower_certified=report.lower_certified or flow > 0,
        flow_lower_bound=flow,
        energy_trace=report.energy_trace,
    )


def flow_bracket(
    spec: LatticeSpec, quad: QuadratureConfig | None = None
) -> CapacityReport:
    """Bracket Cap_d(n) without solving: the face-flux bound below and the
    explicit test function above. The capacity field is their midpoint.
    """
    net = build_lattice(spec)
    lower = lyons_lower_bound(spec, quad or QuadratureConfig(), net)
    _, upper = upper_bound_test_function(spec, net)
    return CapacityReport(
        capacity=(lower + upper) / 2,
        lower_bound=lower,
        upper_bound=upper,
        duality_gap=upper - lower,
        sweeps=0,
        max_residual=0.0,
        lower_certified=True,
        flow_lower_bound=lower,
    )


def graph_capacity(
    net: Network,
    p: Exponent | float,
    cfg: SolverConfig = SolverConfig(),
) -> CapacityReport:
    """Return Cap_p(A; B) on an arbitrary network, any p >= 1."""
    e = as_exponent(p)

    if e.p == 1:
        return _cut_report(net)

    if cfg.warm_start is not WarmStart.ZERO:
        raise InputError("generic networks only support the zero warm start")

    _, report = solve_dirichlet(net, e, cfg)
    return report


def asymptotic_constant(
    d: int,
    method: Method = Method.GAMMA_FORMULA,
    samples: int = MC_SAMPLES,
    seed: int = SEED,
    quad: QuadratureConfig | None = None,
) -> AsymptoticConstant:
    """Return c_d computed by the requested method."""
    match method:
        case Method.GAMMA_FORMULA:
            return AsymptoticConstant(d, c_d_gamma(d), method)

        case Method.MONTE_CARLO:
            value, stderr = c_d_monte_carlo(d, samples, seed)
            return AsymptoticConstant(d, value, method, stderr)

        case Method.FLUX_QUADRATURE:
            return AsymptoticConstant(
                d, sphere_flux(d, 1.0, quad or QuadratureConfig()), method
            )

    raise InputError(f"unknown method {method!r}")
