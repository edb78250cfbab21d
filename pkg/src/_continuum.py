from dataclasses import dataclass
from logging import getLogger
from math import log

from numpy import (abs as np_abs, arange, argmax, asarray, concatenate, eye,
                   float64, meshgrid, multiply, nonzero, ones, sign, stack,
                   unique, zeros)
from numpy import ndarray
from numpy.linalg import det

from _config import FACE_CHUNK, NODE_LAW_TOL, QUAD_POINTS, REFINEMENT_RADIUS
from _constants import c_d_gamma
from _errors import InputError
from _lattice import LatticeSpec, build_lattice, q_norm
from _network import Flow, Network
from _quadrature import axis_rule
from _solver import thomson_lower_bound

logger = getLogger(__name__)


@dataclass(frozen=True, slots=True)
class QuadratureConfig:
    """Tensor Gauss-Legendre settings for face integrals."""

    points_per_axis: int = QUAD_POINTS
    refinement_radius: float = REFINEMENT_RADIUS

    def __post_init__(self) -> None:
        if self.points_per_axis < 2:
            raise InputError("points_per_axis must be at least 2")


def _q_of(d: int) -> float:
    """Return q = d/(d-1), rejecting d < 2."""
    if d < 2:
        raise InputError(f"the continuum objects need d >= 2, got {d}")

    return d / (d - 1)


@dataclass(frozen=True, slots=True)
class ContinuousFlowField:
    """Theta(x) = x / |x|_q^d, the flux of g = log |x|_q."""

    d: int

    @property
    def q(self) -> float:
        """The norm exponent d/(d-1)."""
        return _q_of(self.d)

    def __call__(self, x: ndarray) -> ndarray:
        """Evaluate Theta at points stored along the last axis."""
        pts = asarray(x, dtype=float64)
        r = q_norm(pts, self.q)

        if (r == 0).any():
            raise InputError("Theta is singular at the origin")

        return pts / (r**self.d)[..., None]

    def divergence(self, x: ndarray, step: float = 1e-5) -> ndarray:
        """Central-difference divergence at points (N, d)."""
        pts = asarray(x, dtype=float64).reshape(-1, self.d)
        h = step * q_norm(pts, self.q).clip(min=1.0)
        total = zeros(pts.shape[0])

        for i in range(self.d):
            shift = zeros(pts.shape)
            shift[:, i] = h
            total += (self(pts + shift)[:, i] - self(pts - shift)[:, i]) / (
                2 * h
            )

        return total


def g_value(x: ndarray, d: int) -> float:
    """Return g(x) = log |x|_q, the critical p-harmonic function."""
    r = float(q_norm(asarray(x, dtype=float64), _q_of(d)))

    if r == 0:
        raise InputError("g is undefined at the origin")

    return log(r)


def g_gradient(x: ndarray, d: int) -> ndarray:
    """Gradient sign(x_i) |x_i|^(q-1) / |x|_q^q of g."""
    q, pts = _q_of(d), asarray(x, dtype=float64)
    r = q_norm(pts, q)

    if (r == 0).any():
        raise InputError("g is undefined at the origin")

    return sign(pts) * np_abs(pts) ** (q - 1) / (r**q)[..., None]


def g_flux(x: ndarray, d: int) -> ndarray:
    """The anisotropic p-flux |d_i g|^(d-2) d_i g of g, with p = d."""
    grad = g_gradient(x, d)
    return np_abs(grad) ** (d - 2) * grad


def continuous_capacity(d: int, n: float) -> float:
    """Return c_d/(log n)^(d-1), the continuum capacity between S_q and
    n S_q.
    """
    if n <= 1:
        raise InputError("the outer radius must exceed 1")

    return c_d_gamma(d) / log(n) ** (d - 1)


def tight_norm_constant(d: int) -> float:
    """Smallest c with c^-1 |x|_inf <= |x|_q <= c |x|_inf."""
    return float(d ** (1 / _q_of(d)))


def edge_flux_bound(x: ndarray, d: int) -> ndarray:
    """(|x|_inf + 1/2)/(|x|_q - d)^d, valid where |x|_q > d."""
    pts = asarray(x, dtype=float64)
    return (np_abs(pts).max(axis=-1) + 0.5) / (q_norm(pts, _q_of(d)) - d) ** d


def _face_integral(
    x: ndarray,
    a: ndarray,
    others: list[int],
    rules: list[tuple[ndarray, ndarray]],
    q: float,
    d: int,
) -> ndarray:
    """Integrate a / (sum_j |z_j|^q + |a|^q)^(d-1) over a batch of faces
    that share the same per-axis rules.
    """
    g = x.shape[0]
    total = (np_abs(a) ** q).reshape((g,) + (1,) * (d - 1))
    weight = ones(())

    for j, (offsets, w) in enumerate(rules):
        z = x[:, others[j]][:, None] + offsets[None, :]
        shape = [g] + [1] * (d - 1)
        shape[1 + j] = offsets.size
        total = total + (np_abs(z) ** q).reshape(shape)
        weight = multiply.outer(weight, w)

    integrand = a.reshape((g,) + (1,) * (d - 1)) / total ** (d - 1)
    return (integrand * weight[None]).reshape(g, -1).sum(axis=1)


def face_fluxes(
    x: ndarray,
    axis: int,
    direction: int,
    quad: QuadratureConfig = QuadratureConfig(),
) -> ndarray:
    """Flux of Theta through the faces S_xy, y = x + direction * e_axis.

    The face is the unit (d-1)-cube of the cell around x at offset
    direction/2 along `axis`. Faces are grouped by which transverse
    coordinates vanish (the |z|^q kink sits inside those) and by whether
    they lie near the origin, then integrated group by group.
    """
    pts = asarray(x, dtype=float64).reshape(-1, asarray(x).shape[-1])
    f, d = pts.shape
    q = _q_of(d)
    a = pts[:, axis] + direction / 2
    others = [j for j in range(d) if j != axis]
    centre = pts.copy()
    centre[:, axis] = a
    refined = q_norm(centre, q) <= quad.refinement_radius
    kinked = pts[:, others] == 0
    key = (kinked * 2 ** arange(d - 1)).sum(axis=1) + refined * 2 ** (d - 1)
    out = zeros(f)

    for k in unique(key).tolist():
        rows = nonzero(key == k)[0]
        pieces = 4 if k >> (d - 1) else 1
        rules = [
            axis_rule(quad.points_per_axis, pieces, bool(k >> j & 1))
            for j in range(d - 1)
        ]
        per_face = 1

        for offsets, _ in rules:
            per_face *= offsets.size

        step = max(1, FACE_CHUNK // per_face)

        for start in range(0, rows.size, step):
            r = rows[start : start + step]
            out[r] = _face_integral(pts[r], a[r], others, rules, q, d)

        logger.debug("axis %d group %d: %d faces", axis, k, rows.size)

    return direction * out


def face_flux(
    x: ndarray,
    y: ndarray,
    d: int,
    quad: QuadratureConfig = QuadratureConfig(),
) -> float:
    """Flux of Theta through the face between neighbours x and y, in the
    direction from x to y.
    """
    step = asarray(y) - asarray(x)

    if step.shape != (d,) or np_abs(step).sum() != 1:
        raise InputError("x and y must be lattice neighbours in Z^d")

    axis = int(argmax(np_abs(step)))
    return float(
        face_fluxes(asarray(x)[None, :], axis, int(step[axis]), quad)[0]
    )


def _critical(spec: LatticeSpec) -> None:
    """Reject specs outside the critical case p = d >= 2."""
    if not spec.critical or spec.d < 2:
        raise InputError("the face-flux flow needs p = d >= 2")


def lyons_flow(
    spec: LatticeSpec,
    quad: QuadratureConfig = QuadratureConfig(),
    net: Network | None = None,
) -> Flow:
    """The lattice flow whose value on each edge is the face flux of Theta.

    By the divergence theorem it satisfies the node law away from the
    origin, up to quadrature error.
    """
    _critical(spec)
    net = build_lattice(spec) if net is None else net

    if net.coordinates is None:
        raise InputError("the face-flux flow needs a lattice network")

    x, y = net.coordinates[net.tail], net.coordinates[net.head]
    step = y - x
    axis = argmax(np_abs(step), axis=1)
    direction = step[arange(step.shape[0]), axis]
    values = zeros(net.size)

    for ax in range(spec.d):
        for s in (1, -1):
            rows = (axis == ax) & (direction == s)

            if rows.any():
                values[rows] = face_fluxes(x[rows], ax, s, quad)

    logger.info("face-flux flow on %d edges", net.size)
    return Flow(net, values)


def sink_repaired(flow: Flow) -> Flow:
    """Drop the flow on edges inside the sink, which is one merged vertex
    for the purpose of the Thomson bound.
    """
    net = flow.network
    inside = net.sink_mask[net.tail] & net.sink_mask[net.head]
    values = flow.values.copy()
    values[inside] = 0.0
    return Flow(net, values)


def lyons_lower_bound(
    spec: LatticeSpec,
    quad: QuadratureConfig = QuadratureConfig(),
    net: Network | None = None,
    tol: float = NODE_LAW_TOL,
) -> float:
    """Thomson lower bound on the capacity from the face-flux flow."""
    _critical(spec)

    if spec.n < 2:
        raise InputError("the face-flux bound needs n >= 2")

    net = build_lattice(spec) if net is None else net
    return thomson_lower_bound(
        net, spec.p, sink_repaired(lyons_flow(spec, quad, net)), tol
    )


def sphere_flux(
    d: int, radius: float, quad: QuadratureConfig = QuadratureConfig()
) -> float:
    """Flux of Theta through radius * S_q by quadrature.

    Each face of the cube [-1, 1]^d is mapped radially onto the sphere,
    x(z) = radius u/|u|_q; since Theta is radial, the outward flux density
    is the absolute determinant of [Theta(x), dx/dz_1, ..., dx/dz_{d-1}].
    """
    q, field = _q_of(d), ContinuousFlowField(d)
    offsets, w = axis_rule(quad.points_per_axis, 4, True)
    z1, w1 = 2 * offsets, 2 * w
    grids = meshgrid(*([z1] * (d - 1)), indexing="ij")
    z = stack([g.ravel() for g in grids], axis=-1)
    weight = ones(())

    for _ in range(d - 1):
        weight = multiply.outer(weight, w1)

    weight = weight.ravel()
    total = 0.0

    for i in range(d):
        others = [j for j in range(d) if j != i]

        for s in (1.0, -1.0):
            u = zeros((z.shape[0], d))
            u[:, i], u[:, others] = s, z
            norm = q_norm(u, q)
            x = radius * u / norm[:, None]
            grad = sign(u) * np_abs(u) ** (q - 1) / norm[:, None] ** (q - 1)
            tangents = radius * (
                eye(d)[others][None, :, :] / norm[:, None, None]
                - u[:, None, :] * grad[:, others][:, :, None]
                / norm[:, None, None] ** 2
            )
            frame = concatenate([field(x)[:, None, :], tangents], axis=1)
            total += float((np_abs(det(frame)) * weight).sum())

    return total


def strength_identity_check(
    n: int, d: int, quad: QuadratureConfig = QuadratureConfig()
) -> tuple[float, float]:
    """Return (flux of Theta through n S_q, c_d by the gamma formula)."""
    if n < 2:
        raise InputError("the identity check needs n >= 2")

    return sphere_flux(d, float(n), quad), c_d_gamma(d)
