from functools import cache

from numpy import concatenate, ndarray
from scipy.special import roots_legendre


@cache
def gauss_legendre(points: int) -> tuple[ndarray, ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = roots_legendre(points)
    nodes, weights = (x + 1) / 2, w / 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@cache
def axis_rule(
    points: int, pieces: int, kinked: bool
) -> tuple[ndarray, ndarray]:
    """A composite rule on [-1/2, 1/2] with `pieces` equal panels.

    With `kinked`, the integrand may have a |z|^q kink at 0: the panel
    count is made even so 0 is a panel edge, and the two panels touching
    0 use z = w u^2, which turns |z|^q into a smooth power of u.
    """
    pieces = max(2, pieces + pieces % 2) if kinked else max(1, pieces)
    width = 1 / pieces
    u, w = gauss_legendre(points)
    nodes, weights = [], []

    for k in range(pieces):
        left = -0.5 + k * width
        touches = kinked and (abs(left) < 1e-15 or abs(left + width) < 1e-15)

        if touches:
            s = 1.0 if abs(left) < 1e-15 else -1.0
            nodes.append(s * width * u**2)
            weights.append(2 * width * u * w)

        else:
            nodes.append(left + width * u)
            weights.append(width * w)

    out = concatenate(nodes), concatenate(weights)
    out[0].setflags(write=False)
    out[1].setflags(write=False)
    return out
