"""Quadrature rules on intervals, rectangles, disks, circles and the L-shaped domain.

All rules store nodes as an (n, d) float64 array and strictly positive weights.
Gauss-Legendre and Gauss-Lobatto nodes are computed by Newton iteration on the
Legendre three-term recurrence, so the module has no dependency beyond numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Tags name the geometric object a rule integrates over.  "points" marks plain
# point-evaluation sets (unit weights, e.g. interval endpoints for penalty terms)
# which carry no measure.
DOMAIN_TAGS = (
    "interval",
    "circle_boundary",
    "disk_interior",
    "rectangle",
    "polyline",
    "points",
)

_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes, weights and an optional outward unit normal per node."""

    nodes: np.ndarray
    weights: np.ndarray
    domain_tag: str
    normals: np.ndarray | None = None

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        if nodes.shape[0] == 1 and nodes.shape[1] > 1 and np.ndim(self.nodes) == 1:
            nodes = nodes.T
        weights = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.domain_tag not in DOMAIN_TAGS:
            raise ValueError(f"unknown domain tag {self.domain_tag!r}")
        if nodes.shape[0] != weights.shape[0]:
            raise ValueError("node/weight count mismatch")
        if nodes.shape[0] == 0:
            raise ValueError("empty rule")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
            raise ValueError("non-finite nodes or weights")
        if np.any(weights <= 0.0):
            raise ValueError("weights must be positive")
        if self.normals is not None:
            normals = np.asarray(self.normals, dtype=float)
            if normals.shape != nodes.shape:
                raise ValueError("normals must match node shape")
            object.__setattr__(self, "normals", normals)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum of per-node values."""
        values = np.asarray(values, dtype=float).ravel()
        if values.shape[0] != self.n:
            raise ValueError("value count does not match rule size")
        return float(self.weights @ values)


def _legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_n and P_{n-1} via the three-term recurrence."""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    return p, p_prev


def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on (-1, 1); exact for degree <= 2n-1."""
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return QuadratureRule(np.zeros((1, 1)), np.array([2.0]), "interval")
    # Chebyshev-flavored initial guesses, then Newton on P_n.
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(_NEWTON_MAX_ITER):
        p, p_prev = _legendre(n, x)
        dp = n * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    p, p_prev = _legendre(n, x)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadratureRule(x[order][:, None], w[order], "interval")


def gauss_lobatto(n: int) -> QuadratureRule:
    """n-point Gauss-Lobatto rule on [-1, 1] with endpoint nodes; exact for degree <= 2n-3."""
    if n < 2:
        raise ValueError("Lobatto rules need at least two nodes")
    m = n - 1  # interior nodes are the roots of P'_m
    if n == 2:
        x = np.array([-1.0, 1.0])
    else:
        # Chebyshev-Lobatto interior points as initial guesses, Newton on P'_m.
        x_int = np.cos(np.pi * np.arange(1, m) / m)
        for _ in range(_NEWTON_MAX_ITER):
            p, p_prev = _legendre(m, x_int)
            dp = m * (x_int * p - p_prev) / (x_int * x_int - 1.0)
            # (1-x^2) P'' = 2x P' - m(m+1) P
            d2p = (2.0 * x_int * dp - m * (m + 1) * p) / (1.0 - x_int * x_int)
            dx = dp / d2p
            x_int = x_int - dx
            if np.max(np.abs(dx)) < _NEWTON_TOL:
                break
        x = np.concatenate(([-1.0], np.sort(x_int), [1.0]))
    p, _ = _legendre(m, x)
    w = 2.0 / (m * (m + 1) * p * p)
    return QuadratureRule(x[:, None], w, "interval")


def riemann_left(n: int, a: float, b: float) -> QuadratureRule:
    """Left-endpoint Riemann sum with n uniform cells on (a, b)."""
    if n < 1:
        raise ValueError("need at least one node")
    if not a < b:
        raise ValueError("need a < b")
    h = (b - a) / n
    x = a + h * np.arange(n)
    return QuadratureRule(x[:, None], np.full(n, h), "interval")


def map_to_interval(rule: QuadratureRule, a: float, b: float) -> QuadratureRule:
    """Affine image of a reference rule on (-1, 1) onto (a, b)."""
    if rule.dim != 1:
        raise ValueError("only 1-D rules can be mapped to an interval")
    if not a < b:
        raise ValueError("need a < b")
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * rule.nodes[:, 0]
    return QuadratureRule(x[:, None], half * rule.weights, "interval")


def tensor_rectangle(rule_x: QuadratureRule, rule_y: QuadratureRule) -> QuadratureRule:
    """Tensor product of two 1-D rules on an axis-aligned rectangle."""
    if rule_x.dim != 1 or rule_y.dim != 1:
        raise ValueError("tensor factors must be 1-D rules")
    X, Y = np.meshgrid(rule_x.nodes[:, 0], rule_y.nodes[:, 0], indexing="ij")
    W = np.outer(rule_x.weights, rule_y.weights)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    return QuadratureRule(nodes, W.ravel(), "rectangle")


def disk_interior(
    n_r: int, n_t: int, radius: float, center: tuple[float, float] = (0.0, 0.0)
) -> QuadratureRule:
    """Polar tensor rule on a disk: Gauss-Legendre radially, periodic trapezoid in angle.

    The area Jacobian r is folded into the weights.  Exact for polynomials of total
    degree <= min(2*n_r - 2, n_t - 1).
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if n_t < 1:
        raise ValueError("need at least one angular node")
    radial = map_to_interval(gauss_legendre(n_r), 0.0, radius)
    r = radial.nodes[:, 0]
    theta = 2.0 * np.pi * np.arange(n_t) / n_t
    w_t = 2.0 * np.pi / n_t
    R, T = np.meshgrid(r, theta, indexing="ij")
    nodes = np.column_stack(
        [center[0] + (R * np.cos(T)).ravel(), center[1] + (R * np.sin(T)).ravel()]
    )
    weights = (np.outer(radial.weights * r, np.full(n_t, w_t))).ravel()
    return QuadratureRule(nodes, weights, "disk_interior")


def circle_boundary(
    n: int, radius: float, center: tuple[float, float] = (0.0, 0.0)
) -> QuadratureRule:
    """n equally spaced nodes on a circle, each weighted by 2*pi*R/n, with outward normals."""
    if n < 1:
        raise ValueError("need at least one node")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    theta = 2.0 * np.pi * np.arange(n) / n
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    nodes = np.column_stack([center[0], center[1]]) + radius * normals
    weights = np.full(n, 2.0 * np.pi * radius / n)
    return QuadratureRule(nodes, weights, "circle_boundary", normals=normals)


# The L-shaped domain (-1,1)^2 minus the closed lower-left quadrant.  Interior is
# covered by three unit squares; the boundary splits into eight unit edges, two of
# which (the re-entrant ones bordering the removed quadrant) get Gauss-Lobatto
# rules so their nodes reach the corner singularity.
_LSHAPE_SQUARES = ((-1.0, 0.0, 0.0, 1.0), (0.0, 1.0, 0.0, 1.0), (0.0, 1.0, -1.0, 0.0))
# (x0, x1, y0, y1, fixed coordinate index, fixed value, outward normal)
_LSHAPE_GAUSS_EDGES = (
    (-1.0, 0.0, 1, 1.0, (0.0, 1.0)),   # top, left half
    (0.0, 1.0, 1, 1.0, (0.0, 1.0)),    # top, right half
    (-1.0, 0.0, 0, 1.0, (1.0, 0.0)),   # right, lower half
    (0.0, 1.0, 0, 1.0, (1.0, 0.0)),    # right, upper half
    (0.0, 1.0, 1, -1.0, (0.0, -1.0)),  # bottom
    (0.0, 1.0, 0, -1.0, (-1.0, 0.0)),  # left
)
_LSHAPE_LOBATTO_EDGES = (
    (-1.0, 0.0, 1, 0.0, (0.0, -1.0)),  # re-entrant, along y = 0
    (-1.0, 0.0, 0, 0.0, (-1.0, 0.0)),  # re-entrant, along x = 0
)


def _edge_rule(base: QuadratureRule, lo, hi, fixed_axis, fixed_val, normal):
    seg = map_to_interval(base, lo, hi)
    nodes = np.empty((seg.n, 2))
    nodes[:, 1 - fixed_axis] = seg.nodes[:, 0]
    nodes[:, fixed_axis] = fixed_val
    normals = np.tile(np.asarray(normal, dtype=float), (seg.n, 1))
    return nodes, seg.weights, normals


def l_shaped_rules(n_interior: int, n_edge: int) -> tuple[QuadratureRule, QuadratureRule]:
    """Interior and boundary rules for (-1,1)^2 \\ (-1,0]^2.

    Interior: an n x n Gauss-Legendre tensor rule per unit square (total weight 3).
    Boundary: n_edge nodes per unit edge, Gauss-Lobatto on the two re-entrant edges
    and Gauss-Legendre on the six others (total weight 8).
    """
    base = gauss_legendre(n_interior)
    parts = []
    for x0, x1, y0, y1 in _LSHAPE_SQUARES:
        parts.append(tensor_rectangle(map_to_interval(base, x0, x1), map_to_interval(base, y0, y1)))
    interior = QuadratureRule(
        np.vstack([p.nodes for p in parts]),
        np.concatenate([p.weights for p in parts]),
        "rectangle",
    )

    gauss = gauss_legendre(n_edge)
    lobatto = gauss_lobatto(n_edge)
    nodes, weights, normals = [], [], []
    for lo, hi, axis, val, nrm in _LSHAPE_GAUSS_EDGES:
        nd, w, nm = _edge_rule(gauss, lo, hi, axis, val, nrm)
        nodes.append(nd), weights.append(w), normals.append(nm)
    for lo, hi, axis, val, nrm in _LSHAPE_LOBATTO_EDGES:
        nd, w, nm = _edge_rule(lobatto, lo, hi, axis, val, nrm)
        nodes.append(nd), weights.append(w), normals.append(nm)
    boundary = QuadratureRule(
        np.vstack(nodes), np.concatenate(weights), "polyline", normals=np.vstack(normals)
    )
    return interior, boundary


def endpoint_rule(a: float, b: float) -> QuadratureRule:
    """Both endpoints of an interval with unit evaluation weights (penalty terms)."""
    return QuadratureRule(np.array([[a], [b]]), np.array([1.0, 1.0]), "points")


def annulus_interior(
    n_r: int, n_t: int, r_inner: float, r_outer: float,
    center: tuple[float, float] = (0.0, 0.0),
) -> QuadratureRule:
    """Polar tensor rule on an annulus; used for piecewise validation rules."""
    if not 0.0 <= r_inner < r_outer:
        raise ValueError("need 0 <= r_inner < r_outer")
    radial = map_to_interval(gauss_legendre(n_r), r_inner, r_outer)
    r = radial.nodes[:, 0]
    theta = 2.0 * np.pi * np.arange(n_t) / n_t
    w_t = 2.0 * np.pi / n_t
    R, T = np.meshgrid(r, theta, indexing="ij")
    nodes = np.column_stack(
        [center[0] + (R * np.cos(T)).ravel(), center[1] + (R * np.sin(T)).ravel()]
    )
    weights = (np.outer(radial.weights * r, np.full(n_t, w_t))).ravel()
    return QuadratureRule(nodes, weights, "disk_interior")


def concat_rules(rules: list[QuadratureRule], domain_tag: str) -> QuadratureRule:
    """Union of rules over disjoint pieces of the same kind of domain."""
    have_normals = all(r.normals is not None for r in rules)
    return QuadratureRule(
        np.vstack([r.nodes for r in rules]),
        np.concatenate([r.weights for r in rules]),
        domain_tag,
        normals=np.vstack([r.normals for r in rules]) if have_normals else None,
    )


def to_csv(rule: QuadratureRule, path) -> None:
    """Write nodes and weights as CSV with header x[,y],w."""
    header = ",".join([*("xy"[: rule.dim] if rule.dim <= 2 else []), "w"])
    data = np.column_stack([rule.nodes, rule.weights])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def from_csv(path, domain_tag: str) -> QuadratureRule:
    """Read a rule written by to_csv; normals are not round-tripped."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return QuadratureRule(data[:, :-1], data[:, -1], domain_tag)
