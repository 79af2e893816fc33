"""Shallow networks u(x) = sum_j c_j sigma(beta (x . W_j + b_j)) and their samples.

Derivatives with respect to both inputs and parameters are analytic.  For tanh
the chain runs off t = tanh(beta z):

    d/dz   sigma = beta (1 - t^2)
    d2/dz2 sigma = -2 beta^2 t (1 - t^2)
    d3/dz3 sigma = beta^3 (-2 + 8 t^2 - 6 t^4)

so one tanh evaluation prices the whole stack.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

_MAGIC = b"SHNET1\n"

# distinct second-derivative column layout per dimension
SECOND_PAIRS = {1: ((0, 0),), 2: ((0, 0), (0, 1), (1, 1))}


@dataclass(frozen=True)
class ActivationSpec:
    """Base nonlinearity and its input scale; sigma(z) = base(beta * z)."""

    name: str = "tanh"
    beta: float = 1.0

    def __post_init__(self):
        if self.name not in ("tanh", "relu"):
            raise ValueError(f"unsupported activation {self.name!r}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def max_order(self) -> int:
        return 3 if self.name == "tanh" else 1

    def stack(self, z: np.ndarray, order: int) -> list[np.ndarray]:
        """[sigma, sigma', ..., sigma^(order)] as functions of z."""
        if order > self.max_order:
            raise ValueError(
                f"{self.name} supplies derivatives up to order {self.max_order}, "
                f"got request for {order}"
            )
        beta = self.beta
        if self.name == "tanh":
            t = np.tanh(beta * z)
            out = [t]
            if order >= 1:
                one_m_t2 = 1.0 - t * t
                out.append(beta * one_m_t2)
            if order >= 2:
                out.append(-2.0 * beta * beta * t * one_m_t2)
            if order >= 3:
                t2 = t * t
                out.append(beta**3 * (-2.0 + 8.0 * t2 - 6.0 * t2 * t2))
            return out
        # relu
        out = [np.maximum(beta * z, 0.0)]
        if order >= 1:
            out.append(beta * (z > 0.0).astype(float))
        return out


@dataclass(frozen=True)
class FieldSample:
    """A scalar field and its derivatives at a fixed point set.

    gradient has one column per space dimension; second holds the distinct
    second derivatives (1-D: u''; 2-D: u_xx, u_xy, u_yy).
    """

    values: np.ndarray
    gradient: np.ndarray | None
    second: np.ndarray | None
    order: int

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        if self.gradient is not None:
            return self.gradient.shape[1]
        return 1

    def laplacian(self) -> np.ndarray:
        if self.second is None:
            raise ValueError("sample was taken without second derivatives")
        if self.second.shape[1] == 1:
            return self.second[:, 0]
        return self.second[:, 0] + self.second[:, 2]

    def scaled(self, s: float) -> "FieldSample":
        return FieldSample(
            s * self.values,
            None if self.gradient is None else s * self.gradient,
            None if self.second is None else s * self.second,
            self.order,
        )


def combine_samples(samples: list[FieldSample], coefs: np.ndarray) -> FieldSample:
    """Linear combination sum_k coefs[k] * samples[k]."""
    if len(samples) != len(coefs):
        raise ValueError("coefficient count mismatch")
    if not samples:
        raise ValueError("empty combination")
    values = sum(c * s.values for c, s in zip(coefs, samples))
    gradient = None
    if samples[0].gradient is not None:
        gradient = sum(c * s.gradient for c, s in zip(coefs, samples))
    second = None
    if samples[0].second is not None:
        second = sum(c * s.second for c, s in zip(coefs, samples))
    return FieldSample(values, gradient, second, samples[0].order)


def zero_sample(n: int, dim: int, order: int) -> FieldSample:
    return FieldSample(
        np.zeros(n),
        np.zeros((n, dim)) if order >= 1 else None,
        np.zeros((n, len(SECOND_PAIRS[dim]))) if order >= 2 else None,
        order,
    )


@dataclass(frozen=True)
class ShallowNetwork:
    """One hidden layer of n units over d inputs; weights (d, n), biases and coefficients (n,)."""

    weights: np.ndarray
    biases: np.ndarray
    coefficients: np.ndarray
    activation: ActivationSpec

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.weights, dtype=float))
        b = np.asarray(self.biases, dtype=float).ravel()
        c = np.asarray(self.coefficients, dtype=float).ravel()
        if W.shape[1] != b.shape[0] or b.shape[0] != c.shape[0]:
            raise ValueError("inconsistent unit counts across W, b, c")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "coefficients", c)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]


def _as_points(points: np.ndarray, dim: int) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != dim:
        raise ValueError(f"points have dimension {X.shape[1]}, network expects {dim}")
    return X


def eval_stack(net: ShallowNetwork, points: np.ndarray, order: int = 0) -> FieldSample:
    """Evaluate the network and derivatives up to `order` at the given points."""
    X = _as_points(points, net.dim)
    Z = X @ net.weights + net.biases
    s = net.activation.stack(Z, order)
    c = net.coefficients
    values = s[0] @ c
    gradient = None
    second = None
    if order >= 1:
        gradient = (s[1] * c) @ net.weights.T
    if order >= 2:
        pairs = SECOND_PAIRS[net.dim]
        cols = [
            (s[2] * c) @ (net.weights[a] * net.weights[b]) for a, b in pairs
        ]
        second = np.column_stack(cols)
    return FieldSample(values, gradient, second, order)


@dataclass(frozen=True)
class ParamGradient:
    """Per-parameter derivatives of a network sample.

    Parameters are ordered as W.ravel() (row-major, all first-coordinate weights
    then the next coordinate) followed by the biases; c is held fixed.
    """

    dvalues: np.ndarray            # (P, N)
    dgradient: np.ndarray | None   # (P, N, d)
    dsecond: np.ndarray | None     # (P, N, n_pairs)


def param_gradient_stack(net: ShallowNetwork, points: np.ndarray, order: int = 0) -> ParamGradient:
    """d/dtheta of eval_stack for theta = (W, b), suitable for finite-difference checks.

    Derivatives of order-k sample entries need sigma^(k+1), so the activation
    must supply one more derivative than `order`.
    """
    X = _as_points(points, net.dim)
    d, n = net.weights.shape
    N = X.shape[0]
    Z = X @ net.weights + net.biases
    s = net.activation.stack(Z, order + 1)
    c = net.coefficients
    W = net.weights
    pairs = SECOND_PAIRS[net.dim]
    P = n * (d + 1)
    dvalues = np.zeros((P, N))
    cs1 = c * s[1]
    for a in range(d):
        dvalues[a * n : (a + 1) * n, :] = (cs1 * X[:, a][:, None]).T
    dvalues[d * n :, :] = cs1.T

    dgradient = None
    if order >= 1:
        cs2 = c * s[2]
        dgradient = np.zeros((P, N, d))
        for g in range(d):
            common = cs2 * W[g]  # (N, n)
            for a in range(d):
                block = common * X[:, a][:, None]
                if a == g:
                    block = block + cs1
                dgradient[a * n : (a + 1) * n, :, g] = block.T
            dgradient[d * n :, :, g] = common.T

    dsecond = None
    if order >= 2:
        cs3 = c * s[3]
        cs2 = c * s[2]
        dsecond = np.zeros((P, N, len(pairs)))
        for col, (p, q) in enumerate(pairs):
            wpq = W[p] * W[q]
            base = cs3 * wpq  # (N, n)
            for a in range(d):
                block = base * X[:, a][:, None]
                extra = np.zeros(n)
                if a == p:
                    extra = extra + W[q]
                if a == q:
                    extra = extra + W[p]
                block = block + cs2 * extra
                dsecond[a * n : (a + 1) * n, :, col] = block.T
            dsecond[d * n :, :, col] = base.T
    return ParamGradient(dvalues, dgradient, dsecond)


def scale_output(net: ShallowNetwork, s: float) -> ShallowNetwork:
    """Rescale the output layer; used to energy-normalize trained networks."""
    return replace(net, coefficients=s * net.coefficients)


def theta_norm(net: ShallowNetwork) -> float:
    """max|W| + max|b| + max|c|; monitored during training, never enforced."""
    return float(
        np.max(np.abs(net.weights))
        + np.max(np.abs(net.biases))
        + np.max(np.abs(net.coefficients))
    )


# ---------------------------------------------------------------------------
# hidden-layer initialization

_DIAGONAL_FAMILIES = np.array(
    [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]
)
_DIAGONAL_FAMILIES[2:] /= np.sqrt(2.0)


def init_hidden(
    strategy: str, n: int, bounds: np.ndarray, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Initial (W, b) for n hidden units on a domain with bounding box `bounds` ((d, 2)).

    uniform_bias_1d: unit input weights, kinks at j/n across the unit interval.
    axis_diagonal_2d: unit directions cycling through the two axes and both
        diagonals, bias offsets sweeping each family across the domain.
    box_init: random unit directions; each plane passes through a point drawn
        uniformly in the bounding box.
    """
    bounds = np.asarray(bounds, dtype=float)
    if n < 1:
        raise ValueError("need at least one unit")
    if strategy == "uniform_bias_1d":
        if bounds.shape != (1, 2):
            raise ValueError("uniform_bias_1d is one-dimensional")
        h = 1.0 / n
        W = np.ones((1, n))
        b = -h * np.arange(1, n + 1, dtype=float)
        return W, b
    if strategy == "axis_diagonal_2d":
        if bounds.shape != (2, 2):
            raise ValueError("axis_diagonal_2d is two-dimensional")
        center = bounds.mean(axis=1)
        halfwidth = 0.5 * (bounds[:, 1] - bounds[:, 0])
        W = np.empty((2, n))
        b = np.empty(n)
        families = [np.arange(f, n, 4) for f in range(4)]
        for f, members in enumerate(families):
            u = _DIAGONAL_FAMILIES[f]
            # extent of the box projected on u
            ext = abs(u[0]) * halfwidth[0] + abs(u[1]) * halfwidth[1]
            m = len(members)
            offsets = center @ u + ext * (2.0 * (np.arange(m) + 1.0) / (m + 1.0) - 1.0)
            W[:, members] = u[:, None]
            b[members] = -offsets
        return W, b
    if strategy == "box_init":
        if rng is None:
            raise ValueError("box_init needs a random generator")
        d = bounds.shape[0]
        dirs = rng.standard_normal((d, n))
        dirs /= np.linalg.norm(dirs, axis=0, keepdims=True)
        p = rng.uniform(bounds[:, 0], bounds[:, 1], size=(n, d))
        b = -np.einsum("jd,dj->j", p, dirs)
        return dirs, b
    raise ValueError(f"unknown init strategy {strategy!r}")


# ---------------------------------------------------------------------------
# checkpoint format: magic, one ascii header line
# "d n activation beta_hex\n", then W (row-major), b, c as little-endian float64

def save(net: ShallowNetwork, path) -> None:
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(
            f"{net.dim} {net.width} {net.activation.name} "
            f"{float(net.activation.beta).hex()}\n".encode()
        )
        f.write(np.ascontiguousarray(net.weights, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(net.biases, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(net.coefficients, dtype="<f8").tobytes())


def load(path) -> ShallowNetwork:
    with open(path, "rb") as f:
        magic = f.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError("not a network checkpoint")
        # read the header line byte by byte to keep the payload offset exact
        line = b""
        while not line.endswith(b"\n"):
            ch = f.read(1)
            if not ch:
                raise ValueError("truncated checkpoint header")
            line += ch
        d_s, n_s, name, beta_hex = line.decode().split()
        d, n = int(d_s), int(n_s)
        payload = f.read()
    need = 8 * (d * n + n + n)
    if len(payload) != need:
        raise ValueError("checkpoint payload size mismatch")
    W = np.frombuffer(payload[: 8 * d * n], dtype="<f8").reshape(d, n).copy()
    b = np.frombuffer(payload[8 * d * n : 8 * d * n + 8 * n], dtype="<f8").copy()
    c = np.frombuffer(payload[8 * d * n + 8 * n :], dtype="<f8").copy()
    return ShallowNetwork(W, b, c, ActivationSpec(name, float.fromhex(beta_hex)))
