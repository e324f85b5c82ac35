"""Fully connected scalar networks with hand-rolled differentiation.

A network of depth D maps x through D affine layers, the first D-1 followed
by a smooth componentwise activation (tanh or logistic, both bounded by one
together with their first two derivatives' relevant constants).  Every
parameter entry is kept inside [-weight_bound, weight_bound] by projection.

Differentiation is done in two sweeps and no framework:

* input gradients ride along the forward pass dual-number style, one tangent
  column per input coordinate (the `G` arrays below);
* parameter gradients of any sampled objective that is a function of u(x)
  and grad u(x) come from a reverse sweep over that extended forward pass,
  so gradient-of-|grad u|^2 terms are exact to rounding.

The flat parameter layout is [A_1 row-major, b_1, A_2, b_2, ...]; binary
save/load round-trips bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .geometry import SampleBatch
from .ritz import EllipticProblem, LossBreakdown, breakdown_from_values, loss_output_adjoints

__all__ = [
    "NetworkArch",
    "NetworkParams",
    "EvalResult",
    "NetworkFunction",
    "init_params",
    "project_weights",
    "forward",
    "forward_with_input_grad",
    "loss_param_gradient",
    "empirical_loss_and_gradient",
    "save_params",
    "load_params",
]


# activation name -> (value, first derivative, second derivative)
def _tanh(x):
    return np.tanh(x)


def _tanh_d1(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _tanh_d2(x):
    t = np.tanh(x)
    return -2.0 * t * (1.0 - t * t)


def _logistic(x):
    return expit(x)


def _logistic_d1(x):
    s = expit(x)
    return s * (1.0 - s)


def _logistic_d2(x):
    s = expit(x)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


ACTIVATIONS = {
    "tanh": (_tanh, _tanh_d1, _tanh_d2),
    "logistic": (_logistic, _logistic_d1, _logistic_d2),
}


@dataclass(frozen=True)
class NetworkArch:
    """Layer widths n_0..n_D, activation name, and the weight box bound.

    Depth D is the number of affine layers (len(widths) - 1, at least 2);
    the output width must be 1 and the weight bound at least 1.
    """

    widths: tuple[int, ...]
    activation: str = "tanh"
    weight_bound: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 3:
            raise ValueError("need depth >= 2, i.e. at least widths (n0, n1, 1)")
        if any(w < 1 for w in self.widths):
            raise ValueError("all layer widths must be positive")
        if self.widths[-1] != 1:
            raise ValueError("output width must be 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation: {self.activation!r}")
        if not (self.weight_bound >= 1.0):
            raise ValueError("weight_bound must be >= 1")

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    def total_weight_count(self) -> int:
        """Total number of parameters (matrix entries plus biases)."""
        return sum(
            self.widths[k] * self.widths[k - 1] + self.widths[k]
            for k in range(1, len(self.widths))
        )

    def hidden_width_product(self) -> int:
        prod = 1
        for w in self.widths[1:-1]:
            prod *= w
        return prod


@dataclass
class NetworkParams:
    """Weight matrices A_k (n_k x n_{k-1}) and bias vectors b_k (n_k,)."""

    weights: list
    biases: list

    def flatten(self) -> np.ndarray:
        parts = []
        for a, b in zip(self.weights, self.biases):
            parts.append(a.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @staticmethod
    def unflatten(arch: NetworkArch, theta: np.ndarray) -> "NetworkParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (arch.total_weight_count(),):
            raise ValueError(
                f"expected {arch.total_weight_count()} parameters, got {theta.shape}"
            )
        weights, biases, pos = [], [], 0
        for k in range(1, len(arch.widths)):
            rows, cols = arch.widths[k], arch.widths[k - 1]
            weights.append(theta[pos : pos + rows * cols].reshape(rows, cols).copy())
            pos += rows * cols
            biases.append(theta[pos : pos + rows].copy())
            pos += rows
        return NetworkParams(weights, biases)

    def copy(self) -> "NetworkParams":
        return NetworkParams([a.copy() for a in self.weights], [b.copy() for b in self.biases])

    def inf_norm(self) -> float:
        return max(
            max((float(np.abs(a).max()) for a in self.weights), default=0.0),
            max((float(np.abs(b).max()) for b in self.biases), default=0.0),
        )


def init_params(arch: NetworkArch, scheme: str = "uniform_scaled", seed: int = 0) -> NetworkParams:
    """Initialize parameters.

    ``uniform_scaled`` draws every entry of layer k from uniform(-s, s) with
    s = min(weight_bound, sqrt(6 / (n_in + n_out))); ``zero`` gives the zero
    network.
    """
    if scheme == "zero":
        return NetworkParams(
            [np.zeros((arch.widths[k], arch.widths[k - 1])) for k in range(1, len(arch.widths))],
            [np.zeros(arch.widths[k]) for k in range(1, len(arch.widths))],
        )
    if scheme != "uniform_scaled":
        raise ValueError(f"unknown init scheme: {scheme!r}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    weights, biases = [], []
    for k in range(1, len(arch.widths)):
        n_out, n_in = arch.widths[k], arch.widths[k - 1]
        s = min(arch.weight_bound, math.sqrt(6.0 / (n_in + n_out)))
        weights.append(rng.uniform(-s, s, size=(n_out, n_in)))
        biases.append(rng.uniform(-s, s, size=n_out))
    return NetworkParams(weights, biases)


def project_weights(params: NetworkParams, bound: float) -> NetworkParams:
    """Clamp every entry into [-bound, bound]; idempotent."""
    return NetworkParams(
        [np.clip(a, -bound, bound) for a in params.weights],
        [np.clip(b, -bound, bound) for b in params.biases],
    )


# ---------------------------------------------------------------------------
# evaluation


def _check_params(arch: NetworkArch, params: NetworkParams):
    if len(params.weights) != arch.depth or len(params.biases) != arch.depth:
        raise ValueError("parameter layer count does not match the architecture")
    for k in range(1, len(arch.widths)):
        if params.weights[k - 1].shape != (arch.widths[k], arch.widths[k - 1]):
            raise ValueError(f"layer {k} weight shape mismatch")
        if params.biases[k - 1].shape != (arch.widths[k],):
            raise ValueError(f"layer {k} bias shape mismatch")


def _as_batch(arch: NetworkArch, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != arch.input_dim:
        raise ValueError(f"input dimension {arr.shape[1]} != network input {arch.input_dim}")
    return arr, single


def _forward_pass(arch: NetworkArch, params: NetworkParams, xs: np.ndarray, need_grad: bool):
    """Run the layered recursion, optionally carrying input-tangent columns.

    Returns a cache dict for the reverse sweep: f[k] are post-activation
    values ((B, n_k), f[0] = xs), z[k] pre-activations, and when need_grad,
    G[k] = d f[k] / d x ((B, n_k, d)) with H[k] the pre-activation tangents.
    """
    act, act_d1, _ = ACTIVATIONS[arch.activation]
    B, d = xs.shape
    f = [xs]
    z = [None]
    G = [np.broadcast_to(np.eye(d), (B, d, d))] if need_grad else None
    H = [None] if need_grad else None
    for k in range(1, arch.depth):
        A, b = params.weights[k - 1], params.biases[k - 1]
        zk = f[-1] @ A.T + b
        z.append(zk)
        f.append(act(zk))
        if need_grad:
            Hk = np.einsum("qr,brd->bqd", A, G[-1])
            H.append(Hk)
            G.append(act_d1(zk)[:, :, None] * Hk)
    A, b = params.weights[-1], params.biases[-1]
    u = f[-1] @ A[0] + b[0]
    grad = np.einsum("q,bqd->bd", A[0], G[-1]) if need_grad else None
    return {"f": f, "z": z, "G": G, "H": H, "u": u, "grad": grad}


@dataclass(frozen=True)
class EvalResult:
    """Network outputs: values, and input gradients when requested."""

    value: np.ndarray
    input_gradient: np.ndarray | None = None


def forward(arch: NetworkArch, params: NetworkParams, x):
    """u(x); scalar for a single point, (n,) array for an (n, d) batch."""
    _check_params(arch, params)
    xs, single = _as_batch(arch, x)
    u = _forward_pass(arch, params, xs, need_grad=False)["u"]
    return float(u[0]) if single else u


def forward_with_input_grad(arch: NetworkArch, params: NetworkParams, x) -> EvalResult:
    """u(x) together with grad_x u(x), exact to rounding."""
    _check_params(arch, params)
    xs, single = _as_batch(arch, x)
    cache = _forward_pass(arch, params, xs, need_grad=True)
    if single:
        return EvalResult(value=float(cache["u"][0]), input_gradient=cache["grad"][0])
    return EvalResult(value=cache["u"], input_gradient=cache["grad"])


# ---------------------------------------------------------------------------
# reverse sweep


def _backprop(arch: NetworkArch, params: NetworkParams, cache, du, dgrad):
    """Gradients w.r.t. parameters of sum_i [du_i u(x_i) + dgrad_i . grad u(x_i)].

    ``dgrad`` may be None for value-only objectives (boundary terms).  The
    reverse sweep mirrors the extended forward pass: second activation
    derivatives enter exactly where tangent columns were scaled.
    """
    _, act_d1, act_d2 = ACTIVATIONS[arch.activation]
    f, z, G, H = cache["f"], cache["z"], cache["G"], cache["H"]
    gW = [None] * arch.depth
    gb = [None] * arch.depth
    A_out = params.weights[-1][0]  # (n_{D-1},)

    gA = np.einsum("b,bq->q", du, f[-1])
    if dgrad is not None:
        gA = gA + np.einsum("bp,bqp->q", dgrad, G[-1])
    gW[-1] = gA[None, :]
    gb[-1] = np.array([du.sum()])
    fbar = du[:, None] * A_out[None, :]
    Gbar = dgrad[:, None, :] * A_out[None, :, None] if dgrad is not None else None

    for k in range(arch.depth - 1, 0, -1):
        s1 = act_d1(z[k])
        zbar = s1 * fbar
        Hbar = None
        if Gbar is not None:
            s2 = act_d2(z[k])
            Hbar = s1[:, :, None] * Gbar
            zbar = zbar + s2 * np.einsum("bqd,bqd->bq", Gbar, H[k])
        gW[k - 1] = np.einsum("bq,br->qr", zbar, f[k - 1])
        if Hbar is not None:
            gW[k - 1] = gW[k - 1] + np.einsum("bqd,brd->qr", Hbar, G[k - 1])
        gb[k - 1] = zbar.sum(axis=0)
        if k > 1:
            A = params.weights[k - 1]
            fbar = zbar @ A
            if Hbar is not None:
                Gbar = np.einsum("qr,bqd->brd", A, Hbar)
    return NetworkParams(gW, gb).flatten()


def empirical_loss_and_gradient(
    arch: NetworkArch,
    params: NetworkParams,
    batch: SampleBatch,
    problem: EllipticProblem,
) -> tuple[LossBreakdown, np.ndarray]:
    """Sampled energy and its exact parameter gradient, sharing one forward pass."""
    _check_params(arch, params)
    interior = np.asarray(batch.interior, dtype=float)
    boundary = np.asarray(batch.boundary, dtype=float)
    cache_i = _forward_pass(arch, params, interior, need_grad=True)
    cache_b = _forward_pass(arch, params, boundary, need_grad=False)
    breakdown = breakdown_from_values(
        problem, batch, cache_i["u"], cache_i["grad"], cache_b["u"]
    )
    du_i, dgrad_i, du_b = loss_output_adjoints(
        problem, batch, cache_i["u"], cache_i["grad"], cache_b["u"]
    )
    grad = _backprop(arch, params, cache_i, du_i, dgrad_i)
    grad += _backprop(arch, params, cache_b, du_b, None)
    return breakdown, grad


def loss_param_gradient(
    arch: NetworkArch,
    params: NetworkParams,
    batch: SampleBatch,
    problem: EllipticProblem,
) -> np.ndarray:
    """Flat gradient of the sampled energy w.r.t. all parameters."""
    return empirical_loss_and_gradient(arch, params, batch, problem)[1]


@dataclass(frozen=True)
class NetworkFunction:
    """Adapter exposing a parameterized network as a scalar field."""

    arch: NetworkArch
    params: NetworkParams

    def value(self, points):
        return forward(self.arch, self.params, points)

    def value_and_grad(self, points):
        res = forward_with_input_grad(self.arch, self.params, points)
        return res.value, res.input_gradient

    def __call__(self, points):
        return self.value(points)


# ---------------------------------------------------------------------------
# persistence

_MAGIC = "ritzlab-params-v1"


def save_params(path, arch: NetworkArch, params: NetworkParams) -> None:
    """Write a one-line JSON architecture header plus little-endian float64 data."""
    _check_params(arch, params)
    header = {
        "format": _MAGIC,
        "depth": arch.depth,
        "widths": list(arch.widths),
        "activation": arch.activation,
        "weight_bound": arch.weight_bound,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(params.flatten().astype("<f8").tobytes())


def load_params(path) -> tuple[NetworkArch, NetworkParams]:
    """Inverse of :func:`save_params`; bit-exact round trip."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        raw = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("format") != _MAGIC:
        raise ValueError("not a recognized parameter file")
    arch = NetworkArch(
        widths=tuple(header["widths"]),
        activation=header["activation"],
        weight_bound=float(header["weight_bound"]),
    )
    theta = np.frombuffer(raw, dtype="<f8").astype(float)
    return arch, NetworkParams.unflatten(arch, theta)
