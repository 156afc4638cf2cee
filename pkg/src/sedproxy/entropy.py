"""Numerical checks of the local-entropy propositions behind SED.

Feature maps are numpy arrays laid out ``(w, h, c)``; 2-D input is treated
as a single channel. Entropies are in bits. Monte-Carlo routines seed one
generator per trial from ``(seed, trial)``, so a given ``(seed, trials)``
reproduces exactly however the work is chunked.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .arch import KernelSpec, PoolSpec, StrideSpec

__all__ = [
    "DomainError",
    "FeatureField",
    "SubtensorWindow",
    "GaussianFieldSpec",
    "Report",
    "one_dim_entropy",
    "gaussian_entropy",
    "gaussian_entropy_many",
    "max_pool",
    "conv2d",
    "zero_entropy_window_exists",
    "prop2_bound",
    "verify_prop1",
    "verify_prop2",
    "verify_prop3",
    "verify_prop4",
    "verify_prop4_random",
    "random_pd",
    "IID_THRESHOLD",
]

LOG2_2PIE = math.log2(2 * math.pi * math.e)
# iid coordinates have non-negative entropy iff the variance reaches this
IID_THRESHOLD = 1.0 / (2 * math.pi * math.e)


class DomainError(ValueError):
    pass


def _as_field(x) -> np.ndarray:
    arr = x.entries if isinstance(x, FeatureField) else np.asarray(x, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DomainError(f"feature field must be 2-D or 3-D, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class FeatureField:
    """A ``w x h x c`` feature map."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.size == 0:
            raise DomainError(f"feature field must be a non-empty w x h x c array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("feature field entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def w(self) -> int:
        return self.entries.shape[0]

    @property
    def h(self) -> int:
        return self.entries.shape[1]

    @property
    def c(self) -> int:
        return self.entries.shape[2]


@dataclass(frozen=True)
class SubtensorWindow:
    """Index sequences selecting ``X[alpha; beta; gamma]`` (0-based)."""

    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    gamma: tuple[int, ...] = (0,)

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            seq = tuple(int(i) for i in getattr(self, name))
            if not seq:
                raise DomainError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise DomainError(f"{name} must be strictly increasing")
            if seq[0] < 0:
                raise DomainError(f"{name} indices must be non-negative")
            object.__setattr__(self, name, seq)

    @classmethod
    def box(cls, i: int, j: int, k_w: int, k_h: int, v: int = 0, k_c: int = 1) -> "SubtensorWindow":
        """Contiguous block with corner ``(i, j, v)``."""
        return cls(tuple(range(i, i + k_w)), tuple(range(j, j + k_h)), tuple(range(v, v + k_c)))

    @classmethod
    def centered(cls, i: int, j: int, k_w: int, k_h: int, stride: StrideSpec = StrideSpec()) -> "SubtensorWindow":
        """The window a convolution at output position ``(i, j)`` reads.

        Centre ``(i*s_1, j*s_2)`` with half-width ``k // 2`` on each side.
        """
        ci, cj = i * stride.s_1, j * stride.s_2
        return cls(
            tuple(range(ci - k_w // 2, ci + k_w // 2 + 1)),
            tuple(range(cj - k_h // 2, cj + k_h // 2 + 1)),
        )

    @property
    def volume(self) -> int:
        return len(self.alpha) * len(self.beta) * len(self.gamma)

    def fits(self, shape: Sequence[int]) -> bool:
        w, h, c = shape
        return self.alpha[-1] < w and self.beta[-1] < h and self.gamma[-1] < c

    def apply(self, x) -> np.ndarray:
        arr = _as_field(x)
        if not self.fits(arr.shape):
            raise DomainError(f"window out of bounds for field of shape {arr.shape}")
        return arr[np.ix_(self.alpha, self.beta, self.gamma)]

    def flat_indices(self, shape: Sequence[int]) -> np.ndarray:
        """Positions of the window's entries in the C-order flattened field."""
        if not self.fits(shape):
            raise DomainError(f"window out of bounds for field of shape {tuple(shape)}")
        grid = np.ix_(self.alpha, self.beta, self.gamma)
        return np.ravel_multi_index(grid, tuple(shape)).ravel()


@dataclass(frozen=True)
class GaussianFieldSpec:
    """``N(mean, cov)`` over the flattened entries of a ``shape`` field."""

    mean: np.ndarray
    cov: np.ndarray
    shape: Optional[tuple[int, int, int]] = None

    def __post_init__(self):
        cov = np.array(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] == 0:
            raise DomainError(f"covariance must be a non-empty square matrix, got shape {cov.shape}")
        n = cov.shape[0]
        mean = np.zeros(n) if self.mean is None else np.array(self.mean, dtype=float).reshape(-1)
        if mean.shape != (n,):
            raise DomainError(f"mean has length {mean.size}, covariance is {n}x{n}")
        if not (np.all(np.isfinite(cov)) and np.all(np.isfinite(mean))):
            raise DomainError("mean and covariance must be finite")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise DomainError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov)[0] < -1e-10:
            raise DomainError("covariance is not positive semidefinite")
        shape = (n, 1, 1) if self.shape is None else tuple(int(s) for s in self.shape)
        if len(shape) != 3 or math.prod(shape) != n:
            raise DomainError(f"shape {shape} does not hold {n} entries")
        for arr in (mean, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self) -> int:
        return self.cov.shape[0]

    def window_cov(self, window: SubtensorWindow) -> np.ndarray:
        idx = window.flat_indices(self.shape)
        return self.cov[np.ix_(idx, idx)]


# ---------------------------------------------------------------------------
# estimators


def one_dim_entropy(x) -> float:
    """Empirical entropy (bits) of the value histogram, exact-equality bins."""
    arr = np.asarray(x.entries if isinstance(x, FeatureField) else x, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError("entropy of an empty tensor is undefined")
    _, counts = np.unique(arr, return_counts=True)
    if counts.size == 1:
        return 0.0
    p = counts / arr.size
    return float(-np.sum(p * np.log2(p)))


def _logdet(cov: np.ndarray) -> float:
    """Natural log-determinant of a PSD matrix; -inf if singular."""
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eig = np.linalg.eigvalsh(cov)
        if eig[0] < -1e-10 * max(1.0, abs(eig[-1])):
            raise DomainError("covariance is not positive semidefinite") from None
        return -math.inf
    diag = np.diagonal(chol)
    if np.any(diag <= 0):
        return -math.inf
    return float(2.0 * np.sum(np.log(diag)))


def gaussian_entropy(spec: Union[GaussianFieldSpec, np.ndarray]) -> float:
    """Differential entropy in bits, ``0.5 * log2((2 pi e)^n det cov)``.

    Returns ``-inf`` for a singular covariance and raises DomainError for
    one that is not positive semidefinite.
    """
    cov = spec.cov if isinstance(spec, GaussianFieldSpec) else np.asarray(spec, dtype=float)
    if cov.ndim == 0:
        cov = cov.reshape(1, 1)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DomainError(f"covariance must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
        raise DomainError("covariance is not symmetric")
    logdet = _logdet(cov)
    if logdet == -math.inf:
        return -math.inf
    n = cov.shape[0]
    return 0.5 * (n * LOG2_2PIE + logdet / math.log(2))


def gaussian_entropy_many(covs: np.ndarray) -> np.ndarray:
    """``gaussian_entropy`` over a stack ``(B, n, n)`` of covariances."""
    covs = np.asarray(covs, dtype=float)
    n = covs.shape[-1]
    try:
        chol = np.linalg.cholesky(covs)
    except np.linalg.LinAlgError:
        return np.array([gaussian_entropy(c) for c in covs])
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)
    return 0.5 * (n * LOG2_2PIE + logdet / math.log(2))


# ---------------------------------------------------------------------------
# sliding windows


def max_pool(x, pool: PoolSpec, stride: StrideSpec = StrideSpec()) -> np.ndarray:
    """Per-channel sliding-window max, no padding.

    Output is ``(w - o_w) // s_1 + 1`` by ``(h - o_h) // s_2 + 1`` by ``c``.
    """
    arr = _as_field(x)
    w, h, _ = arr.shape
    if pool.o_w > w or pool.o_h > h:
        raise DomainError(f"pool {pool.o_w}x{pool.o_h} larger than field {w}x{h}")
    win = sliding_window_view(arr, (pool.o_w, pool.o_h), axis=(0, 1))
    return win[:: stride.s_1, :: stride.s_2].max(axis=(-2, -1))


def _pool_batch(fields: np.ndarray, o_w: int, o_h: int, s_1: int, s_2: int) -> np.ndarray:
    win = sliding_window_view(fields, (o_w, o_h), axis=(1, 2))
    return win[:, ::s_1, ::s_2].max(axis=(-2, -1))


def conv2d(x, kernel: np.ndarray, stride: StrideSpec = StrideSpec()) -> np.ndarray:
    """Valid-mode discrete convolution (kernel flipped on every axis).

    ``x`` is ``(w, h, c)`` and ``kernel`` is ``(k_w, k_h, c)``; the result is
    the 2-D map of sums, one per window position.
    """
    arr = _as_field(x)
    k = np.asarray(kernel, dtype=float)
    if k.ndim == 2:
        k = k[:, :, None]
    if k.shape[2] != arr.shape[2]:
        raise DomainError("kernel and field channel counts differ")
    if k.shape[0] > arr.shape[0] or k.shape[1] > arr.shape[1]:
        raise DomainError("kernel larger than field")
    win = sliding_window_view(arr, k.shape[:2], axis=(0, 1))[:: stride.s_1, :: stride.s_2]
    # win: (W', H', c, k_w, k_h)
    flipped = k[::-1, ::-1, ::-1]
    return np.einsum("ijcab,abc->ij", win, flipped)


def _flat_windows(arr: np.ndarray, win_w: int, win_h: int) -> np.ndarray:
    """(..., W', H', c*win_w*win_h) view of every spatial window."""
    win = sliding_window_view(arr, (win_w, win_h), axis=(-3, -2))
    return win.reshape(win.shape[:-3] + (-1,))


def zero_entropy_window_exists(x, win_w: int, win_h: int, eps: Optional[float] = None) -> bool:
    """True iff some stride-1 ``win_w x win_h`` window (all channels) is constant.

    Exact equality by default; ``eps`` accepts windows whose value range is
    at most ``eps``.
    """
    arr = _as_field(x)
    if win_w > arr.shape[0] or win_h > arr.shape[1]:
        raise DomainError(f"window {win_w}x{win_h} larger than field {arr.shape[0]}x{arr.shape[1]}")
    win = _flat_windows(arr, win_w, win_h)
    spread = win.max(axis=-1) - win.min(axis=-1)
    return bool(np.any(spread <= (0.0 if eps is None else eps)))


def _zero_window_batch(fields: np.ndarray, win_w: int, win_h: int) -> np.ndarray:
    # fields: (B, W, H); returns bool (B,)
    if win_w > fields.shape[1] or win_h > fields.shape[2]:
        return np.zeros(fields.shape[0], dtype=bool)
    win = sliding_window_view(fields, (win_w, win_h), axis=(1, 2))
    lo = win.min(axis=(-2, -1))
    hi = win.max(axis=(-2, -1))
    return np.any(hi == lo, axis=(1, 2))


def prop2_bound(w: int, h: int, o_w: int, o_h: int) -> float:
    """``1 - 2 (max(o_w, o_h) - 2)(w + h) / (w h)``; may be vacuous (<= 0)."""
    if o_w > w or o_h > h:
        raise DomainError("pool larger than field")
    return 1.0 - 2.0 * (max(o_w, o_h) - 2) * (w + h) / (w * h)


# ---------------------------------------------------------------------------
# proposition reports


@dataclass
class Report:
    proposition: int
    parameters: dict
    seed: Optional[int]
    trials: Optional[int]
    statistic: float
    bound: Optional[float]
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "proposition": self.proposition,
            "parameters": self.parameters,
            "seed": self.seed,
            "trials": self.trials,
            "statistic": _jsonable(self.statistic),
            "bound": _jsonable(self.bound),
            "pass": self.passed,
            "details": _jsonable(self.details),
        }


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def verify_prop1(kernel: KernelSpec, trials: int, seed: int, margin: int = 2) -> Report:
    """Constant patches turn a convolution into the constant ``c * sum(K)``.

    Each trial draws kernel weights and a constant ``c``, convolves a
    constant field ``margin`` entries larger than the kernel on each side,
    and records the largest deviation from ``c * sum(K)`` over positions
    (before and after ReLU). A non-constant field with the same kernel is
    the negative control: its outputs should vary with position.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    w, h = kernel.k_w + 2 * margin, kernel.k_h + 2 * margin
    max_dev = 0.0
    varied = 0
    for t in range(trials):
        rng = _trial_rng(seed, t)
        k = rng.standard_normal((kernel.k_w, kernel.k_h, kernel.k_c))
        c = float(rng.uniform(-5.0, 5.0))
        out = conv2d(np.full((w, h, kernel.k_c), c), k)
        expected = c * float(k.sum())
        dev = max(
            float(np.max(np.abs(out - expected))),
            float(np.max(np.abs(np.maximum(out, 0.0) - max(expected, 0.0)))),
        )
        max_dev = max(max_dev, dev)
        control = conv2d(rng.standard_normal((w, h, kernel.k_c)), k)
        if np.ptp(control) > 1e-9:
            varied += 1
    control_rate = varied / trials
    passed = max_dev < 1e-12 and control_rate >= 0.99
    return Report(
        proposition=1,
        parameters={"k_w": kernel.k_w, "k_h": kernel.k_h, "k_c": kernel.k_c, "field": [w, h]},
        seed=seed,
        trials=trials,
        statistic=max_dev,
        bound=1e-12,
        passed=passed,
        details={"negative_control_rate": control_rate},
    )


def verify_prop2(
    w: int,
    h: int,
    pool: PoolSpec,
    stride: StrideSpec,
    trials: int,
    seed: int,
    distribution: str = "normal",
    levels: int = 16,
    chunk: int = 500,
) -> Report:
    """Monte-Carlo frequency of a zero-entropy window after max pooling.

    Fields are iid standard normal (``distribution="discrete"`` draws
    integers in ``[0, levels)`` instead). After pooling, the scan looks for
    a constant ``ceil(o_w/s_1) x ceil(o_h/s_2)`` window. The check passes
    when the frequency is at least ``bound - 2 * sqrt(bound (1 - bound) / trials)``.
    A bound outside ``(0, 1)`` says nothing and the report is marked trivial.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if distribution not in ("normal", "discrete"):
        raise ValueError(f"unknown distribution {distribution!r}")
    bound = prop2_bound(w, h, pool.o_w, pool.o_h)
    win_w = -(-pool.o_w // stride.s_1)
    win_h = -(-pool.o_h // stride.s_2)
    hits = 0
    for start in range(0, trials, chunk):
        stop = min(trials, start + chunk)
        fields = np.empty((stop - start, w, h))
        for t in range(start, stop):
            rng = _trial_rng(seed, t)
            if distribution == "normal":
                fields[t - start] = rng.standard_normal((w, h))
            else:
                fields[t - start] = rng.integers(0, levels, size=(w, h))
        pooled = _pool_batch(fields, pool.o_w, pool.o_h, stride.s_1, stride.s_2)
        hits += int(_zero_window_batch(pooled, win_w, win_h).sum())
    freq = hits / trials
    trivial = not 0.0 < bound < 1.0
    if trivial:
        threshold = None
        passed = True
    else:
        threshold = bound - 2.0 * math.sqrt(bound * (1.0 - bound) / trials)
        passed = freq >= threshold
    return Report(
        proposition=2,
        parameters={
            "w": w, "h": h, "o_w": pool.o_w, "o_h": pool.o_h, "s_1": stride.s_1, "s_2": stride.s_2,
            "window": [win_w, win_h], "distribution": distribution,
        },
        seed=seed,
        trials=trials,
        statistic=freq,
        bound=bound,
        passed=passed,
        details={"status": "trivial" if trivial else "checked", "threshold": threshold, "hits": hits},
    )


def _ar1(n: int, rho: float) -> np.ndarray:
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def random_pd(n: int, rng: np.random.Generator, min_eig: float = 1e-3, scale: float = 1.0) -> np.ndarray:
    """Random symmetric matrix with every eigenvalue >= ``scale * min_eig``."""
    g = rng.standard_normal((n, n))
    a = g @ g.T / n + min_eig * np.eye(n)
    a = scale * (a + a.T) / 2
    return a


def _as_size(s) -> tuple[int, int, int]:
    if isinstance(s, (int, np.integer)):
        return (int(s), 1, 1)
    t = tuple(int(v) for v in s)
    if len(t) == 2:
        t = t + (1,)
    if len(t) != 3 or min(t) < 1:
        raise DomainError(f"bad window size {s!r}")
    return t


def verify_prop3(
    model: str,
    sizes: Sequence,
    seed: int = 0,
    sigma2: float = 1.0,
    rho: float = 0.5,
) -> Report:
    """Compare Gaussian entropies of nested windows of different volume.

    ``model`` picks the field covariance: ``"iid"`` (``sigma2 * I``),
    ``"toeplitz"`` (separable AR(1) correlation ``rho`` per axis, scaled by
    ``sigma2``) or ``"random"`` (a seeded random PD matrix scaled by
    ``sigma2``). ``sizes`` are ``(k_w, k_h, k_c)`` triples; a bare integer
    ``v`` means ``(v, 1, 1)``. All windows share the origin corner.

    For every pair with volume_a >= volume_b the report records whether
    ``H(a) >= H(b)`` (1e-9 bit slack). Pairs with volume_a == 2 volume_b
    are listed but excluded from the verdict. Under ``iid`` the outcome
    flips at ``sigma2 = 1/(2 pi e)``.
    """
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    dims = [_as_size(s) for s in sizes]
    if len(dims) < 2:
        raise ValueError("need at least two window sizes")
    shape = tuple(max(d[i] for d in dims) for i in range(3))
    n = math.prod(shape)
    if model == "iid":
        cov = sigma2 * np.eye(n)
    elif model == "toeplitz":
        if not -1.0 < rho < 1.0:
            raise DomainError("toeplitz model needs |rho| < 1")
        cov = sigma2 * np.kron(np.kron(_ar1(shape[0], rho), _ar1(shape[1], rho)), _ar1(shape[2], rho))
    elif model == "random":
        cov = random_pd(n, np.random.default_rng(seed), scale=sigma2)
    else:
        raise ValueError(f"unknown covariance model {model!r}")
    spec = GaussianFieldSpec(None, cov, shape)
    ent = {}
    for d in dims:
        ent[d] = gaussian_entropy(spec.window_cov(SubtensorWindow.box(0, 0, d[0], d[1], 0, d[2])))
    pairs = []
    for a, b in itertools.permutations(dict.fromkeys(dims), 2):
        va, vb = math.prod(a), math.prod(b)
        if va < vb or (va == vb and a < b):
            continue
        pairs.append({
            "larger": list(a), "smaller": list(b), "volume_larger": va, "volume_smaller": vb,
            "h_larger": ent[a], "h_smaller": ent[b],
            "holds": bool(ent[a] >= ent[b] - 1e-9),
            "excluded": va == 2 * vb,
        })
    judged = [p for p in pairs if not p["excluded"]]
    passed = all(p["holds"] for p in judged)
    worst = min((p["h_larger"] - p["h_smaller"] for p in judged), default=0.0)
    return Report(
        proposition=3,
        parameters={"model": model, "sizes": [list(d) for d in dims], "sigma2": sigma2, "rho": rho},
        seed=seed,
        trials=None,
        statistic=worst,
        bound=0.0,
        passed=passed,
        details={
            "pairs": pairs,
            "iid_threshold": IID_THRESHOLD,
            "regime": "confirming" if passed else "refuting",
        },
    )


def _all_boxes(shape: Sequence[int]) -> list[SubtensorWindow]:
    w, h, c = shape
    out = []
    for i, kw in itertools.product(range(w), range(1, w + 1)):
        if i + kw > w:
            continue
        for j, kh in itertools.product(range(h), range(1, h + 1)):
            if j + kh > h:
                continue
            out.append(SubtensorWindow.box(i, j, kw, kh, 0, c))
    return out


def verify_prop4(
    spec1: GaussianFieldSpec,
    spec2: GaussianFieldSpec,
    windows: Optional[Iterable[SubtensorWindow]] = None,
) -> Report:
    """Entropy of the sum of two independent fields beats either field alone.

    For each window, compares ``H((X1 + X2)[W])`` (covariance
    ``cov1 + cov2``) with ``max(H(X1[W]), H(X2[W]))`` analytically. The
    default windows are every contiguous spatial box spanning all channels.
    Windows where both addends are singular are recorded as degenerate.
    """
    if spec1.shape != spec2.shape:
        raise DomainError("fields must have the same shape")
    windows = list(_all_boxes(spec1.shape) if windows is None else windows)
    rows = []
    min_gap = math.inf
    passed = True
    for win in windows:
        c1, c2 = spec1.window_cov(win), spec2.window_cov(win)
        h1, h2 = gaussian_entropy(c1), gaussian_entropy(c2)
        hs = gaussian_entropy(c1 + c2)
        top = max(h1, h2)
        if top == -math.inf:
            rows.append({"volume": win.volume, "h_sum": hs, "h1": h1, "h2": h2, "gap": math.inf, "case": "degenerate"})
            continue
        gap = hs - top
        both_pd = h1 > -math.inf and h2 > -math.inf
        holds = gap > 0
        if both_pd and not holds:
            passed = False
        min_gap = min(min_gap, gap)
        rows.append({"volume": win.volume, "h_sum": hs, "h1": h1, "h2": h2, "gap": gap,
                     "case": "pd" if both_pd else "singular", "holds": holds})
    return Report(
        proposition=4,
        parameters={"dim": spec1.dim, "shape": list(spec1.shape), "windows": len(windows)},
        seed=None,
        trials=None,
        statistic=min_gap,
        bound=0.0,
        passed=passed,
        details={"windows": rows},
    )


def verify_prop4_random(
    pairs: int,
    seed: int,
    max_dim: int = 16,
    min_eig: float = 1e-3,
    scale_range: tuple[float, float] = (1.0, 1.0),
    gap_floor: float = 1e-9,
) -> Report:
    """Prop-4 check over ``pairs`` random PD covariance pairs.

    Each pair gets a random dimension ``n <= max_dim`` and a 1-D field of
    ``n`` entries; every contiguous window is checked, batched by window
    length. Where the lower-entropy addend's window covariance has minimum
    eigenvalue >= ``min_eig`` the gap must also reach ``gap_floor`` bits.
    """
    strict = 0
    floor_cases = floor_ok = 0
    min_gap = math.inf
    lo, hi = scale_range
    for t in range(pairs):
        rng = _trial_rng(seed, t)
        n = int(rng.integers(1, max_dim + 1))
        s1, s2 = (float(np.exp(rng.uniform(math.log(lo), math.log(hi)))) for _ in range(2))
        a = random_pd(n, rng, min_eig, s1)
        b = random_pd(n, rng, min_eig, s2)
        ok = True
        for length in range(1, n + 1):
            starts = np.arange(n - length + 1)
            idx = starts[:, None] + np.arange(length)[None, :]
            wa = a[idx[:, :, None], idx[:, None, :]]
            wb = b[idx[:, :, None], idx[:, None, :]]
            ha, hb, hs = gaussian_entropy_many(wa), gaussian_entropy_many(wb), gaussian_entropy_many(wa + wb)
            gap = hs - np.maximum(ha, hb)
            min_gap = min(min_gap, float(gap.min()))
            if not np.all(gap > 0):
                ok = False
            weaker = np.where((ha <= hb)[:, None, None], wa, wb)
            eig_min = np.linalg.eigvalsh(weaker)[:, 0]
            big = eig_min >= min_eig
            floor_cases += int(big.sum())
            floor_ok += int((gap[big] >= gap_floor).sum())
        strict += ok
    passed = strict == pairs and floor_ok == floor_cases
    return Report(
        proposition=4,
        parameters={"pairs": pairs, "max_dim": max_dim, "min_eig": min_eig, "scale_range": list(scale_range)},
        seed=seed,
        trials=pairs,
        statistic=min_gap,
        bound=0.0,
        passed=passed,
        details={"strict_pairs": strict, "floor_cases": floor_cases, "floor_ok": floor_ok, "gap_floor": gap_floor},
    )
