"""Exact-covariance fractional Brownian motion on uniform time grids.

Sampling is done by circulant embedding of the fractional Gaussian noise
(fGn) covariance (Davies-Harte), which is exact in law and O(n log n).
A dense Cholesky sampler is kept as an O(n^3) cross-validation oracle.

Paths are grid functions anchored at t = 0 (value exactly zero there).
The time-shift flow on paths,

    (shift by s)(t) = path(t + s) - path(s),

is implemented by :func:`reanchor` and is also how two-sided paths are
built: stationarity of the increments makes a one-sided path re-anchored
at an interior node an exact two-sided sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmbeddingError, OffGridError, SizeLimitError, WindowError

__all__ = [
    "HurstParameter",
    "TimeGrid",
    "ScalarPath",
    "fgn_autocovariance",
    "sample_fbm",
    "sample_fbm_paths",
    "sample_fbm_cholesky",
    "reanchor",
    "two_sided_sample",
]

#: Relative tolerance for negative circulant eigenvalues.  fGn with
#: H in (1/2, 1) embeds cleanly in practice; this only absorbs
#: floating-point dust and anything larger raises ``EmbeddingError``.
EIGENVALUE_TOL = 1e-10

#: Hard size guard for the dense Cholesky oracle.
CHOLESKY_MAX_STEPS = 4096


@dataclass(frozen=True)
class HurstParameter:
    """Hurst exponent of the driving noise.

    The long-memory regime 1/2 < h < 1 is the supported one.  ``h = 0.5``
    (plain Brownian motion) is admitted only with ``reference_mode=True``
    and exists so the sampler can be checked against an independent
    Gaussian-walk oracle.
    """

    h: float
    reference_mode: bool = False

    def __post_init__(self):
        if self.reference_mode:
            if not 0.5 <= self.h < 1.0:
                raise ValueError(f"hurst parameter {self.h} outside [0.5, 1)")
        elif not 0.5 < self.h < 1.0:
            raise ValueError(
                f"hurst parameter {self.h} outside (0.5, 1); "
                "h = 0.5 needs reference_mode=True"
            )


def as_hurst(h: "HurstParameter | float") -> HurstParameter:
    """Coerce a float to a validated :class:`HurstParameter`."""
    if isinstance(h, HurstParameter):
        return h
    return HurstParameter(float(h))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with nodes ``(i_start + k) * dt`` for k = 0..n_steps.

    Anchoring the grid on integer multiples of ``dt`` keeps shift
    arithmetic exact: whenever the grid spans t = 0, zero is a node.
    """

    dt: float
    n_steps: int
    i_start: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    @property
    def t_start(self) -> float:
        return self.i_start * self.dt

    @property
    def t_end(self) -> float:
        return (self.i_start + self.n_steps) * self.dt

    def times(self) -> np.ndarray:
        return (self.i_start + np.arange(self.n_nodes)) * self.dt

    def index_of(self, t: float) -> int:
        """Node index of time ``t``, or ``OffGridError`` if t is off-grid."""
        k = round(t / self.dt) - self.i_start
        if not 0 <= k <= self.n_steps:
            raise WindowError(
                f"time {t} outside grid window [{self.t_start}, {self.t_end}]"
            )
        if abs(t - (self.i_start + k) * self.dt) > 1e-6 * self.dt:
            raise OffGridError(f"time {t} is not aligned with dt={self.dt}")
        return k

    def steps_of(self, s: float) -> int:
        """Signed number of grid steps equal to the duration ``s``."""
        k = round(s / self.dt)
        if abs(s - k * self.dt) > 1e-6 * self.dt:
            raise OffGridError(f"shift {s} is not a multiple of dt={self.dt}")
        return k

    def shifted(self, k_steps: int) -> "TimeGrid":
        """Grid translated k_steps nodes toward the past (t -> t - k*dt)."""
        return TimeGrid(self.dt, self.n_steps, self.i_start - k_steps)


@dataclass(frozen=True)
class ScalarPath:
    """One grid-sampled scalar noise trajectory.

    ``anchored`` records that the node at t = 0 carries the value 0
    exactly, which every freshly sampled or re-anchored path does.
    """

    grid: TimeGrid
    values: np.ndarray
    anchored: bool = True

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"values shape {values.shape} does not match grid "
                f"({self.grid.n_nodes} nodes)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.anchored:
            k0 = self.grid.index_of(0.0)
            if values[k0] != 0.0:
                raise ValueError("anchored path must be exactly 0 at t = 0")

    def value_at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])


def fgn_autocovariance(k: int, h: "HurstParameter | float", dt: float = 1.0) -> float:
    """Autocovariance of step-``dt`` fBm increments at integer lag ``k``.

    gamma(k) = dt^(2H) / 2 * (|k+1|^(2H) - 2|k|^(2H) + |k-1|^(2H)).

    Positive for every lag when h > 1/2 (long-range positive correlation)
    and zero for k >= 1 at h = 1/2.
    """
    if k < 0:
        raise ValueError("lag must be >= 0")
    if not dt > 0:
        raise ValueError("dt must be positive")
    h2 = 2.0 * as_hurst(h).h
    lag = float(k)
    return 0.5 * dt**h2 * ((lag + 1.0) ** h2 - 2.0 * lag**h2 + abs(lag - 1.0) ** h2)


def _fgn_eigenvalues(n_steps: int, h: float) -> np.ndarray:
    """Eigenvalues of the 2n-circulant embedding of the unit-step fGn covariance."""
    lags = np.arange(n_steps + 1, dtype=float)
    h2 = 2.0 * h
    gamma = 0.5 * (
        (lags + 1.0) ** h2 - 2.0 * lags**h2 + np.abs(lags - 1.0) ** h2
    )
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    floor = -EIGENVALUE_TOL * eig.max()
    if eig.min() < floor:
        raise EmbeddingError(
            f"circulant eigenvalue {eig.min():.3e} below tolerance for "
            f"h={h}, n={n_steps}; use the Cholesky sampler"
        )
    return np.clip(eig, 0.0, None)


def _sample_fgn_batch(
    n_paths: int, n_steps: int, h: float, rng: np.random.Generator
) -> np.ndarray:
    """(n_paths, n_steps) unit-step fGn samples via circulant embedding."""
    m = 2 * n_steps
    eig = _fgn_eigenvalues(n_steps, h)
    out = np.empty((n_paths, n_steps))
    # Chunk so the complex work array stays below ~128 MiB.
    chunk = max(1, (1 << 23) // m)
    for lo in range(0, n_paths, chunk):
        hi = min(lo + chunk, n_paths)
        z = rng.standard_normal((hi - lo, m))
        spec = np.empty((hi - lo, m), dtype=complex)
        spec[:, 0] = z[:, 0]
        spec[:, n_steps] = z[:, n_steps]
        re = z[:, 1:n_steps]
        im = z[:, n_steps + 1 :]
        half = (re + 1j * im) / np.sqrt(2.0)
        spec[:, 1:n_steps] = half
        spec[:, n_steps + 1 :] = np.conj(half[:, ::-1])
        spec *= np.sqrt(eig / m)
        out[lo:hi] = np.fft.fft(spec, axis=1).real[:, :n_steps]
    return out


def sample_fbm(
    n_steps: int,
    h: "HurstParameter | float",
    dt: float,
    seed,
) -> ScalarPath:
    """Sample one fBm path on [0, n_steps * dt], anchored at t = 0.

    The increment process is drawn with exact covariance by circulant
    embedding; the path is its cumulative sum.  Identical
    ``(n_steps, h, dt, seed)`` give bit-identical output.

    Raises ``EmbeddingError`` if the covariance embedding fails (callers
    may fall back to :func:`sample_fbm_cholesky`).
    """
    return sample_fbm_paths(1, n_steps, h, dt, seed)[0]


def sample_fbm_paths(
    n_paths: int,
    n_steps: int,
    h: "HurstParameter | float",
    dt: float,
    seed,
) -> list[ScalarPath]:
    """Sample ``n_paths`` independent fBm paths from one generator stream."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    hurst = as_hurst(h)
    rng = np.random.default_rng(seed)
    fgn = _sample_fgn_batch(n_paths, n_steps, hurst.h, rng) * dt**hurst.h
    grid = TimeGrid(dt=dt, n_steps=n_steps, i_start=0)
    paths = []
    for row in fgn:
        values = np.concatenate([[0.0], np.cumsum(row)])
        paths.append(ScalarPath(grid=grid, values=values))
    return paths


def _fbm_covariance_matrix(n_steps: int, h: float, dt: float) -> np.ndarray:
    t = dt * np.arange(1, n_steps + 1, dtype=float)
    h2 = 2.0 * h
    return 0.5 * (
        t[:, None] ** h2 + t[None, :] ** h2 - np.abs(t[:, None] - t[None, :]) ** h2
    )


def sample_fbm_cholesky(
    n_steps: int,
    h: "HurstParameter | float",
    dt: float,
    seed=None,
    normals: np.ndarray | None = None,
) -> ScalarPath:
    """Exact fBm path via dense Cholesky of the path covariance.

    O(n^3); intended as a cross-validation oracle, hence the
    ``CHOLESKY_MAX_STEPS`` guard.  ``normals`` injects the driving unit
    normals directly (tests), otherwise they are drawn from ``seed``.
    """
    if n_steps > CHOLESKY_MAX_STEPS:
        raise SizeLimitError(
            f"n_steps={n_steps} exceeds Cholesky oracle guard {CHOLESKY_MAX_STEPS}"
        )
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    hurst = as_hurst(h)
    cov = _fbm_covariance_matrix(n_steps, hurst.h, dt)
    chol = np.linalg.cholesky(cov)
    if normals is None:
        normals = np.random.default_rng(seed).standard_normal(n_steps)
    else:
        normals = np.asarray(normals, dtype=float)
        if normals.shape != (n_steps,):
            raise ValueError(f"normals must have shape ({n_steps},)")
    values = np.concatenate([[0.0], chol @ normals])
    return ScalarPath(grid=TimeGrid(dt=dt, n_steps=n_steps), values=values)


def reanchor(path: ScalarPath, s: float) -> ScalarPath:
    """Time-shift a sampled path: output(t) = path(t + s) - path(s).

    ``s`` must land on a grid node.  The output grid is the input grid
    translated by -s, so no samples are lost, and the output is anchored
    (its value at t = 0 is path(s) - path(s) = 0 exactly).  Repeated
    re-anchoring composes like a flow: shifting by s then by t equals
    shifting by s + t, up to one rounding of the value subtraction.
    """
    k = path.grid.steps_of(s)
    j = path.grid.index_of(s)  # raises WindowError if s is outside
    values = path.values - path.values[j]
    return ScalarPath(grid=path.grid.shifted(k), values=values, anchored=True)


def two_sided_sample(
    t_past: float,
    t_future: float,
    h: "HurstParameter | float",
    dt: float,
    seed,
) -> ScalarPath:
    """Sample an fBm path on [-t_past, t_future], anchored at t = 0.

    A one-sided path of total length t_past + t_future is re-anchored at
    the interior node t_past.  Because fBm has stationary increments the
    result carries the exact two-sided covariance
    (|t|^(2H) + |s|^(2H) - |t-s|^(2H)) / 2, including correlations across
    zero; no separate two-sided construction is needed.
    """
    if t_past < 0 or t_future < 0:
        raise ValueError("t_past and t_future must be >= 0")
    probe = TimeGrid(dt=dt, n_steps=1)
    n_past = probe.steps_of(t_past)
    n_future = probe.steps_of(t_future)
    if n_past < 0 or n_future < 0 or n_past + n_future < 1:
        raise ValueError("window must contain at least one step")
    path = sample_fbm(n_past + n_future, h, dt, seed)
    if n_past == 0:
        return path
    return reanchor(path, n_past * dt)
