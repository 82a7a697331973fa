"""Fundamental solutions c(x, mu), s(x, mu) of u'' - q(x) u + mu**2 u = 0.

The potential lives on a uniform grid over [0, pi] and is extended between
samples by a cubic spline.  Each grid interval is split into ``m`` RK4
substeps, with ``m`` chosen from the local oscillation rate so that the
phase advance per substep stays below :data:`STEP_PHASE`.  Both the step
rule and the arithmetic depend on mu only through ``lam = mu**2``, so the
results are exactly even in mu.
"""

from collections import OrderedDict
from dataclasses import dataclass
import math
import threading

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .errors import FundamentalOverflowError, InvalidInputError

#: Upper bound on ``h_sub * omega`` for one RK4 substep.
STEP_PHASE = 0.008
#: Advertised endpoint accuracy for ``|mu| <= 50`` and moderate potentials.
SOLVER_TOL = 1e-8
DEFAULT_POINT_COUNT = 2049
OVERFLOW_GUARD = 1e300
MIN_POINT_COUNT = 9

_CACHE_SIZE = 32


class PotentialGrid:
    """Complex potential sampled at ``x_i = i*pi/(point_count-1)``.

    Instances are immutable; the sample array is stored read-only.
    """

    interpolation_order = 3

    def __init__(self, samples):
        arr = np.array(samples, dtype=np.complex128).reshape(-1)
        if arr.size < MIN_POINT_COUNT:
            raise InvalidInputError(
                f"point_count must be >= {MIN_POINT_COUNT}, got {arr.size}"
            )
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise InvalidInputError(f"non-finite potential sample at index {bad}")
        arr.setflags(write=False)
        self._samples = arr
        self._fine_cache = OrderedDict()
        self._lock = threading.Lock()

    @classmethod
    def from_function(cls, fn, point_count=DEFAULT_POINT_COUNT):
        x = np.linspace(0.0, np.pi, point_count)
        return cls(np.broadcast_to(np.asarray(fn(x), dtype=np.complex128), x.shape))

    @classmethod
    def constant(cls, q0, point_count=DEFAULT_POINT_COUNT):
        return cls(np.full(point_count, complex(q0)))

    @classmethod
    def zero(cls, point_count=DEFAULT_POINT_COUNT):
        return cls.constant(0.0, point_count)

    @property
    def samples(self):
        return self._samples

    @property
    def point_count(self):
        return self._samples.size

    @property
    def x(self):
        return np.linspace(0.0, np.pi, self.point_count)

    @property
    def step(self):
        return np.pi / (self.point_count - 1)

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self._samples)))

    def resample(self, point_count):
        """Spline-resample onto a grid with ``point_count`` points."""
        spline = CubicSpline(self.x, self._samples)
        return PotentialGrid(spline(np.linspace(0.0, np.pi, point_count)))

    def fine_samples(self, m):
        """Potential at all half substeps when each interval holds ``m`` substeps."""
        with self._lock:
            hit = self._fine_cache.get(m)
            if hit is not None:
                self._fine_cache.move_to_end(m)
                return hit
        n_int = self.point_count - 1
        if not np.any(self._samples != self._samples[0]):
            fine = np.full(2 * m * n_int + 1, self._samples[0])
        else:
            spline = CubicSpline(self.x, self._samples)
            fine = spline(np.linspace(0.0, np.pi, 2 * m * n_int + 1))
            # keep grid nodes exact
            fine[:: 2 * m] = self._samples
        fine = np.ascontiguousarray(fine, dtype=np.complex128)
        fine.setflags(write=False)
        with self._lock:
            self._fine_cache[m] = fine
            while len(self._fine_cache) > _CACHE_SIZE:
                self._fine_cache.popitem(last=False)
        return fine

    def __eq__(self, other):
        if not isinstance(other, PotentialGrid):
            return NotImplemented
        return np.array_equal(self._samples, other._samples)

    def __hash__(self):
        return hash(self._samples.tobytes())

    def __repr__(self):
        return f"PotentialGrid(point_count={self.point_count}, sup_norm={self.sup_norm:.3g})"


@dataclass(frozen=True)
class FundamentalEndpoint:
    """Values of the fundamental system at x = pi."""

    c_end: complex
    c_prime_end: complex
    s_end: complex
    s_prime_end: complex
    mu: complex

    def as_array(self):
        return np.array([self.c_end, self.c_prime_end, self.s_end, self.s_prime_end])


@dataclass(frozen=True)
class FundamentalPath:
    """Fundamental system at every grid point; columns c, c', s, s'."""

    x: np.ndarray
    values: np.ndarray
    mu: complex

    @property
    def c(self):
        return self.values[:, 0]

    @property
    def c_prime(self):
        return self.values[:, 1]

    @property
    def s(self):
        return self.values[:, 2]

    @property
    def s_prime(self):
        return self.values[:, 3]

    def wronskian_defect(self):
        v = self.values
        return np.abs(v[:, 0] * v[:, 3] - v[:, 1] * v[:, 2] - 1.0)


def substeps(q, mu):
    """Number of RK4 substeps per grid interval used for ``mu``."""
    lam = complex(mu) * complex(mu)
    omega = math.sqrt(abs(lam) + q.sup_norm) + 1.0
    return max(1, math.ceil(q.step * omega / STEP_PHASE))


def _check_state(state, mu):
    mag = np.max(np.abs(state)) if state.size else 0.0
    if not np.all(np.isfinite(state)) or mag > OVERFLOW_GUARD:
        raise FundamentalOverflowError(mu, float(mag) if np.isfinite(mag) else math.inf)


def _check_mu(mu):
    mu = complex(mu)
    if not (math.isfinite(mu.real) and math.isfinite(mu.imag)):
        raise InvalidInputError(f"mu must be finite, got {mu!r}")
    return mu


def solve_fundamental_batch(q, mus, backend=None):
    """Endpoint values for many mu at once; returns an ``(n, 4)`` array.

    Columns are ``c(pi), c'(pi), s(pi), s'(pi)``.  Raises
    :class:`FundamentalOverflowError` naming the first offending mu.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=np.complex128))
    flat = mus.reshape(-1)
    if not np.all(np.isfinite(flat)):
        raise InvalidInputError("mu values must be finite")
    out = np.empty((flat.size, 4), dtype=np.complex128)
    if flat.size == 0:
        return out
    lams = flat * flat
    groups = {}
    for i, mu in enumerate(flat):
        groups.setdefault(substeps(q, mu), []).append(i)
    n_int = q.point_count - 1
    for m, idx in groups.items():
        idx = np.asarray(idx)
        qf = q.fine_samples(m)
        res = _kernels.endpoint_batch(qf, lams[idx], n_int * m, q.step / m, backend)
        out[idx] = res
    with np.errstate(invalid="ignore"):
        bad_rows = ~np.all(np.isfinite(out), axis=1) | (np.max(np.abs(out), axis=1) > OVERFLOW_GUARD)
    if np.any(bad_rows):
        i = int(np.flatnonzero(bad_rows)[0])
        _check_state(out[i], flat[i])
    return out


def solve_fundamental(q, mu, backend=None):
    """Endpoint values ``c(pi), c'(pi), s(pi), s'(pi)`` for one mu."""
    mu = _check_mu(mu)
    row = solve_fundamental_batch(q, [mu], backend)[0]
    return FundamentalEndpoint(complex(row[0]), complex(row[1]), complex(row[2]), complex(row[3]), mu)


def solve_fundamental_path(q, mu, backend=None):
    """Fundamental system at every grid point of ``q``.

    The last row reproduces :func:`solve_fundamental` to rounding (bit for
    bit on the numpy backend).
    """
    mu = _check_mu(mu)
    m = substeps(q, mu)
    qf = q.fine_samples(m)
    vals = _kernels.path_single(qf, mu * mu, (q.point_count - 1) * m, q.step / m, m, backend)
    _check_state(vals, mu)
    return FundamentalPath(q.x, vals, mu)


def wronskian_defect(e):
    """``|c s' - c' s - 1|``, which vanishes identically for exact solutions."""
    return abs(e.c_end * e.s_prime_end - e.c_prime_end * e.s_end - 1.0)


def random_trig_potential(rng, degree=4, sup_norm=5.0, point_count=DEFAULT_POINT_COUNT):
    """Random complex trigonometric polynomial scaled to the given sup norm."""
    n = np.arange(degree + 1)
    a = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    b = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    a /= 1.0 + n
    b /= 1.0 + n
    x = np.linspace(0.0, np.pi, point_count)
    vals = np.cos(np.outer(x, n)) @ a + np.sin(np.outer(x, n)) @ b
    vals *= sup_norm / np.max(np.abs(vals))
    return PotentialGrid(vals)
