"""Characteristic determinant, zero counting and eigenvalue location.

For the boundary conditions

    u'(0) + (-1)**theta u'(pi) + b u(pi) = 0,   u(0) + (-1)**(theta+1) u(pi) = 0

the eigenvalues ``lam = mu**2`` are the zeros of

    Delta(mu) = c(pi, mu) - s'(pi, mu) + (-1)**(theta+1) * b * s(pi, mu).

Zero counts come from the argument principle (trapezoid rule on the
logarithmic derivative, doubled until the winding number settles); roots
are refined by Newton's method with multiplicity-aware steps.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .errors import (
    InvalidInputError,
    MiscountError,
    WindingError,
    ZeroOnBoundaryError,
)
from .fundamental import SOLVER_TOL, solve_fundamental_batch

DEFAULT_IM_BAND = 2.0
INITIAL_POINTS = 64
POINT_CAP = 4096
ROOT_TOL = 1e-10
CLUSTER_TOL = 1e-6
MULTIPLICITY_RADIUS = 1e-3
_BOUNDARY_RATIO = 1e-12


@dataclass(frozen=True)
class BoundaryParams:
    """Boundary parameters ``(b, theta)``; ``theta`` is 0 or 1."""

    b: complex = 0j
    theta: int = 0

    def __post_init__(self):
        if self.theta not in (0, 1):
            raise InvalidInputError(f"theta must be 0 or 1, got {self.theta!r}")
        b = complex(self.b)
        if not (math.isfinite(b.real) and math.isfinite(b.imag)):
            raise InvalidInputError("b must be finite")
        object.__setattr__(self, "b", b)

    @property
    def sign(self):
        """The factor ``(-1)**(theta+1)`` multiplying ``b``."""
        return -1.0 if self.theta == 0 else 1.0

    @property
    def regular_spectrum(self):
        """True when ``b != 0``, the regime with integer-like asymptotics."""
        return self.b != 0


def determinant(q, bc, mu):
    """Characteristic determinant at ``mu`` (scalar or array)."""
    arr = np.asarray(mu, dtype=np.complex128)
    vals = solve_fundamental_batch(q, arr.reshape(-1))
    delta = vals[:, 0] - vals[:, 3] + bc.sign * bc.b * vals[:, 2]
    if arr.ndim == 0:
        return complex(delta[0])
    return delta.reshape(arr.shape)


def _fd_step(mu):
    return 1e-5 * (1.0 + np.abs(mu))


def value_and_derivative(model, mu):
    """Model values and central-difference derivatives in one batched call."""
    mu = np.atleast_1d(np.asarray(mu, dtype=np.complex128))
    h = _fd_step(mu)
    vals = np.asarray(model(np.concatenate([mu, mu + h, mu - h])), dtype=np.complex128)
    n = mu.size
    f0, fp, fm = vals[:n], vals[n : 2 * n], vals[2 * n :]
    return f0, (fp - fm) / (2.0 * h)


def determinant_derivative(model, mu):
    """``d model / d mu`` by a central difference with step ``1e-5 (1 + |mu|)``."""
    scalar = np.ndim(mu) == 0
    _, d = value_and_derivative(model, mu)
    return complex(d[0]) if scalar else d.reshape(np.shape(mu))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` in the mu-plane."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise InvalidInputError(f"degenerate rectangle {self}")

    @property
    def center(self):
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    def contains(self, z, pad=0.0):
        return (
            self.x0 - pad <= z.real <= self.x1 + pad
            and self.y0 - pad <= z.imag <= self.y1 + pad
        )

    def corners(self):
        return [
            complex(self.x0, self.y0),
            complex(self.x1, self.y0),
            complex(self.x1, self.y1),
            complex(self.x0, self.y1),
        ]

    def split(self, frac=0.5):
        """Two halves cut across the longer side at ``frac`` of its length."""
        if self.width >= self.height:
            xm = self.x0 + frac * self.width
            return Rect(self.x0, xm, self.y0, self.y1), Rect(xm, self.x1, self.y0, self.y1)
        ym = self.y0 + frac * self.height
        return Rect(self.x0, self.x1, self.y0, ym), Rect(self.x0, self.x1, ym, self.y1)


class _Contour:
    """Closed polygonal or circular contour with trapezoid nodes that can be doubled."""

    def __init__(self, segments=None, circle=None):
        self.segments = segments
        self.circle = circle
        self.pieces = 1 if circle is not None else len(segments)

    def nodes(self, n):
        if self.circle is not None:
            c, r = self.circle
            theta = 2.0 * np.pi * np.arange(n) / n
            z = c + r * np.exp(1j * theta)
            dz = 1j * r * np.exp(1j * theta) * (2.0 * np.pi / n)
            return z, dz
        zs, dzs = [], []
        t = np.arange(n) / n
        for i, (a, b) in enumerate(self.segments):
            pa, pb = self.segments[i - 1]
            zs.append(a + (b - a) * t)
            w = np.full(n, (b - a) / n, dtype=np.complex128)
            # corner node: half weight from each adjoining side
            w[0] = 0.5 * ((b - a) + (pb - pa)) / n
            dzs.append(w)
        return np.concatenate(zs), np.concatenate(dzs)


def _winding(model, contour, initial, cap):
    n = initial
    prev = None
    f = df = None
    while True:
        z, dz = contour.nodes(n)
        if f is None:
            f, df = value_and_derivative(model, z)
        else:
            # nodes at even positions of every piece were evaluated last round
            old_f = f.reshape(contour.pieces, n // 2)
            old_df = df.reshape(contour.pieces, n // 2)
            zz = z.reshape(contour.pieces, n)
            nf, ndf = value_and_derivative(model, zz[:, 1::2].reshape(-1))
            f = np.empty((contour.pieces, n), dtype=np.complex128)
            df = np.empty_like(f)
            f[:, 0::2], f[:, 1::2] = old_f, nf.reshape(contour.pieces, -1)
            df[:, 0::2], df[:, 1::2] = old_df, ndf.reshape(contour.pieces, -1)
            f, df = f.reshape(-1), df.reshape(-1)
        mod = np.abs(f)
        if not np.all(np.isfinite(f)):
            raise ZeroOnBoundaryError("non-finite model value on contour")
        peak = float(np.max(mod))
        if peak == 0.0 or float(np.min(mod)) <= _BOUNDARY_RATIO * peak:
            k = int(np.argmin(mod))
            raise ZeroOnBoundaryError(f"zero on contour near mu={complex(z[k])!r}")
        val = np.sum(df / f * dz) / (2j * np.pi)
        if prev is not None:
            r = round(val.real)
            if (
                r == round(prev.real)
                and abs(val - r) <= 0.1
                and abs(val - prev) <= 0.1
            ):
                return int(r)
        if 2 * n > cap:
            raise WindingError(f"winding did not settle (last value {val:.4f}, {n} points/side)")
        prev = val
        n *= 2


def count_zeros(model, rect, initial=INITIAL_POINTS, cap=POINT_CAP):
    """Zeros of ``model`` inside ``rect`` counted with multiplicity."""
    c = rect.corners()
    contour = _Contour(segments=[(c[i], c[(i + 1) % 4]) for i in range(4)])
    return _winding(model, contour, initial, cap)


def count_zeros_disk(model, center, radius, initial=INITIAL_POINTS, cap=POINT_CAP):
    """Zeros of ``model`` inside the disk ``|mu - center| < radius``."""
    if radius <= 0:
        raise InvalidInputError("radius must be positive")
    contour = _Contour(circle=(complex(center), float(radius)))
    return _winding(model, contour, initial, 4 * cap)


def newton(model, mu0, multiplicity=1, tol=ROOT_TOL, max_iter=60, max_step=None, xtol=1e-12):
    """Newton iteration ``mu -= m f/f'``; returns ``(mu, |f(mu)|, converged)``.

    Converged means the step fell below ``xtol`` (relative), or below 1e-6
    with ``|f| <= tol``; a small residual alone is not trusted.
    """
    mu = complex(mu0)
    for _ in range(max_iter):
        f, df = value_and_derivative(model, mu)
        fval, dval = complex(f[0]), complex(df[0])
        if fval == 0:
            return mu, 0.0, True
        if dval == 0 or not np.isfinite(dval):
            return mu, abs(fval), False
        step = multiplicity * fval / dval
        if max_step is not None and abs(step) > max_step:
            step *= max_step / abs(step)
        mu -= step
        size = abs(step) / (1.0 + abs(mu))
        if size <= xtol or (size <= 1e-6 and abs(fval) <= tol):
            res = abs(complex(model(np.array([mu]))[0]))
            return mu, res, True
    return mu, abs(complex(model(np.array([mu]))[0])), False


def _safe_count(model, rect):
    try:
        return count_zeros(model, rect)
    except (ZeroOnBoundaryError, WindingError):
        return None


def _locate(model, rect, count, tol, seed=None, depth=0):
    """Roots inside ``rect`` as ``[(mu, multiplicity)]`` given their total ``count``."""
    if count == 0:
        return []
    start = rect.center if seed is None else complex(seed)
    max_step = 0.5 * max(rect.width, rect.height)
    mu, res, ok = newton(model, start, multiplicity=count, tol=tol, max_step=max_step)
    if ok and rect.contains(mu):
        if count == 1:
            return [(mu, 1)]
        try:
            local = count_zeros_disk(model, mu, MULTIPLICITY_RADIUS)
        except (ZeroOnBoundaryError, WindingError):
            local = None
        if local == count:
            return [(mu, count)]
    if max(rect.width, rect.height) < 1e-7 or depth > 60:
        return [(start if not ok else mu, count)]
    for frac in (0.5, 0.4371, 0.5629, 0.3183):
        a, b = rect.split(frac)
        ca = _safe_count(model, a)
        if ca is None:
            continue
        cb = count - ca
        if cb < 0:
            continue
        check = _safe_count(model, b)
        if check is None or check != cb:
            continue
        return _locate(model, a, ca, tol, depth=depth + 1) + _locate(model, b, cb, tol, depth=depth + 1)
    raise MiscountError(f"could not subdivide {rect} consistently (count {count})")


@dataclass(frozen=True)
class SpectrumEntry:
    n: int
    mu: complex
    multiplicity: int = 1

    @property
    def lam(self):
        return self.mu * self.mu


@dataclass(frozen=True)
class SpectrumList:
    """Zeros sorted by real part; ``n`` counts zeros with multiplicity from 1."""

    entries: tuple
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def mus(self):
        return np.array([e.mu for e in self.entries], dtype=np.complex128)

    @property
    def lambdas(self):
        return self.mus**2

    @property
    def multiplicities(self):
        return np.array([e.multiplicity for e in self.entries], dtype=int)

    @property
    def tail_residuals(self):
        return np.array([e.mu - e.n for e in self.entries], dtype=np.complex128)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_mus(cls, mus, multiplicities=None, start=1, meta=None):
        mus = list(np.asarray(mus, dtype=np.complex128))
        mults = [1] * len(mus) if multiplicities is None else [int(m) for m in multiplicities]
        order = sorted(range(len(mus)), key=lambda i: (mus[i].real, mus[i].imag))
        entries, n = [], start
        for i in order:
            entries.append(SpectrumEntry(n, complex(mus[i]), mults[i]))
            n += mults[i]
        return cls(tuple(entries), dict(meta or {}))


def _merge_roots(roots, model):
    roots = sorted(roots, key=lambda r: (r[0].real, r[0].imag))
    merged = []
    for mu, m in roots:
        if merged and abs(mu - merged[-1][0]) <= CLUSTER_TOL:
            prev = merged[-1][0]
            try:
                mult = count_zeros_disk(model, prev, MULTIPLICITY_RADIUS)
            except (ZeroOnBoundaryError, WindingError):
                mult = merged[-1][1] + m
            merged[-1] = (prev, mult)
        else:
            merged.append((mu, m))
    return merged


def _seeded_roots(model, cover, n_max, tol):
    """Newton from every integer seed; ``None`` unless the roots look distinct."""
    roots = []
    for n in range(1, n_max + 1):
        mu, _, ok = newton(model, complex(n), tol=tol, max_step=0.5)
        mult = 1
        if not ok:
            # slow convergence signals a multiple zero
            try:
                mult = count_zeros_disk(model, mu, MULTIPLICITY_RADIUS)
            except (ZeroOnBoundaryError, WindingError):
                return None
            if mult < 1:
                return None
            mu, _, ok = newton(model, mu, multiplicity=mult, tol=tol, max_step=MULTIPLICITY_RADIUS)
            if not ok:
                return None
        if not cover.contains(mu) or mu.real <= cover.x0:
            return None
        roots.append((mu, mult))
    roots.sort(key=lambda r: r[0].real)
    for (a, _), (c, _) in zip(roots, roots[1:]):
        if abs(a - c) <= CLUSTER_TOL:
            return None
    return roots


def _window_roots(model, n_max, im_band, tol):
    """Count each unit window around an integer, then locate inside it."""
    lines = [0.5 + k for k in range(n_max + 1)]
    for k in range(1, n_max):
        for shift in (0.0, 0.0371, -0.0413, 0.0853, -0.0917):
            if _safe_count(model, Rect(lines[k - 1], lines[k] + shift, -im_band, im_band)) is not None:
                lines[k] += shift
                break
        else:
            raise ZeroOnBoundaryError(f"cannot place window edge near Re mu = {lines[k]}")
    roots = []
    for n in range(1, n_max + 1):
        win = Rect(lines[n - 1], lines[n], -im_band, im_band)
        roots.extend(_locate(model, win, count_zeros(model, win), tol, seed=complex(n)))
    return roots


def _model_b(model, bc):
    if bc is not None:
        return complex(bc.b)
    inner = getattr(model, "bc", None)
    if inner is not None:
        return complex(inner.b)
    return complex(getattr(model, "b", 0.0))


def find_eigenvalues(model, n_max, im_band=DEFAULT_IM_BAND, bc=None):
    """All zeros with ``Re mu`` in ``(1/2, n_max + 1/2]`` and ``|Im mu| <= im_band``.

    When ``b != 0`` each unit window around an integer is counted and
    searched from the integer seed; otherwise the covering rectangle is
    subdivided until every piece isolates one (possibly multiple) root.
    The total multiplicity is checked against one contour count over the
    whole search region.
    """
    if n_max < 1:
        raise InvalidInputError("n_max must be >= 1")
    b = _model_b(model, bc)
    tol = ROOT_TOL * max(1.0, abs(b))
    cover = Rect(0.5, n_max + 0.5, -im_band, im_band)
    total = count_zeros(model, cover)
    roots = None
    if b != 0:
        roots = _seeded_roots(model, cover, n_max, tol)
        if roots is None or sum(m for _, m in roots) != total:
            roots = _window_roots(model, n_max, im_band, tol)
    else:
        roots = _locate(model, cover, total, tol)
    roots = _merge_roots(roots, model)
    found = sum(m for _, m in roots)
    if found != total:
        raise MiscountError(f"located multiplicity {found} but contour count is {total}")
    for mu, _ in roots:
        if abs(abs(mu.imag) - im_band) < 1e-3:
            warnings.warn(f"root {mu!r} lies near the search band edge |Im mu| = {im_band}")
    meta = {"n_max": n_max, "im_band": im_band, "contour_total": total, "b_nonzero": b != 0}
    return SpectrumList.from_mus([r[0] for r in roots], [r[1] for r in roots], meta=meta)


@dataclass(frozen=True)
class TailReport:
    r_n: np.ndarray
    partial_l2_sums: np.ndarray
    verdict: str
    decay_exponent: float
    last_quarter_fraction: float


CONVERGENT_LIKE = "CONVERGENT-LIKE"
INCONCLUSIVE = "INCONCLUSIVE"


def tail_regularity(spec, quarter_threshold=0.05, min_exponent=1.2, noise_floor=SOLVER_TOL):
    """Residuals ``r_n = mu_n - n`` and evidence for square summability.

    The verdict is ``CONVERGENT-LIKE`` when the last quarter of the
    indices adds less than ``quarter_threshold`` of the total and the
    fitted decay exponent of ``|r_n|**2`` exceeds ``min_exponent``;
    otherwise ``INCONCLUSIVE``.  Finite data never proves membership.
    """
    if len(spec.entries) == 0:
        raise InvalidInputError("empty spectrum")
    idx, r = [], []
    expect = spec.entries[0].n
    for e in spec.entries:
        if e.n != expect:
            raise InvalidInputError(f"non-contiguous index {e.n}, expected {expect}")
        for j in range(e.multiplicity):
            idx.append(e.n + j)
            r.append(e.mu - (e.n + j))
        expect = e.n + e.multiplicity
    idx = np.asarray(idx, dtype=float)
    r = np.asarray(r, dtype=np.complex128)
    sq = np.abs(r) ** 2
    partial = np.cumsum(sq)
    total = float(partial[-1])
    n = sq.size
    q = max(1, n // 4)
    frac = float(np.sum(sq[-q:]) / total) if total > 0 else 0.0

    half = slice(n // 2, n)
    mask = np.abs(r[half]) > noise_floor
    xs, ys = np.log(idx[half][mask]), np.log(sq[half][mask])
    if xs.size >= 3 and np.ptp(xs) > 0:
        exponent = float(-np.polyfit(xs, ys, 1)[0])
    elif xs.size == 0:
        exponent = math.inf
    else:
        exponent = math.nan

    if total <= noise_floor**2 * n:
        verdict = CONVERGENT_LIKE
    elif frac < quarter_threshold and (math.isnan(exponent) or exponent > min_exponent):
        verdict = CONVERGENT_LIKE
    else:
        verdict = INCONCLUSIVE
    return TailReport(r, partial, verdict, exponent, frac)
