"""Potential reconstruction from a target determinant via the Gelfand-Levitan equation.

Pipeline::

    N      = select_N(target)                   # |u| < 1/10 on the strip past N
    nodes  = build_nodes(N, offsets)            # N nodes clustered at N + 1/2
    data   = make_gl_data(target, bc, nodes)    # c_n from z**2 - u z - 1 = 0, weights w_n
    kern   = assemble_F(data)                   # F(x, t) on a uniform grid
    kern   = solve_gl(kern)                     # K(x, t) + F(x, t) + int_0^x K F = 0
    qhat   = extract_potential(kern)            # qhat = 2 d/dx K(x, x)
    report = verify_reconstruction(qhat, data)

Every kernel term ``a sin(mu x) sin(mu t)`` equals
``a (cos mu (x-t) - cos mu (x+t)) / 2``, so on a uniform grid

    F(x_i, t_j) = (G(|i-j| h) - G((i+j) h)) / 2,
    G(y) = sum_n (2 w_n cos(mu_n y) - (2/pi) cos(n y)).

The slowly decaying part of the tail coefficients, ``(2/pi)(1/R(n) - 1)``
with ``R`` the head quotient of the node product, is expanded in powers of
``1/n**2``; its first two terms are summed to infinity in closed form.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import get_lapack_funcs

from ._backend import thread_count
from .errors import ConvergenceError, InvalidInputError, NotAdmissibleError, SingularSystemError
from .fundamental import PotentialGrid, solve_fundamental_batch
from .models import CallableModel, node_product_sdot
from .spectral import BoundaryParams, determinant, newton

BOUND = 0.1
N_CAP = 100_000
DEFAULT_N_TAIL = 512
DEFAULT_GL_POINTS = 513
ASSEMBLY_TOL = 1e-4
COND_LIMIT = 1e12
RESIDUAL_TOL = 1e-10


def select_N(target, n_cap=N_CAP, window=50.0, spacing=0.05, margin=2.0, chunk=4000):
    """Smallest ``N`` with ``margin * max|u| < 1/10`` on ``[N, N+window] x [-1, 1]``.

    The maximum is taken over a lattice with the given spacing.  Raises
    :class:`NotAdmissibleError` when no ``N <= n_cap`` qualifies.
    """
    ys = np.linspace(-1.0, 1.0, int(round(2.0 / spacing)) + 1)
    n = 1
    x = 1.0  # next unscanned column
    while True:
        if n > n_cap:
            raise NotAdmissibleError(f"|u| >= {BOUND / margin:g} persists beyond N_cap={n_cap}")
        stop = n + window
        if x > stop:
            return n
        xs = x + spacing * np.arange(chunk)
        xs = xs[xs <= stop + 1e-12]
        if xs.size == 0:
            return n
        vals = np.abs(target(xs[:, None] + 1j * ys[None, :]))
        colmax = np.max(vals, axis=1)
        bad = np.flatnonzero(~(margin * colmax < BOUND))
        if bad.size:
            n = int(math.floor(xs[bad[-1]] + 1e-12)) + 1
        x = float(xs[-1]) + spacing


def build_nodes(N, offsets):
    """Head nodes ``mu_n = N + 1/2 + offset_n`` for ``n <= N`` (``mu_n = n`` afterwards)."""
    offsets = np.asarray(offsets, dtype=float).reshape(-1)
    if N < 0 or offsets.size != N:
        raise InvalidInputError(f"need exactly N={N} offsets, got {offsets.size}")
    if np.any(np.abs(offsets) >= BOUND):
        raise InvalidInputError("offsets must lie in (-1/10, 1/10)")
    nodes = N + 0.5 + offsets
    # checked after the shift: offsets closer than rounding would merge nodes
    if np.any(np.diff(nodes) <= 0):
        raise InvalidInputError("offsets must be strictly increasing and resolvable at N + 1/2")
    return nodes


def default_offsets(N):
    return np.zeros(1) if N == 1 else np.linspace(-0.05, 0.05, N)


def full_nodes(head, n_tail):
    """Node sequence ``mu_1..mu_{n_tail}``: head nodes, then the integers."""
    head = np.asarray(head, dtype=float)
    return np.concatenate([head, np.arange(head.size + 1, n_tail + 1, dtype=float)])


def _sdot_all(head, mus):
    n_head = head.size
    out = np.empty(mus.size, dtype=np.complex128)
    for n in range(1, min(n_head, mus.size) + 1):
        out[n - 1] = node_product_sdot(head, n)
    if mus.size > n_head:
        n = np.arange(n_head + 1, mus.size + 1, dtype=float)
        ratio = np.ones_like(n)
        for k in range(1, n_head + 1):
            ratio = ratio * (head[k - 1] ** 2 - n * n) / (k * k - n * n)
        out[n_head:] = np.pi * np.where(n % 2 == 0, 1.0, -1.0) / n * ratio
    return out


def parity_root(u, n):
    """Root of ``z**2 - u z - 1 = 0`` near ``(-1)**n`` (principal square root).

    Even ``n`` takes ``(u + sqrt(u**2 + 4))/2``, odd ``n`` the other root.
    Each must fall in the disk of radius 1/2 about ``(-1)**n``.
    """
    u = np.asarray(u, dtype=np.complex128)
    n = np.asarray(n)
    root = np.sqrt(u * u + 4.0)
    c = np.where(n % 2 == 0, 0.5 * (u + root), 0.5 * (u - root))
    centre = np.where(n % 2 == 0, 1.0, -1.0)
    bad = np.flatnonzero(np.atleast_1d(np.abs(c - centre) >= 0.5))
    if bad.size:
        raise NotAdmissibleError("quadratic root outside its disk", int(np.atleast_1d(n)[bad[0]]))
    return c


def select_constants(target, nodes, head_count=None):
    """Constants ``c_n`` (parity-selected roots of ``z**2 - u z - 1``) and weights ``w_n``.

    ``nodes`` is the full sequence ``mu_1..mu_{n_tail}``; the first
    ``head_count`` are the perturbed ones.  Raises
    :class:`NotAdmissibleError` naming the first index that leaves the
    admissible class.
    """
    mus = np.asarray(nodes, dtype=float)
    if head_count is None:
        head_count = int(np.sum(mus != np.arange(1, mus.size + 1)))
    head = mus[:head_count]
    u = np.asarray(target(mus.astype(np.complex128)), dtype=np.complex128)
    big = np.flatnonzero(~(np.abs(u) < BOUND))
    if big.size:
        n = int(big[0]) + 1
        raise NotAdmissibleError(f"|u(mu_n)| = {abs(u[n - 1]):.3g} is not below 1/10", n)
    c = parity_root(u, np.arange(1, mus.size + 1))
    sdot = _sdot_all(head, mus)
    w = c / (mus * sdot)
    bad_w = np.flatnonzero(~(w.real > 0))
    if bad_w.size:
        raise NotAdmissibleError("weight with nonpositive real part", int(bad_w[0]) + 1)
    err = np.abs(c - 1.0 / c - u)
    if np.max(err) > 1e-12:
        raise NotAdmissibleError("c_n - 1/c_n does not reproduce u(mu_n)", int(np.argmax(err)) + 1)
    return c, w


@dataclass(frozen=True)
class GLData:
    """Inverse-problem data: nodes, constants and weights for ``n <= n_tail``."""

    N: int
    mu_seq: np.ndarray
    c_seq: np.ndarray
    w_seq: np.ndarray
    target: object
    bc: BoundaryParams
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def head(self):
        return self.mu_seq[: self.N]

    @property
    def n_tail(self):
        return self.mu_seq.size

    def extend(self, n_tail):
        """Same data with constants recomputed up to ``n_tail``."""
        return make_gl_data(self.target, self.bc, self.head, n_tail, meta=self.meta)


def make_gl_data(target, bc, head, n_tail=DEFAULT_N_TAIL, meta=None):
    head = np.asarray(head, dtype=float).reshape(-1)
    N = head.size
    if n_tail < N:
        raise InvalidInputError("n_tail must be >= N")
    if np.any(np.diff(head) <= 0) or np.any(head <= 0):
        raise InvalidInputError("nodes must be positive and strictly increasing")
    if N and np.any(np.abs(head - (N + 0.5)) >= BOUND):
        raise InvalidInputError("head nodes must satisfy |mu_n - (N + 1/2)| < 1/10")
    mus = full_nodes(head, n_tail)
    c, w = select_constants(target, mus, head_count=N)
    return GLData(N, mus, c, w, target, bc, dict(meta or {}))


def build_gl_data(target, bc, N=None, offsets=None, n_tail=DEFAULT_N_TAIL):
    """Choose ``N`` (unless given), place the head nodes and compute constants."""
    if N is None:
        N = select_N(target)
    if offsets is None:
        offsets = default_offsets(N)
    return make_gl_data(target, bc, build_nodes(N, offsets), n_tail, meta={"offsets": list(map(float, offsets))})


def _cos_sum2(y):
    """``sum_{n>=1} cos(n y)/n**2`` for ``0 <= y <= 2 pi``."""
    return np.pi**2 / 6.0 - np.pi * y / 2.0 + y * y / 4.0


def _cos_sum4(y):
    """``sum_{n>=1} cos(n y)/n**4`` for ``0 <= y <= 2 pi``."""
    return np.pi**4 / 90.0 - np.pi**2 * y**2 / 12.0 + np.pi * y**3 / 12.0 - y**4 / 48.0


def tail_expansion(head):
    """Coefficients ``(b1, b2)`` with ``1/R(n) - 1 = b1/n**2 + b2/n**4 + O(n**-6)``."""
    head = np.asarray(head, dtype=float)
    k = np.arange(1, head.size + 1, dtype=float)
    p1 = float(np.sum(head**2 - k**2))
    p2 = float(np.sum(head**4 - k**4))
    return p1, 0.5 * p2 + 0.5 * p1 * p1


def g_series(data, y, n_tail=None, tail_correction=True):
    """``G(y) = sum_n (2 w_n cos(mu_n y) - (2/pi) cos(n y))`` over ``n <= n_tail``.

    With ``tail_correction`` the leading structural part of the terms past
    ``n_tail`` is added in closed form.
    """
    y = np.asarray(y, dtype=float)
    n_tail = data.n_tail if n_tail is None else n_tail
    if n_tail > data.n_tail:
        raise InvalidInputError("n_tail exceeds the constants held by the data")
    mus = data.mu_seq[:n_tail]
    a = 2.0 * data.w_seq[:n_tail]
    n = np.arange(1, n_tail + 1, dtype=float)
    N = data.N
    g = np.zeros(y.shape, dtype=np.complex128)
    if N:
        g += np.cos(np.outer(y, mus[:N])) @ a[:N] - (2.0 / np.pi) * np.cos(np.outer(y, n[:N])).sum(axis=1)
    if n_tail > N:
        g += np.cos(np.outer(y, n[N:])) @ (a[N:] - 2.0 / np.pi)
    if tail_correction and N:
        b1, b2 = tail_expansion(data.head)
        cn = np.cos(np.outer(y, n))
        rest2 = _cos_sum2(y) - cn @ (1.0 / n**2)
        rest4 = _cos_sum4(y) - cn @ (1.0 / n**4)
        g += (2.0 / np.pi) * (b1 * rest2 + b2 * rest4)
    return g


@dataclass
class KernelGrid:
    """Kernel samples on the shared grid ``x_i = i pi/(M-1)``."""

    x: np.ndarray
    F: np.ndarray
    G: np.ndarray
    n_tail: int
    data: GLData = None
    K: np.ndarray = None
    residuals: np.ndarray = None
    conds: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def point_count(self):
        return self.x.size

    @property
    def step(self):
        return self.x[1] - self.x[0]


def _f_from_g(g, m):
    i = np.arange(m)
    return 0.5 * (g[np.abs(i[:, None] - i[None, :])] - g[i[:, None] + i[None, :]])


def kernel_from_g(g, m):
    """Symmetric ``F`` on an ``m``-point grid from ``G`` sampled at ``y_k = k h``."""
    return _f_from_g(np.asarray(g), m)


def assemble_F(data, grid_points=DEFAULT_GL_POINTS, n_tail=None, tail_correction=True,
               assembly_tol=ASSEMBLY_TOL, max_doublings=4):
    """Assemble ``F`` and confirm it is stable under doubling of ``n_tail``.

    ``n_tail == data.N`` without ``tail_correction`` keeps only the head
    terms, a finite-rank kernel.  Data are extended automatically while
    doubling; :class:`ConvergenceError` if the change never drops below
    ``assembly_tol``.
    """
    if grid_points < 9:
        raise InvalidInputError("grid_points must be >= 9")
    n_tail = data.n_tail if n_tail is None else int(n_tail)
    x = np.linspace(0.0, np.pi, grid_points)
    h = x[1] - x[0]
    y = h * np.arange(2 * grid_points - 1)
    current = data if n_tail <= data.n_tail else data.extend(n_tail)
    g = g_series(current, y, n_tail, tail_correction)
    change = None
    if n_tail > data.N or tail_correction:
        for _ in range(max_doublings + 1):
            bigger = current if 2 * n_tail <= current.n_tail else current.extend(2 * n_tail)
            g2 = g_series(bigger, y, 2 * n_tail, tail_correction)
            dF = _f_from_g(g2 - g, grid_points)
            change = float(np.max(np.abs(dF)))
            if change <= assembly_tol:
                break
            current, g, n_tail = bigger, g2, 2 * n_tail
        else:
            raise ConvergenceError(
                f"F changed by {change:.3g} > {assembly_tol:g} at n_tail={n_tail}; "
                "the target may not decay as required"
            )
    F = _f_from_g(g, grid_points)
    return KernelGrid(x, F, g, n_tail, data=current,
                      meta={"tail_correction": tail_correction, "tail_change": change})


def finite_rank_kernel(nodes, coefs, grid_points=DEFAULT_GL_POINTS):
    """``F(x,t) = sum_k coefs_k sin(nodes_k x) sin(nodes_k t)`` as a KernelGrid."""
    x = np.linspace(0.0, np.pi, grid_points)
    y = (x[1] - x[0]) * np.arange(2 * grid_points - 1)
    g = np.cos(np.outer(y, np.asarray(nodes, dtype=float))) @ np.asarray(coefs, dtype=np.complex128)
    return KernelGrid(x, _f_from_g(g, grid_points), g, 0, meta={"finite_rank": True})


def trapezoid_weights(i, h):
    w = np.full(i + 1, h)
    w[0] = w[-1] = 0.5 * h
    if i == 0:
        w[:] = 0.0
    return w


def _solve_row(F, i, h):
    w = trapezoid_weights(i, h)
    Fi = F[: i + 1, : i + 1]
    A = np.eye(i + 1, dtype=np.complex128) + Fi * w[None, :]
    rhs = -F[i, : i + 1]
    lu, piv = lu_factor(A, check_finite=False)
    (gecon,) = get_lapack_funcs(("gecon",), (A,))
    rcond, _ = gecon(lu, np.linalg.norm(A, 1), norm="1")
    cond = math.inf if rcond == 0 else 1.0 / rcond
    k = lu_solve((lu, piv), rhs, check_finite=False)
    res = float(np.max(np.abs(A @ k - rhs)))
    return i, k, cond, res


def solve_gl(kernel, threads=None, cond_limit=COND_LIMIT, residual_tol=RESIDUAL_TOL):
    """Solve the discretized Gelfand-Levitan equation for every grid ``x``.

    For ``x = x_i`` the trapezoid rule on ``[0, x_i]`` turns the equation
    into ``(I + F_i W_i) k = -F(x_i, .)``.  Rows are independent and are
    solved in a thread pool.
    """
    F = np.asarray(kernel.F, dtype=np.complex128)
    m = F.shape[0]
    h = kernel.step
    K = np.zeros((m, m), dtype=np.complex128)
    conds = np.zeros(m)
    res = np.zeros(m)
    workers = thread_count() if threads is None else max(1, int(threads))
    rows = range(m)
    if workers == 1:
        results = map(lambda i: _solve_row(F, i, h), rows)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        results = pool.map(lambda i: _solve_row(F, i, h), rows)
    try:
        for i, k, cond, r in results:
            K[i, : i + 1] = k
            conds[i] = cond
            res[i] = r
    finally:
        if workers != 1:
            pool.shutdown()
    worst = int(np.argmax(conds))
    if conds[worst] > cond_limit:
        raise SingularSystemError(f"condition estimate {conds[worst]:.3g} at x={kernel.x[worst]:.4f}")
    if np.max(res) > residual_tol:
        raise SingularSystemError(f"residual {np.max(res):.3g} exceeds {residual_tol:g}")
    return replace(kernel, K=K, residuals=res, conds=conds)


def diagonal_derivative(d, h):
    """Five-point derivative of equispaced samples with one-sided closures."""
    d = np.asarray(d)
    m = d.size
    if m < 5:
        raise InvalidInputError("need at least 5 samples")
    out = np.empty_like(d)
    out[2:-2] = (d[:-4] - 8.0 * d[1:-3] + 8.0 * d[3:-1] - d[4:]) / (12.0 * h)
    out[0] = (-25.0 * d[0] + 48.0 * d[1] - 36.0 * d[2] + 16.0 * d[3] - 3.0 * d[4]) / (12.0 * h)
    out[1] = (-3.0 * d[0] - 10.0 * d[1] + 18.0 * d[2] - 6.0 * d[3] + d[4]) / (12.0 * h)
    out[-1] = (25.0 * d[-1] - 48.0 * d[-2] + 36.0 * d[-3] - 16.0 * d[-4] + 3.0 * d[-5]) / (12.0 * h)
    out[-2] = (3.0 * d[-1] + 10.0 * d[-2] - 18.0 * d[-3] + 6.0 * d[-4] - d[-5]) / (12.0 * h)
    return out


def extract_potential(kernel):
    """``qhat(x) = 2 d/dx K(x, x)`` on the kernel grid."""
    if kernel.K is None:
        raise InvalidInputError("kernel has not been solved")
    return PotentialGrid(2.0 * diagonal_derivative(np.diag(kernel.K), kernel.step))


def verify_reconstruction(qhat, data, check_cap=8, mu_grid=None, tol=1e-4, det_tol=1e-3):
    """Forward-solve ``qhat`` and compare with the data it was built from.

    Checks ``s(pi, mu_n) = 0``, ``c(pi, mu_n) = c_n``, ``s'(pi, mu_n) = 1/c_n``
    for ``n <= check_cap`` and ``Delta(mu) = u(mu)`` on ``mu_grid``
    (default: 101 points on [0, 10]).
    """
    cap = min(check_cap, data.n_tail)
    mus = data.mu_seq[:cap].astype(np.complex128)
    ends = solve_fundamental_batch(qhat, mus)
    c = data.c_seq[:cap]
    s_res = np.abs(ends[:, 2])
    c_res = np.abs(ends[:, 0] - c)
    sp_res = np.abs(ends[:, 3] - 1.0 / c)
    grid = np.linspace(0.0, 10.0, 101) if mu_grid is None else np.asarray(mu_grid)
    det = determinant(qhat, data.bc, grid.astype(np.complex128))
    target = np.asarray(data.target(grid.astype(np.complex128)))
    det_res = np.abs(det - target)
    ok = bool(
        np.max(s_res) <= tol and np.max(c_res) <= tol and np.max(sp_res) <= tol
        and np.max(det_res) <= det_tol
    )
    return {
        "nodes": data.mu_seq[:cap].tolist(),
        "s_end_abs": s_res.tolist(),
        "c_end_err": c_res.tolist(),
        "s_prime_end_err": sp_res.tolist(),
        "mu_grid": grid.tolist(),
        "determinant_err": det_res.tolist(),
        "max_s_end": float(np.max(s_res)),
        "max_c_err": float(np.max(c_res)),
        "max_s_prime_err": float(np.max(sp_res)),
        "max_determinant_err": float(np.max(det_res)),
        "tol": tol,
        "det_tol": det_tol,
        "verdict": "PASS" if ok else "FAIL",
    }


def reconstruct(target, bc, N=None, offsets=None, n_tail=DEFAULT_N_TAIL, grid_points=DEFAULT_GL_POINTS,
                tail_correction=True, assembly_tol=ASSEMBLY_TOL, threads=None):
    """Full pipeline; returns ``(data, kernel, qhat)``."""
    data = build_gl_data(target, bc, N, offsets, n_tail)
    kernel = assemble_F(data, grid_points, tail_correction=tail_correction, assembly_tol=assembly_tol)
    kernel = solve_gl(kernel, threads)
    return kernel.data, kernel, extract_potential(kernel)


def dirichlet_nodes(qhat, nodes, tol=1e-10):
    """Refine zeros of ``s(pi, mu)`` for ``qhat`` by Newton from each prescribed node.

    Returns the refined roots and a convergence flag per node.
    """
    model = CallableModel(lambda mu: solve_fundamental_batch(qhat, mu.reshape(-1))[:, 2].reshape(mu.shape))
    roots, flags = [], []
    for mu0 in np.asarray(nodes, dtype=float):
        mu, _, ok = newton(model, complex(mu0), tol=tol, max_step=0.25)
        roots.append(mu)
        flags.append(bool(ok))
    return np.array(roots, dtype=np.complex128), np.array(flags)
