"""RK4 kernels for the fundamental system of ``u'' = (q(x) - lam) u``.

Both backends integrate the four-component state ``(c, c', s, s')`` with
the classical fourth-order scheme.  ``qf`` holds the potential at every
half substep: ``qf[2*j]``, ``qf[2*j+1]``, ``qf[2*j+2]`` are q at the start,
midpoint and end of substep ``j``.
"""

import numpy as np

from ._backend import HAVE_NUMBA, njit, prange


@njit(cache=True, inline="always")
def _rk4_pair(y0, y1, ga, gm, gb, hs):
    half = 0.5 * hs
    k1a = y1
    k1b = ga * y0
    k2a = y1 + half * k1b
    k2b = gm * (y0 + half * k1a)
    k3a = y1 + half * k2b
    k3b = gm * (y0 + half * k2a)
    k4a = y1 + hs * k3b
    k4b = gb * (y0 + hs * k3a)
    sixth = hs / 6.0
    y0n = y0 + sixth * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    y1n = y1 + sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return y0n, y1n


@njit(cache=True)
def _endpoint_one(qf, lam, nsteps, hs):
    c0 = 1.0 + 0.0j
    c1 = 0.0 + 0.0j
    s0 = 0.0 + 0.0j
    s1 = 1.0 + 0.0j
    for j in range(nsteps):
        ga = qf[2 * j] - lam
        gm = qf[2 * j + 1] - lam
        gb = qf[2 * j + 2] - lam
        c0, c1 = _rk4_pair(c0, c1, ga, gm, gb, hs)
        s0, s1 = _rk4_pair(s0, s1, ga, gm, gb, hs)
    return c0, c1, s0, s1


@njit(cache=True, parallel=True)
def _endpoint_batch_numba(qf, lams, nsteps, hs):
    out = np.empty((lams.shape[0], 4), dtype=np.complex128)
    for i in prange(lams.shape[0]):
        c0, c1, s0, s1 = _endpoint_one(qf, lams[i], nsteps, hs)
        out[i, 0] = c0
        out[i, 1] = c1
        out[i, 2] = s0
        out[i, 3] = s1
    return out


@njit(cache=True)
def _path_numba(qf, lam, nsteps, hs, stride):
    npts = nsteps // stride + 1
    out = np.empty((npts, 4), dtype=np.complex128)
    c0 = 1.0 + 0.0j
    c1 = 0.0 + 0.0j
    s0 = 0.0 + 0.0j
    s1 = 1.0 + 0.0j
    out[0, 0] = c0
    out[0, 1] = c1
    out[0, 2] = s0
    out[0, 3] = s1
    for j in range(nsteps):
        ga = qf[2 * j] - lam
        gm = qf[2 * j + 1] - lam
        gb = qf[2 * j + 2] - lam
        c0, c1 = _rk4_pair(c0, c1, ga, gm, gb, hs)
        s0, s1 = _rk4_pair(s0, s1, ga, gm, gb, hs)
        if (j + 1) % stride == 0:
            k = (j + 1) // stride
            out[k, 0] = c0
            out[k, 1] = c1
            out[k, 2] = s0
            out[k, 3] = s1
    return out


def _pair_numpy(y0, y1, ga, gm, gb, hs):
    half = 0.5 * hs
    k1a = y1
    k1b = ga * y0
    k2a = y1 + half * k1b
    k2b = gm * (y0 + half * k1a)
    k3a = y1 + half * k2b
    k3b = gm * (y0 + half * k2a)
    k4a = y1 + hs * k3b
    k4b = gb * (y0 + hs * k3a)
    sixth = hs / 6.0
    return (
        y0 + sixth * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
        y1 + sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b),
    )


def _run_numpy(qf, lams, nsteps, hs, stride=None):
    lams = np.asarray(lams, dtype=np.complex128)
    c0 = np.ones_like(lams)
    c1 = np.zeros_like(lams)
    s0 = np.zeros_like(lams)
    s1 = np.ones_like(lams)
    path = None
    if stride is not None:
        path = np.empty((nsteps // stride + 1, 4, lams.size), dtype=np.complex128)
        path[0] = (c0, c1, s0, s1)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(nsteps):
            ga = qf[2 * j] - lams
            gm = qf[2 * j + 1] - lams
            gb = qf[2 * j + 2] - lams
            c0, c1 = _pair_numpy(c0, c1, ga, gm, gb, hs)
            s0, s1 = _pair_numpy(s0, s1, ga, gm, gb, hs)
            if stride is not None and (j + 1) % stride == 0:
                path[(j + 1) // stride] = (c0, c1, s0, s1)
    if stride is not None:
        return path
    return np.stack([c0, c1, s0, s1], axis=1)


def endpoint_batch(qf, lams, nsteps, hs, backend=None):
    """Endpoint states for every ``lam`` in ``lams``; shape ``(len(lams), 4)``."""
    use_numba = HAVE_NUMBA if backend is None else backend == "numba"
    lams = np.ascontiguousarray(lams, dtype=np.complex128)
    if use_numba:
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return _endpoint_batch_numba(qf, lams, nsteps, hs)
    return _run_numpy(qf, lams, nsteps, hs)


def path_single(qf, lam, nsteps, hs, stride, backend=None):
    """States at every ``stride`` substeps for one ``lam``; shape ``(npts, 4)``."""
    use_numba = HAVE_NUMBA if backend is None else backend == "numba"
    if use_numba:
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return _path_numba(qf, complex(lam), nsteps, hs, stride)
    return _run_numpy(qf, np.array([lam]), nsteps, hs, stride=stride)[:, :, 0]
