"""Evaluable entire functions: determinants, node products and the two examples.

Infinite products with almost-integer zeros are evaluated as finite
quotients against ``sin(pi mu)``:

    pi mu prod_n (mu_n**2 - mu**2) / n**2
        = sin(pi mu) prod_{n <= N} (mu_n**2 - mu**2) / (n**2 - mu**2)

when ``mu_n = n`` beyond ``N``.  The factor whose pole sits nearest to mu
is combined with the sine analytically, so evaluation is stable right at
the integers.

Every model is a callable accepting scalars or arrays and returning
complex values of the same shape.
"""

import ast
import math

import numpy as np

from .errors import InvalidInputError
from .fundamental import SOLVER_TOL, PotentialGrid
from .spectral import BoundaryParams, determinant

EXAMPLE2_DEFAULT_PMAX = 16


def _sinc(z):
    """``sin(pi z) / (pi z)`` for complex arrays, 1 at the origin."""
    z = np.asarray(z, dtype=np.complex128)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    pz2 = (np.pi * z) ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        direct = np.sin(np.pi * safe) / (np.pi * safe)
    return np.where(small, 1.0 - pz2 / 6.0 + pz2 * pz2 / 120.0, direct)


def _sin_over(z, k):
    """``sin(pi z) / (k**2 - z**2)`` for integer ``k >= 1``, finite at ``z = k``."""
    z = np.asarray(z, dtype=np.complex128)
    k = np.asarray(k)
    d = z - k
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    near = -sign * np.pi * _sinc(d) / (2 * k + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        far = np.sin(np.pi * z) / (k * k - z * z)
    return np.where(np.abs(d) < 0.5, near, far)


def _canonical(mu):
    """Representative of ``{mu, -mu}`` with nonnegative real part."""
    mu = np.asarray(mu, dtype=np.complex128)
    flip = (mu.real < 0) | ((mu.real == 0) & (mu.imag < 0))
    return np.where(flip, -mu, mu)


def sine_quotient(mu):
    """``sin(pi mu) / mu`` with the value ``pi`` at the origin."""
    out = np.pi * _sinc(mu)
    return complex(out) if np.ndim(mu) == 0 else out


def truncated_sine_product(mu, n_terms):
    """Raw partial product ``pi prod_{n<=n_terms} (1 - mu**2/n**2)``."""
    mu = np.asarray(mu, dtype=np.complex128)
    n = np.arange(1, n_terms + 1, dtype=float)
    out = np.pi * np.prod(1.0 - (mu[..., None] / n) ** 2, axis=-1)
    return complex(out) if out.ndim == 0 else out


def _node_quotient(nodes, z):
    """``prod_k (nodes_k**2 - z**2)/(k**2 - z**2)`` times ``sin(pi z)/z``, stable for Re z >= 0."""
    nodes = np.asarray(nodes, dtype=np.complex128)
    n_head = nodes.size
    if n_head == 0:
        return np.pi * _sinc(z)
    kstar = np.clip(np.rint(z.real), 1, n_head).astype(int)
    near = np.abs(z - kstar) < 0.5
    prod = np.ones_like(z)
    z2 = z * z
    for k in range(1, n_head + 1):
        num = nodes[k - 1] ** 2 - z2
        den = np.where(near & (kstar == k), 1.0, k * k - z2)
        prod = prod * (num / den)
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.where(near, _sin_over(z, kstar) / np.where(near, z, 1.0), np.pi * _sinc(z))
    return lead * prod


def node_product_s(head_nodes, mu):
    """``s(mu) = pi prod_n (mu_n**2 - mu**2)/n**2`` with ``mu_n = n`` beyond the head."""
    head = np.asarray(head_nodes, dtype=np.complex128).reshape(-1)
    arr = np.asarray(mu, dtype=np.complex128)
    out = _node_quotient(head, _canonical(arr))
    return complex(out) if arr.ndim == 0 else out


def node_product_sdot(head_nodes, n):
    """Derivative ``s'(mu_n)`` of :func:`node_product_s` at its n-th zero."""
    head = np.asarray(head_nodes, dtype=np.complex128).reshape(-1)
    n = int(n)
    if n < 1:
        raise InvalidInputError(f"node index must be >= 1, got {n}")
    n_head = head.size
    if n > n_head:
        k = np.arange(1, n_head + 1)
        ratio = np.prod((head**2 - n * n) / (k * k - n * n)) if n_head else 1.0
        return complex(np.pi * (-1) ** n / n * ratio)
    mu = head[n - 1]
    z = mu if (mu.real > 0 or (mu.real == 0 and mu.imag >= 0)) else -mu
    sgn = 1.0 if z == mu else -1.0
    kstar = int(np.clip(round(z.real), 1, n_head))
    others = np.prod([head[k - 1] ** 2 - mu**2 for k in range(1, n_head + 1) if k != n])
    dens = np.prod([k * k - mu**2 for k in range(1, n_head + 1) if k != kstar])
    # d/dmu of (mu_n^2 - mu^2) * sin(pi mu)/mu  ->  -2 sin(pi mu) at the zero
    return complex(-2.0 * sgn * others * complex(_sin_over(z, kstar)) / dens)


def spectrum_product_u(b, theta, nodes, mu):
    """``(-1)**(theta+1) b pi mu prod_n (lam_n - mu**2)/n**2`` with ``mu_n = n`` past the list."""
    sign = -1.0 if theta == 0 else 1.0
    arr = np.asarray(mu, dtype=np.complex128)
    out = sign * complex(b) * arr * _node_quotient(np.asarray(nodes, dtype=np.complex128), _canonical(arr))
    return complex(out) if arr.ndim == 0 else out


def _example1_parts(k, alpha):
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidInputError(f"k must be a positive integer, got {k!r}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha!r}")
    a = alpha * np.pi / k
    c = (1.0 - alpha) * np.pi / k
    return a, c


def example1_f(k, alpha, mu):
    """``sin(a pi mu/k)**k sin((1-a) pi mu/k)**k / mu**(2k-1)``, zero at the origin."""
    a, c = _example1_parts(k, alpha)
    arr = np.asarray(mu, dtype=np.complex128)
    out = (a * c) ** k * arr * (_sinc(alpha * arr / k) * _sinc((1.0 - alpha) * arr / k)) ** k
    return complex(out) if arr.ndim == 0 else out


def example2_clusters(p0, p_max):
    """Indices ``n = 2**p + j`` (``j = 1..floor(ln p)``) whose node moves to ``2**(p+1)``."""
    out = []
    for p in range(p0, p_max + 1):
        for j in range(1, int(math.floor(math.log(p))) + 1):
            out.append((2**p + j, 2 ** (p + 1)))
    return out


def _example2_det(p0, p_max, mu):
    arr = np.asarray(mu, dtype=np.complex128)
    mu2 = arr * arr
    z = _canonical(arr) / 2.0
    clusters = example2_clusters(p0, p_max)
    base_n = np.array([c[0] for c in clusters])
    nstar = np.zeros(z.shape, dtype=int)
    near = np.zeros(z.shape, dtype=bool)
    if clusters:
        dist = np.abs(z[..., None] - base_n)
        j = np.argmin(dist, axis=-1)
        nstar = base_n[j]
        near = np.take_along_axis(dist, j[..., None], axis=-1)[..., 0] < 0.5
    prod = np.ones_like(arr)
    for n, node in clusters:
        num = node * node - mu2
        den = np.where(near & (nstar == n), 1.0, 4.0 * n * n - mu2)
        prod = prod * (num / den) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        near_lead = _sin_over(z, np.where(near, nstar, 1)) / (4.0 * np.pi * np.where(near, z, 1.0))
    lead = np.where(near, near_lead, _sinc(z))
    return (np.pi**2 / 4.0) * lead**2 * prod


def example2_u(p0, p_max, mu):
    """Squared node product with clustered nodes, odd in ``mu``."""
    _check_example2(p0, p_max)
    arr = np.asarray(mu, dtype=np.complex128)
    out = arr * _example2_det(p0, p_max, arr)
    return complex(out) if arr.ndim == 0 else out


def _check_example2(p0, p_max):
    if p0 < 10:
        raise InvalidInputError(f"p0 must be >= 10, got {p0}")
    if p_max < p0:
        raise InvalidInputError(f"P_max must be >= p0, got {p_max} < {p0}")


class EntireModel:
    """Base class; subclasses implement ``_eval`` on complex arrays."""

    variant = "abstract"
    even = True

    def __call__(self, mu):
        arr = np.asarray(mu, dtype=np.complex128)
        out = np.asarray(self._eval(arr), dtype=np.complex128)
        return complex(out) if arr.ndim == 0 else out.reshape(arr.shape)

    def _eval(self, mu):
        raise NotImplementedError

    def descriptor(self):
        raise TypeError(f"{type(self).__name__} is not serializable")

    def __repr__(self):
        try:
            d = self.descriptor()
        except TypeError:
            d = {}
        return f"{type(self).__name__}({d})"


class ZeroModel(EntireModel):
    variant = "zero"

    def _eval(self, mu):
        return np.zeros_like(mu)

    def descriptor(self):
        return {"variant": self.variant}


class SineQuotient(EntireModel):
    """``scale * sin(pi mu)/mu``."""

    variant = "sine_quotient"

    def __init__(self, scale=1.0):
        self.scale = complex(scale)

    def _eval(self, mu):
        return self.scale * np.pi * _sinc(mu)

    def descriptor(self):
        return {"variant": self.variant, "scale_re": self.scale.real, "scale_im": self.scale.imag}


class NodeProduct(EntireModel):
    """``s(mu)`` with head nodes ``mu_1..mu_N`` and ``mu_n = n`` afterwards."""

    variant = "node_product"

    def __init__(self, head_nodes):
        self.head = np.asarray(head_nodes, dtype=np.complex128).reshape(-1).copy()
        self.head.setflags(write=False)

    def _eval(self, mu):
        return _node_quotient(self.head, _canonical(mu))

    def sdot(self, n):
        return node_product_sdot(self.head, n)

    def descriptor(self):
        return {
            "variant": self.variant,
            "nodes_re": self.head.real.tolist(),
            "nodes_im": self.head.imag.tolist(),
        }


class SpectrumProduct(EntireModel):
    """Determinant ``u(mu)/mu`` built from prescribed spectrum nodes and ``(b, theta)``."""

    variant = "spectrum_product"

    def __init__(self, b, theta, nodes):
        self.bc = BoundaryParams(b, theta)
        self.nodes = np.asarray(nodes, dtype=np.complex128).reshape(-1).copy()
        self.nodes.setflags(write=False)

    @property
    def b(self):
        return self.bc.b

    def _eval(self, mu):
        return self.bc.sign * self.bc.b * _node_quotient(self.nodes, _canonical(mu))

    def u(self, mu):
        return spectrum_product_u(self.bc.b, self.bc.theta, self.nodes, mu)

    def descriptor(self):
        return {
            "variant": self.variant,
            "b_re": self.bc.b.real,
            "b_im": self.bc.b.imag,
            "theta": self.bc.theta,
            "nodes_re": self.nodes.real.tolist(),
            "nodes_im": self.nodes.imag.tolist(),
        }


class Example1(EntireModel):
    """Determinant ``f_1(mu)/mu``; zeros of order ``k`` at ``m k/alpha`` and ``m k/(1-alpha)``."""

    variant = "example1"

    def __init__(self, k, alpha):
        _example1_parts(k, alpha)
        self.k = int(k)
        self.alpha = float(alpha)
        self.bc = BoundaryParams(0.0, 0)

    def _eval(self, mu):
        a, c = _example1_parts(self.k, self.alpha)
        return (a * c) ** self.k * (_sinc(self.alpha * mu / self.k) * _sinc((1 - self.alpha) * mu / self.k)) ** self.k

    def f(self, mu):
        return example1_f(self.k, self.alpha, mu)

    def descriptor(self):
        return {"variant": self.variant, "k": self.k, "alpha": self.alpha}


class Example2(EntireModel):
    """Determinant ``u(mu)/mu`` for the clustered squared product."""

    variant = "example2"

    def __init__(self, p0=10, p_max=EXAMPLE2_DEFAULT_PMAX):
        _check_example2(p0, p_max)
        self.p0 = int(p0)
        self.p_max = int(p_max)
        self.bc = BoundaryParams(0.0, 0)

    def _eval(self, mu):
        return _example2_det(self.p0, self.p_max, mu)

    def u(self, mu):
        return example2_u(self.p0, self.p_max, mu)

    def descriptor(self):
        return {"variant": self.variant, "p0": self.p0, "p_max": self.p_max}


class OdeDeterminant(EntireModel):
    """Characteristic determinant computed from the fundamental system of ``q``."""

    variant = "ode_determinant"

    def __init__(self, q, bc):
        self.q = q
        self.bc = bc

    @property
    def b(self):
        return self.bc.b

    def _eval(self, mu):
        return determinant(self.q, self.bc, mu.reshape(-1))

    def descriptor(self):
        return {
            "variant": self.variant,
            "potential": {
                "point_count": self.q.point_count,
                "samples_re": self.q.samples.real.tolist(),
                "samples_im": self.q.samples.imag.tolist(),
            },
            "b_re": self.bc.b.real,
            "b_im": self.bc.b.imag,
            "theta": self.bc.theta,
        }


_EXPR_FUNCS = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "abs")
}
_EXPR_FUNCS["sinc"] = _sinc
_EXPR_CONSTS = {"pi": np.pi, "e": np.e, "j": 1j, "i": 1j}
_EXPR_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


class ExpressionModel(EntireModel):
    """Closed-form model from an arithmetic expression in ``mu``.

    Only numpy elementary functions, ``pi``, ``e``, ``j`` and arithmetic
    are accepted, e.g. ``"sin(pi*mu/2)**2/mu**2"``.  The caller declares
    the value at the origin when the expression has a removable
    singularity there.
    """

    variant = "expression"

    def __init__(self, expr, value_at_zero=None, even=True):
        tree = ast.parse(expr, mode="eval")
        for node in ast.walk(tree):
            if not isinstance(node, _EXPR_NODES):
                raise InvalidInputError(f"unsupported syntax in expression: {type(node).__name__}")
            if isinstance(node, ast.Name) and node.id not in _EXPR_FUNCS and node.id not in _EXPR_CONSTS and node.id != "mu":
                raise InvalidInputError(f"unknown name {node.id!r} in expression")
            if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float, complex)):
                raise InvalidInputError("only numeric constants are allowed")
        self.expr = expr
        self._code = compile(tree, "<expr>", "eval")
        self.value_at_zero = None if value_at_zero is None else complex(value_at_zero)
        self.even = bool(even)

    def _eval(self, mu):
        env = dict(_EXPR_FUNCS)
        env.update(_EXPR_CONSTS)
        with np.errstate(divide="ignore", invalid="ignore"):
            env["mu"] = mu
            out = np.asarray(eval(self._code, {"__builtins__": {}}, env), dtype=np.complex128)
        out = np.broadcast_to(out, mu.shape).copy()
        if self.value_at_zero is not None:
            out[mu == 0] = self.value_at_zero
        return out

    def descriptor(self):
        d = {"variant": self.variant, "expr": self.expr, "even": self.even}
        if self.value_at_zero is not None:
            d["zero_re"] = self.value_at_zero.real
            d["zero_im"] = self.value_at_zero.imag
        return d


class CallableModel(EntireModel):
    """Wrap an arbitrary vectorized callable (tests and ad hoc targets)."""

    variant = "callable"

    def __init__(self, fn, even=True, bc=None):
        self.fn = fn
        self.even = even
        if bc is not None:
            self.bc = bc

    def _eval(self, mu):
        return self.fn(mu)


def _cplx(d, key, default=0.0):
    return complex(d.get(f"{key}_re", default), d.get(f"{key}_im", 0.0))


def model_from_descriptor(d):
    """Inverse of ``EntireModel.descriptor``."""
    try:
        variant = d["variant"]
    except (KeyError, TypeError):
        raise InvalidInputError("model descriptor needs a 'variant' field") from None
    if variant == "zero":
        return ZeroModel()
    if variant == "sine_quotient":
        return SineQuotient(_cplx(d, "scale", 1.0))
    if variant == "node_product":
        return NodeProduct(np.asarray(d["nodes_re"]) + 1j * np.asarray(d.get("nodes_im", [0.0] * len(d["nodes_re"]))))
    if variant == "spectrum_product":
        nodes = np.asarray(d["nodes_re"]) + 1j * np.asarray(d.get("nodes_im", [0.0] * len(d["nodes_re"])))
        return SpectrumProduct(_cplx(d, "b", 1.0), int(d.get("theta", 0)), nodes)
    if variant == "example1":
        return Example1(int(d["k"]), float(d["alpha"]))
    if variant == "example2":
        return Example2(int(d.get("p0", 10)), int(d.get("p_max", EXAMPLE2_DEFAULT_PMAX)))
    if variant == "ode_determinant":
        pot = d["potential"]
        q = PotentialGrid(np.asarray(pot["samples_re"]) + 1j * np.asarray(pot["samples_im"]))
        return OdeDeterminant(q, BoundaryParams(_cplx(d, "b"), int(d.get("theta", 0))))
    if variant == "expression":
        zero = None
        if "zero_re" in d or "zero_im" in d:
            zero = _cplx(d, "zero")
        return ExpressionModel(d["expr"], zero, bool(d.get("even", True)))
    raise InvalidInputError(f"unknown model variant {variant!r}")


DYADIC_WINDOWS = tuple((8.0 * 2**j, 8.0 * 2 ** (j + 1)) for j in range(6))


def pw_structure_check(model, bc, windows=DYADIC_WINDOWS, spacing=0.5, n_odd=24, odd_tol=1e-8):
    """Numerical evidence that ``mu*Delta(mu) - (-1)**(theta+1) b sin(pi mu)`` is odd and decays.

    Returns a dict with ``odd_defect``, ``scale``, ``real_axis_decay``
    (L2 norms over the dyadic windows, from equispaced samples offset by
    half a spacing) and ``verdict`` ``"PASS"`` or ``"FAIL"``.
    """
    sign_b = bc.sign * bc.b
    j = np.arange(n_odd)
    pts = np.linspace(0.3, 20.3, n_odd) + 1j * 0.9 * np.sin(1.7 * j)

    def f(mu):
        return mu * model(mu) - sign_b * np.sin(np.pi * mu)

    fp, fm = f(pts), f(-pts)
    odd_defect = float(np.max(np.abs(fp + fm)))
    scale = max(1.0, abs(bc.b), float(np.max(np.abs(fp))))

    norms = []
    for a, b in windows:
        n = int(round((b - a) / spacing))
        x = a + spacing * (np.arange(n) + 0.5)
        norms.append(float(np.sqrt(spacing * np.sum(np.abs(f(x.astype(np.complex128))) ** 2))))
    # growth below the solver noise floor is not evidence against decay;
    # f = mu * Delta carries an absolute error of about mu * SOLVER_TOL
    floors = [SOLVER_TOL * scale * b * math.sqrt(b - a) for a, b in windows]
    decreasing = all(norms[i + 1] <= norms[i] + floors[i + 1] for i in range(len(norms) - 1))
    odd_ok = odd_defect <= odd_tol * scale
    return {
        "odd_defect": odd_defect,
        "scale": scale,
        "odd_ok": odd_ok,
        "real_axis_decay": norms,
        "decay_ok": decreasing,
        "verdict": "PASS" if (odd_ok and decreasing) else "FAIL",
    }
