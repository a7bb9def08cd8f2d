"""Independent reference computations for the test-suite.

Nothing here calls the closed forms under test; equilibria come from
bisection, Jacobians from central differences, spectra from eigensolvers or
characteristic polynomials, and folded singularities from bracketed sampling
of the raw vector field.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment


def bisect(f, lo, hi, tol=1e-13, maxiter=300):
    flo = f(lo)
    if flo == 0:
        return lo
    if flo * f(hi) > 0:
        raise ValueError("no sign change")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or hi - lo < tol:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cubic_root_bisect(p, q, lo=-50.0, hi=50.0):
    """Unique real root of y^3/3 + p y + q (p > 0) by bisection."""
    return bisect(lambda y: y ** 3 / 3 + p * y + q, lo, hi, tol=1e-14)


def single_eq_bisect(a, b, I):
    y = cubic_root_bisect(1 / b - 1, a - I)
    return y, y / b


def pair_eq_bisect(a, b, I, g):
    yA = cubic_root_bisect(1 / b - 1, a - I)
    yB = cubic_root_bisect(1 / b - 1 + g, a - g * yA)
    return yA, yB


def fd_jacobian(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x))
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h)
    return J


def match_multisets(a, b):
    """Largest pairwise distance under the optimal one-to-one matching."""
    a, b = np.asarray(a, complex), np.asarray(b, complex)
    assert a.shape == b.shape
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def min_separation(values):
    v = np.asarray(values, complex)
    if len(v) < 2:
        return np.inf
    d = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def charpoly_roots(J):
    """Eigenvalues via Faddeev-LeVerrier coefficients and companion roots."""
    n = J.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(J)
    I = np.eye(n)
    for k in range(1, n + 1):
        M = J @ M + coeffs[-1] * I
        c = -np.trace(J @ M) / k
        coeffs.append(c)
    return np.roots(coeffs)


def hopf_inputs_bisect(a, b, eps):
    """Inputs where the single-neuron block trace vanishes, by nested bisection."""
    def tr(I):
        y, _ = single_eq_bisect(a, b, I)
        return 1 - y * y - b * eps
    return bisect(tr, -2.0, a, tol=1e-13), bisect(tr, a, a + 3.0, tol=1e-13)


def cubic_coefficient_fd(field, p, J, h=1e-3):
    """Cubic coefficient of a planar field at a Hopf equilibrium ``p``.

    The linear part ``J`` must have zero trace.  Coordinates
    ``u = x1, w = (-omega x2 - J11 x1)/J12`` bring it to rotation form;
    F and G are the nonlinear remainders, differentiated numerically
    (the field is polynomial, so h=1e-3 is ample).
    """
    j11, j12 = J[0]
    omega = math.sqrt(np.linalg.det(J))
    T = np.array([[1.0, 0.0], [-j11 / j12, -omega / j12]])
    Tinv = np.linalg.inv(T)
    L = np.array([[0.0, -omega], [omega, 0.0]])

    def FG(x1, x2):
        x = np.array([x1, x2])
        return Tinv @ np.asarray(field(p + T @ x)) - L @ x

    def second(fun, k1, k2):
        if k1 == k2:
            e = (h, 0) if k1 == 0 else (0, h)
            return (fun(*e) - 2 * fun(0, 0) + fun(-e[0], -e[1])) / h ** 2
        return (fun(h, h) - fun(h, -h) - fun(-h, h) + fun(-h, -h)) / (4 * h * h)

    def third(fun, ks):
        # derivative of the second derivative along ks[0]
        k0, rest = ks[0], ks[1:]
        if k0 == 0:
            return (second(lambda u, v: fun(u + h, v), *rest) - second(lambda u, v: fun(u - h, v), *rest)) / (2 * h)
        return (second(lambda u, v: fun(u, v + h), *rest) - second(lambda u, v: fun(u, v - h), *rest)) / (2 * h)

    F = lambda u, v: FG(u, v)[0]  # noqa: E731
    G = lambda u, v: FG(u, v)[1]  # noqa: E731
    cubic = third(F, (0, 0, 0)) + third(F, (0, 1, 1)) + third(G, (0, 0, 1)) + third(G, (1, 1, 1))
    F11, F12, F22 = second(F, 0, 0), second(F, 0, 1), second(F, 1, 1)
    G11, G12, G22 = second(G, 0, 0), second(G, 0, 1), second(G, 1, 1)
    quad = F12 * (F11 + F22) - G12 * (G11 + G22) - F11 * G11 + F22 * G22
    return cubic / 16 + quad / (16 * omega)


def fn_block_field(a, b, eps, I_eff, gamma=0.0):
    """Planar FN field with an extra linear leak ``-gamma y`` (a driven node)."""
    def f(x):
        y, z = x
        return np.array([y - y ** 3 / 3 - a - z + I_eff - gamma * y, eps * (y - b * z)])
    return f


def folded_roots_sampled(a, b, I, g, yB, lo=-300.0, hi=300.0, n=600001):
    """yA roots of the folded-singularity condition on the fold line ``yB``.

    On a fold line the first desingularized component vanishes identically,
    so the roots are those of rho2 restricted to the line; found by
    sign-change scanning plus brentq on the raw field.
    """
    def rho2(yA):
        zA = yA - yA ** 3 / 3 - a + I
        zB = yB - yB ** 3 / 3 - a + g * (yA - yB)
        return -g * (yA - b * zA) + (1 - yA * yA) * (yB - b * zB)

    xs = np.linspace(lo, hi, n)
    v = rho2(xs)
    roots = []
    for k in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        roots.append(brentq(rho2, xs[k], xs[k + 1], xtol=1e-15))
    roots += [x for x, val in zip(xs, v) if val == 0.0]
    return sorted(roots)
