"""Independent reference values frozen into the C++ unit tests.

Run: python3 tests/oracles/generate.py
"""
import numpy as np
from scipy.integrate import quad, dblquad, solve_ivp
from scipy.optimize import brentq

B0, W = 0.5, 2.0


def bump(x1, x2):
    return B0 / (1.0 + (x1 * x1 + x2 * x2) / W**2)


def transverse_A(x):
    # A_j(x) = -sum_k int_0^1 B_jk(s x) s x_k ds with B_12 = bump, B_21 = -bump.
    a1 = -quad(lambda s: bump(s * x[0], s * x[1]) * s * x[1], 0, 1, epsabs=1e-14, epsrel=1e-13)[0]
    a2 = quad(lambda s: bump(s * x[0], s * x[1]) * s * x[0], 0, 1, epsabs=1e-14, epsrel=1e-13)[0]
    return np.array([a1, a2])


def circulation(x, y):
    x, y = np.asarray(x), np.asarray(y)
    return quad(lambda t: transverse_A(x + t * (y - x)) @ (y - x), 0, 1, epsabs=1e-14, epsrel=1e-13)[0]


def triangle_flux(p, q, r):
    p, q, r = map(np.asarray, (p, q, r))
    e1, e2 = q - p, r - p
    jac = e1[0] * e2[1] - e1[1] * e2[0]  # signed, positive for counter-clockwise

    def f(v, u):
        z = p + u * e1 + v * e2
        return bump(z[0], z[1])

    val = dblquad(f, 0, 1, 0, lambda u: 1 - u, epsabs=1e-14, epsrel=1e-13)[0]
    return jac * val


C = 0.3


def aniso_rhs(t, X):
    x, xi, _ = X
    j = np.sqrt(1 + xi * xi)
    dxi = xi / j + C * np.sin(x) / j**3          # d/dxi of <xi> + c sin x xi/<xi>
    dx = C * np.cos(x) * xi / j
    a = j + C * np.sin(x) * xi / j
    return [dxi, -dx, xi * dxi - a]


def aniso_flow(y, eta, t):
    sol = solve_ivp(aniso_rhs, (0, t), [y, eta, 0.0], rtol=1e-13, atol=1e-14, method="DOP853")
    return sol.y[:, -1]


def aniso_eikonal(t, x, eta):
    y = brentq(lambda y: aniso_flow(y, eta, t)[0] - x, x - 2, x + 2, xtol=1e-15)
    xf, xif, act = aniso_flow(y, eta, t)
    return y * eta + act, xif, y


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    print("transverse_A(0.7,-0.4) =", repr(transverse_A([0.7, -0.4])))
    print("circulation((-1,0.5)->(0.8,1.2)) =", repr(circulation([-1.0, 0.5], [0.8, 1.2])))
    print("triangle_flux =", repr(triangle_flux([0.0, 0.0], [1.5, 0.2], [-0.3, 1.1])))
    print("aniso_flow(0.3, 2.0, 1.0) =", repr(aniso_flow(0.3, 2.0, 1.0)))
    U, xi, y = aniso_eikonal(0.2, 0.4, 1.5)
    print("aniso_eikonal(0.2, 0.4, 1.5): U, xi, y =", repr(U), repr(xi), repr(y))
