"""High-precision reference computations used to freeze expected values.

Everything here is written against mpmath and shares no code with ckem.
"""

import mpmath as mp

mp.mp.dps = 30


def phi_integral(d, r, lam, nu, a, b, mu, gam, x_ref, x):
    """A(x) * int_{x_ref}^x g for the generic momentum profile."""
    n = d + r

    def f(u):
        return a * u + b

    def L(u):
        return a * lam * u + 2 * a * nu - b * lam

    def p(u):
        return (nu + lam * u) ** d * u ** (r - 1)

    def g(u):
        return p(u) * (mu * (nu + lam * u) - gam * f(u) ** 2) / (f(u) ** (2 * n) * L(u) ** 2)

    return f(x) ** (2 * n - 1) * L(x) / p(x) * mp.quad(g, [x_ref, x])


def gamma_case_formula(case, d, r, lam, nu, a, b, mu, x0=None, x1=None):
    if case == "I":
        return lam + mu - 2 * a
    if case == "II1":
        return mu * (nu + lam * x0) / (b + a * x0) ** 2
    if case == "II2":
        return mu * (nu + lam * x1) / (b + a * x1) ** 2
    if case == "III1":
        return (a * lam * x1 + 2 * a * nu - b * lam) / (a * x1 + b)
    if case == "III2":
        return mu * (nu + lam * x1) / (b + a * x1) ** 2 + (a * lam * x1 + 2 * a * nu - b * lam) / (a * x1 + b)
    return r * lam


def closed_16(d, mu, x):
    y = 1 - mp.mpf(x)
    return (mu + 1) / (d + 1) * (1 - x - y ** (d + 2)) - mu / (d + 2) * (1 - y ** (d + 2))


def closed_110(d, mu, x0, x):
    s = mp.mpf(x) / x0
    return mu * ((s ** (d + 2) - 1) / (d + 2) - s * (s ** (d + 1) - 1) / (d + 1))


def closed_113(d, a, mu, x):
    n = d + 1
    s = -mp.mpf(mu) / (n + 1) * x ** 2
    for k in range(3, n + 2):
        pr = mp.mpf(1)
        for j in range(1, k - 1):
            pr *= mp.mpf(n - j) / (n + j)
        s += -mp.mpf(mu) / a ** 2 * (mp.mpf(k - 1) / (n + k - 1)) * pr * (a * x) ** k
    return s


def closed_115(d, x1, x):
    return x * (1 - (mp.mpf(x) / x1) ** (d + 1)) / (d + 1)


def closed_119(d, r, b, x):
    n = d + r
    x1 = -mp.mpf(r + 1) * b / (r - 1)
    g = lambda u: u ** (n - 1) / ((u + b) ** (2 * n - 2) * (u - b) ** 2)  # noqa: E731
    return -r * (x + b) ** (2 * n - 1) * (x - b) / mp.mpf(x) ** (n - 1) * mp.quad(g, [x1, x])


def length(phi, a, b, lo, hi):
    return mp.quad(lambda x: 1 / ((a * x + b) * mp.sqrt(phi(x))), [lo, hi])


def t_integral(phi, lo, hi):
    return mp.quad(lambda x: 1 / phi(x), [lo, hi])


def complex_hessian(Phi, z, w):
    """d^2 Phi / dZ_i dZbar_j for Phi(x1, y1, x2, y2) with Z = (z, w), d = r = 1."""
    v = [mp.re(z), mp.im(z), mp.re(w), mp.im(w)]

    def second(i, j):
        orders = [0, 0, 0, 0]
        orders[i] += 1
        orders[j] += 1
        return mp.diff(lambda *u: Phi(*u), v, tuple(orders))

    H = [[None, None], [None, None]]
    for k in range(2):
        for l in range(2):
            xx = second(2 * k, 2 * l)
            yy = second(2 * k + 1, 2 * l + 1)
            xy = second(2 * k, 2 * l + 1)
            yx = second(2 * k + 1, 2 * l)
            H[k][l] = (xx + yy) / 4 + 1j * (xy - yx) / 4
    return H
