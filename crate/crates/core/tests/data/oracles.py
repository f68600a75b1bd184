"""Reference values for tests/oracles.rs, by closed forms and mpmath quadrature.

Run with `python3 oracles.py`; the printed numbers are pasted into the Rust file.
"""
import mpmath as mp
import sympy as sp

mp.mp.dps = 30
x = sp.symbols("x", real=True)


def quad(expr, lo=-40, hi=40):
    f = sp.lambdify(x, expr, "mpmath")
    return mp.quad(f, [lo, -5, 0, 5, hi])


def skewed_ehrenfest(c, beta):
    # R = exp(-x^2/4) (1 + tanh(x)/2), S = beta x^3, normalized.
    r = sp.exp(-x**2 / 4) * (1 + sp.tanh(x) / 2)
    norm = quad(r**2)
    rho = r**2 / sp.Float(str(norm), 30)
    s = beta * x**3
    ds = sp.diff(s, x, 2)
    inner = sp.diff(ds * rho, x, 2)
    i1 = quad(2 * c * x * inner)
    i2 = quad(c * (2 * sp.diff(s, x) * inner - rho * sp.diff(ds**2, x)))
    return i1, i2


def gaussian_energy(sigma, beta, c):
    # psi ~ exp(-x^2/(4 sigma^2) + i beta x^2).
    r = sp.exp(-x**2 / (4 * sigma**2))
    norm = quad(r**2)
    r = r / sp.sqrt(sp.Float(str(norm), 30))
    s = beta * x**2
    kin_r = quad(sp.diff(r, x) ** 2 / 2)
    kin_s = quad(r**2 * sp.diff(s, x) ** 2 / 2)
    nl = quad(c * r**2 * sp.diff(s, x, 2) ** 2)
    return kin_r, kin_s, nl


def entangled_defect(a, sigma):
    # (g(x1-a) g(x2-a) + g(x1+a) g(x2+a)) / sqrt 2 with g normalized, density width sigma.
    x1, x2 = sp.symbols("x1 x2", real=True)
    g = lambda u: (2 * sp.pi * sigma**2) ** sp.Rational(-1, 4) * sp.exp(-(u**2) / (4 * sigma**2))
    psi = (g(x1 - a) * g(x2 - a) + g(x1 + a) * g(x2 + a)) / sp.sqrt(2)
    rho = psi**2
    n = mp.quad(sp.lambdify((x1, x2), rho, "mpmath"), [-15, 0, 15], [-15, 0, 15])
    m1 = lambda u: mp.quad(lambda v: sp.lambdify((x1, x2), rho, "mpmath")(u, v), [-15, 0, 15]) / n
    f = sp.lambdify((x1, x2), rho, "mpmath")
    mp.mp.dps = 15
    pts = [-15 + 30 * i / 240 for i in range(241)]
    marg = [m1(p) for p in pts]
    h = pts[1] - pts[0]
    total = 0
    for i, p in enumerate(pts):
        for j, q in enumerate(pts):
            total += abs(f(p, q) / n - marg[i] * marg[j])
    mp.mp.dps = 30
    return total * h * h


if __name__ == "__main__":
    i1, i2 = skewed_ehrenfest(sp.Rational(1, 20), sp.Rational(1, 10))
    print("skewed I1", mp.nstr(i1, 20), "I2", mp.nstr(i2, 20))
    print("gaussian energy parts", [mp.nstr(v, 20) for v in gaussian_energy(sp.Rational(7, 10), sp.Rational(3, 10), sp.Rational(1, 10))])
    print("entangled defect", mp.nstr(entangled_defect(3, sp.Rational(1, 2)), 12))
