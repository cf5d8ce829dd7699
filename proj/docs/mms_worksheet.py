#!/usr/bin/env python3
"""Derivation worksheet for the manufactured smooth-case source terms.

Run this script to regenerate the C++ expressions hard-coded in
src/verification.cpp (SmoothCase sources). The model used by the smooth
case is:

    S(p)      = 0.8 * (1/2 + atan(p)/pi)   (polynomial tails; never
                                            underflows at deep suction)
    a(p)      = 0.2 + S(p)               (k = 1, mu = 1, k_R(s) = 0.2 + s)
    phi       = 0.4
    rho       = 1.0
    D_w       = 1.5
    lambda    = 1.0
    f         = f0(x,y) = 0.05 sin(pi x) sin(pi y)
    alpha1    = 0.5, alpha2 = 0.8

Exact fields on the unit square (homogeneous Dirichlet on the whole
boundary):

    p*(x,y,t)     = -(0.1 + 0.04 sin t)  sin(pi x) sin(pi y)
    c*(x,y,t)     =  (0.5 + 0.2 cos t)   sin(pi x) sin(pi y)
    theta*(x,y,t) =  (0.4 + 0.2 sin 1.3t) sin(pi x) sin(pi y)
    r*(x,y,t)     =  t f0(x,y)

Sources are what must be added to the right-hand side of each balance
equation so that the exact fields solve the system.
"""

import sympy as sp

x, y, t = sp.symbols("x y t", real=True)

S = lambda z: sp.Rational(4, 5) * (sp.Rational(1, 2) + sp.atan(z) / sp.pi)
a = lambda z: sp.Rational(1, 5) + S(z)

phi = sp.Rational(2, 5)
rho = 1
Dw = sp.Rational(3, 2)
lam = 1
alpha1 = sp.Rational(1, 2)
alpha2 = sp.Rational(4, 5)

sx = sp.sin(sp.pi * x) * sp.sin(sp.pi * y)
p = -(sp.Rational(1, 10) + sp.Rational(1, 25) * sp.sin(t)) * sx
c = (sp.Rational(1, 2) + sp.Rational(1, 5) * sp.cos(t)) * sx
th = (sp.Rational(2, 5) + sp.Rational(1, 5) * sp.sin(sp.Rational(13, 10) * t)) * sx
f0 = sp.Rational(1, 20) * sx


def div(vx, vy):
    return sp.diff(vx, x) + sp.diff(vy, y)


def grad(u):
    return sp.diff(u, x), sp.diff(u, y)


px, py = grad(p)
cx, cy = grad(c)
thx, thy = grad(th)

g_p = sp.diff(phi * S(p), t) - div(a(p) * px, a(p) * py) - alpha1 * f0
g_c = (
    sp.diff(phi * S(p) * c, t)
    - div(phi * S(p) * Dw * cx, phi * S(p) * Dw * cy)
    - div(c * a(p) * px, c * a(p) * py)
)
g_th = (
    sp.diff((phi * S(p) + rho) * th, t)
    - div(lam * thx, lam * thy)
    - div(th * a(p) * px, th * a(p) * py)
    - alpha2 * f0
)

for name, expr in [("g_p", g_p), ("g_c", g_c), ("g_theta", g_th)]:
    code = sp.ccode(sp.simplify(expr))
    print(f"// {name}")
    print(f"double {name}(double x, double y, double t) {{")
    print(f"  return {code};")
    print("}")
    print()

# Spot values used to cross-check the transcription in C++ tests.
pts = [(0.3, 0.7, 0.25), (0.5, 0.5, 1.0), (0.8, 0.2, 2.5)]
for name, expr in [("g_p", g_p), ("g_c", g_c), ("g_theta", g_th)]:
    for (xv, yv, tv) in pts:
        v = expr.subs({x: xv, y: yv, t: tv}).evalf(30)
        print(f"// {name}({xv},{yv},{tv}) = {v}")
