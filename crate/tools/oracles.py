"""Independent high-precision reference values for the test suites.

Uses mpmath quadrature (no closed-form logarithms, no Nyström code) to
evaluate the finite-rank Fredholm denominator det M(z), with
M_jk = δ_jk I + g_j C_j J_jk(z), J_jk(z) = ∫_{-1}^{1} v_j v_k / (ν − z) dν,
and its continuation to the sheet reached from the upper half-plane,
J_jk → J_jk + 2πi v_j(z) v_k(z) for z in the lower half-plane.

Run: python3 tools/oracles.py
"""

import mpmath as mp

mp.mp.dps = 40


def bump(poly):
    return lambda x: (1 - x * x) * sum(c * x**k for k, c in enumerate(poly))


def det_m(z, terms, dim, continued):
    r = len(terms)
    forms = [bump(t[1]) for t in terms]
    m = mp.eye(r * dim)
    for j in range(r):
        g, _, c = terms[j]
        for k in range(r):
            jjk = mp.quad(lambda x: forms[j](x) * forms[k](x) / (x - z), [-1, 0, 1])
            if continued:
                jjk += 2j * mp.pi * forms[j](z) * forms[k](z)
            for p in range(dim):
                for q in range(dim):
                    m[j * dim + p, k * dim + q] += g * c[p][q] * jjk
    return mp.det(m)


def reference(g):
    return [(g, [1], [[1]])]


COUPLED = [
    (0.6, [1], [[1, 0.3], [0.3, 0.5]]),
    (0.9, [0, 1], [[0.2, 0.4j], [-0.4j, 1]]),
    (-0.4, [1, 0, 1], [[1, 0], [0, -0.5]]),
]


def resonance(terms, dim, guess):
    return mp.findroot(lambda z: det_m(z, terms, dim, True), mp.mpc(guess))


def bound_state(g, guess):
    return mp.findroot(lambda x: mp.re(det_m(mp.mpf(x), reference(g), 1, False)), guess)


if __name__ == "__main__":
    mp.nprint(bound_state(-1.0, -1.2), 20)
    mp.nprint(bound_state(1.0, 1.2), 20)
    for g, guess in [(0.5, 0.85 - 0.07j), (0.3, 0.75 - 0.22j), (0.2, 0.70 - 0.35j)]:
        mp.nprint(resonance(reference(g), 1, guess), 20)
    for guess in [0.093 - 0.444j, 0.505 - 0.286j, 0.976 - 0.0034j, -0.926 - 0.204j]:
        mp.nprint(resonance(COUPLED, 2, guess), 20)
    # transition kernel T(0, 0, i) for g = 1
    z = mp.mpc(0, 1)
    mp.nprint(1 / det_m(z, reference(1.0), 1, False), 20)
