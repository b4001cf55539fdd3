#!/usr/bin/env python3
"""Independent high-precision reference values for the C++ test suite.

Everything here is computed with mpmath at 30+ digits by direct quadrature and
root finding on the defining integrals. The C++ tests freeze the printed
numbers; rerun this script to regenerate them.
"""
import mpmath as mp

mp.mp.dps = 30


def psi_j(z, J):
    return z**4 / 4 + (J - 1) / 2 * z**2


def psi_j_prime(z, J):
    return z**3 + (J - 1) * z


def mode(sigma, eps, J):
    # argmax of sigma z - psi_J(z)/eps, unique for J > 1
    return mp.findroot(lambda z: psi_j_prime(z, J) - eps * sigma, 0.0 if sigma == 0 else mp.sign(sigma))


def tilted(sigma, eps, J, f, W=None):
    W = W or (lambda z: psi_j(z, J) / eps)
    z0 = mode(sigma, eps, J) if W is None or True else 0
    shift = sigma * z0 - W(z0)
    w = mp.sqrt(eps)
    pts = [z0 - 40 * w - 4, z0 - 4 * w, z0 - w, z0, z0 + w, z0 + 4 * w, z0 + 40 * w + 4]
    num = mp.quad(lambda z: f(z) * mp.exp(sigma * z - W(z) - shift), pts)
    den = mp.quad(lambda z: mp.exp(sigma * z - W(z) - shift), pts)
    return num / den, mp.log(den) + shift


def cumulants(sigma, eps, J):
    mean, logz = tilted(sigma, eps, J, lambda z: z)
    var, _ = tilted(sigma, eps, J, lambda z: (z - mean) ** 2)
    mu3, _ = tilted(sigma, eps, J, lambda z: (z - mean) ** 3)
    return logz, mean, var, mu3


def legendre(m, eps, J):
    s = mp.findroot(lambda s: cumulants(s, eps, J)[1] - m, psi_j_prime(m, J) / eps)
    logz, mean, var, mu3 = cumulants(s, eps, J)
    return s, s * m - logz, 1 / var, -mu3 / var**3


def hbar(m, eps, J):
    s, phi, phi2, _ = legendre(m, eps, J)
    return phi - J * m * m / (2 * eps), phi2 - J / eps, phi2


def m_star(eps, J):
    g = lambda m: cumulants(J * m / eps, eps, J)[1] - m
    return mp.findroot(g, (mp.mpf('0.3'), mp.mpf(3)), solver='bisect' if False else 'anderson')


def main():
    J = 2
    print("# cgf variance J=2 eps=0.1 sigma=1")
    print(cumulants(mp.mpf(1), mp.mpf('0.1'), J)[2])

    print("# legendre J=2 eps=0.1 m=0.5: sigma, phi, phi2, phi3")
    print(*legendre(mp.mpf('0.5'), mp.mpf('0.1'), J))

    print("# clause 5 ratio for Psi=z^4/4")
    f = lambda z: mp.exp(-z**4 / 4)
    print(mp.quad(lambda z: z * z * f(z), [-mp.inf, 0, mp.inf]) / mp.quad(f, [-mp.inf, 0, mp.inf]))
    print("# clause 5 ratio for psi_2")
    f = lambda z: mp.exp(-psi_j(z, 2))
    print(mp.quad(lambda z: z * z * f(z), [-mp.inf, 0, mp.inf]) / mp.quad(f, [-mp.inf, 0, mp.inf]))

    print("# integral of exp(-z^4/4)")
    print(mp.quad(lambda z: mp.exp(-z**4 / 4), [-mp.inf, 0, mp.inf]))

    print("# m_star J=2 at eps in 0.2 0.1 0.05 0.025")
    for e in ['0.2', '0.1', '0.05', '0.025']:
        eps = mp.mpf(e)
        ms = m_star(eps, J)
        h_m, c_m, p_m = hbar(-ms, eps, J)
        h_0, c_0, p_0 = hbar(mp.mpf(0), eps, J)
        print(e, ms, "H(-m*)", h_m, "H''(-m*)", c_m, "phi''(-m*)", p_m, "H(0)", h_0, "H''(0)", c_0, "phi''(0)", p_0)

    print("# fiber integral N=2 J=2 eps=0.5 m=0.3: exp(-2 phi_2) and phi_2")
    eps = mp.mpf('0.5')
    m = mp.mpf('0.3')
    val = mp.sqrt(2) * mp.quad(lambda x: mp.exp(-(psi_j(x, J) + psi_j(2 * m - x, J)) / eps), [-mp.inf, m, mp.inf])
    print(val, -mp.log(val) / 2)

    print("# fiber E[x0^2] N=2 J=2 eps=0.5 m=0")
    m = mp.mpf(0)
    w = lambda x: mp.exp(-(psi_j(x, J) + psi_j(2 * m - x, J)) / eps)
    print(mp.quad(lambda x: x * x * w(x), [-mp.inf, 0, mp.inf]) / mp.quad(w, [-mp.inf, 0, mp.inf]))


if __name__ == "__main__":
    main()
