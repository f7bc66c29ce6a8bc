#!/usr/bin/env python3
"""High-precision reference values for the closed-form constants.

Everything here is computed with 50-digit mpmath arithmetic straight from the
Gamma-function formulas, independently of the Rust implementation.  The printed
17-digit values are frozen into the Rust unit tests as oracle constants.

Quantities, for dimension N and kernel order mu:

  riesz_norm      A_{N,mu} = Gamma(mu/2) / (Gamma((N-mu)/2) * pi^{N/2} * 2^{N-mu})
  hls_constant    C(N,mu)  = pi^{mu/2} * Gamma((N-mu)/2)/Gamma(N-mu/2)
                             * (Gamma(N/2)/Gamma(N))^{-1+mu/N}
  sobolev         S        = pi*N*(N-2) * (Gamma(N/2)/Gamma(N))^{2/N}
  hls_sobolev     S_HL     = S * C^{-1/two_star}      (two_star = (2N-mu)/(N-2))
  bubble_level    c*       = (two_star-1)/(2*two_star) * S_HL^{two_star/(two_star-1)}

Cross-identities for the Aubin–Talenti bubble U (|grad U|_2^2 = S^{N/2}):

  alpha(U)      = S^{N/2}
  beta(U)       = C * S^{(2N-mu)/2}          (bare double integral, no A factor)
  alpha/beta^{1/two_star} = S_HL              (quotient check)
  alpha(U~)     = beta(U~) = S_HL^{two_star/(two_star-1)} where U~ = tau*U with
                  tau^{2(two_star-1)} = C^{-1} * S^{(mu-N)/2}  (amplitude making the
                  kinetic and convolution terms equal, i.e. the equation-normalized bubble)
"""

import mpmath as mp

mp.mp.dps = 50


def riesz_norm(N, mu):
    return mp.gamma(mu / 2) / (mp.gamma((N - mu) / 2) * mp.pi ** (mp.mpf(N) / 2) * 2 ** (N - mu))


def hls_constant(N, mu):
    N = mp.mpf(N)
    mu = mp.mpf(mu)
    return (
        mp.pi ** (mu / 2)
        * mp.gamma((N - mu) / 2)
        / mp.gamma(N - mu / 2)
        * (mp.gamma(N / 2) / mp.gamma(N)) ** (-1 + mu / N)
    )


def sobolev(N):
    N = mp.mpf(N)
    return mp.pi * N * (N - 2) * (mp.gamma(N / 2) / mp.gamma(N)) ** (2 / N)


def report(N, mu):
    N_, mu_ = mp.mpf(N), mp.mpf(mu)
    two_star = (2 * N_ - mu_) / (N_ - 2)
    A = riesz_norm(N, mu)
    C = hls_constant(N, mu)
    S = sobolev(N)
    S_hl = S * C ** (-1 / two_star)
    cstar = (two_star - 1) / (2 * two_star) * S_hl ** (two_star / (two_star - 1))

    alpha_U = S ** (N_ / 2)
    beta_U = C * S ** ((2 * N_ - mu_) / 2)
    quotient = alpha_U / beta_U ** (1 / two_star)

    # equation-normalized bubble: alpha(U~) = beta(U~) = S_HL^{2*/(2*-1)}
    tau_sq = (C ** (-1) * S ** ((mu_ - N_) / 2)) ** (1 / (two_star - 1))
    alpha_Ut = tau_sq * alpha_U
    beta_Ut = tau_sq**two_star * beta_U
    target = S_hl ** (two_star / (two_star - 1))

    print(f"--- N={N}, mu={mu} ---")
    print(f"two_star        = {mp.nstr(two_star, 17)}")
    print(f"riesz_norm A    = {mp.nstr(A, 17)}")
    print(f"hls_constant C  = {mp.nstr(C, 17)}")
    print(f"sobolev S       = {mp.nstr(S, 17)}")
    print(f"hls_sobolev     = {mp.nstr(S_hl, 17)}")
    print(f"bubble_level    = {mp.nstr(cstar, 17)}")
    print(f"alpha(U)        = {mp.nstr(alpha_U, 17)}")
    print(f"beta(U)         = {mp.nstr(beta_U, 17)}")
    print(f"alpha/beta^(1/2*)= {mp.nstr(quotient, 17)}   (must equal hls_sobolev)")
    print(f"alpha(U~)       = {mp.nstr(alpha_Ut, 17)}   vs S_HL^(2*/(2*-1)) = {mp.nstr(target, 17)}")
    assert mp.almosteq(quotient, S_hl, rel_eps=mp.mpf("1e-40"))
    assert mp.almosteq(alpha_Ut, target, rel_eps=mp.mpf("1e-40"))
    assert mp.almosteq(beta_Ut, target, rel_eps=mp.mpf("1e-40"))
    print()


def spot_checks():
    # closed forms quoted for the classical cases
    print("--- spot checks ---")
    print(f"A_{{3,1}}          = {mp.nstr(riesz_norm(3, 1), 17)}   (1/(4 pi) = {mp.nstr(1/(4*mp.pi), 17)})")
    print(f"A_{{4,2}}          = {mp.nstr(riesz_norm(4, 2), 17)}   (1/(4 pi^2) = {mp.nstr(1/(4*mp.pi**2), 17)})")
    print(f"C(4,2)           = {mp.nstr(hls_constant(4, 2), 17)}   ((pi/2) sqrt 6 = {mp.nstr(mp.pi/2*mp.sqrt(6), 17)})")
    print(f"S(3)             = {mp.nstr(sobolev(3), 17)}   (3 pi (sqrt(pi)/4)^(2/3) = {mp.nstr(3*mp.pi*(mp.sqrt(mp.pi)/4)**(mp.mpf(2)/3), 17)})")
    print(f"S(4)             = {mp.nstr(sobolev(4), 17)}   (8 pi / sqrt 6 = {mp.nstr(8*mp.pi/mp.sqrt(6), 17)})")
    # mu -> 0 limit of C(N,mu) is 1 (pairing degenerates to (int f)(int g) scale)
    for eps in ("1e-6", "1e-9"):
        print(f"C(3,{eps})       = {mp.nstr(hls_constant(3, mp.mpf(eps)), 17)}")
    # Newtonian normalizations A_{N,N-2} = 1/((N-2) |S^{N-1}|)
    for N in (3, 4, 5):
        sphere = 2 * mp.pi ** (mp.mpf(N) / 2) / mp.gamma(mp.mpf(N) / 2)
        print(
            f"A_{{{N},{N-2}}} vs 1/((N-2)|S^(N-1)|): {mp.nstr(riesz_norm(N, N - 2), 17)}"
            f" vs {mp.nstr(1/((N-2)*sphere), 17)}"
        )
    print()


def gn_exponents():
    # mass-class boundary p+q = 4 + (4-2 mu)/N and gamma_p for the acceptance instances
    print("--- exponent bookkeeping ---")
    for (N, mu, p) in [(3, 1, 2.0), (4, 2, 1.8), (4, 2, 2.2), (4, 2, 2.6), (4, 2, 1.9), (4, 2, 2.8), (3, 1, 2.5)]:
        N_, mu_, p_ = mp.mpf(N), mp.mpf(mu), mp.mpf(p)
        gp = (N_ * (p_ - 2) + mu_) / 2
        lo = (2 * N_ - mu_) / N_
        hi = (2 * N_ - mu_) / (N_ - 2)
        print(f"N={N} mu={mu} p={p}: gamma_p={mp.nstr(gp, 12)}  window=({mp.nstr(lo,8)},{mp.nstr(hi,8)})")
    for (N, mu) in [(3, 1), (4, 2)]:
        print(f"N={N} mu={mu}: mass-critical sum p+q = {mp.nstr(4 + (4 - 2*mp.mpf(mu))/N, 17)}")
    print()


if __name__ == "__main__":
    spot_checks()
    gn_exponents()
    for args in [(3, 1), (3, 2), (3, 1.5), (4, 2), (4, 1), (5, 3)]:
        report(*args)
