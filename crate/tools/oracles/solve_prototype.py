#!/usr/bin/env python3
"""Prototype of the fiber-reduced ground-state solver on a uniform grid.

De-risks the production design before the main implementation:
  * dilation fiber Psi(t) = e^{2t} a/2 - e^{2 s t} b/(2s) - nu e^{g t} d
    (s = 2 * two_star, g = gamma_p + gamma_q) and its root structure per mass
    class, solved in sigma = e^t by bracketed bisection;
  * envelope gradient of the reduced functional (no resampling);
  * tangent-projected, H^1-preconditioned descent with mass renormalization
    and positivity projection;
  * Lagrange multipliers and the Pohozaev residual at the reported point.

Instances (both with the Newtonian-order kernel mu = N-2, where the spherical
mean of |x-y|^{-mu} is max(r,s)^{-mu}, so pairings cost O(M) via cumulative
sums):
  subcritical: N=3, mu=1, p=q=2, a=b=1, nu = nu0/4  -> expect level < 0,
               positive multipliers;
  critical:    N=4, mu=2, p=1.8, q=2.2, a=b=1, nu = 0.8 nu0' -> expect
               0 < level < bubble_level = 5.5850536063818546.
"""

import numpy as np

S_HL_31 = 4.639758073147546
S_HL_42 = 6.5478552041828741
BUBBLE_31 = 2.7238247480468173
BUBBLE_42 = 5.5850536063818546


def sphere_area(N):
    from math import gamma, pi

    return 2 * pi ** (N / 2) / gamma(N / 2)


class Setup:
    def __init__(self, N, mu, p, q, nu, a, b, R, M):
        assert abs(mu - (N - 2)) < 1e-14, "prototype kernel is Newtonian-order only"
        self.N, self.mu, self.p, self.q, self.nu, self.a, self.b = N, mu, p, q, nu, a, b
        self.ts = (2 * N - mu) / (N - 2)
        self.gp = (N * (p - 2) + mu) / 2
        self.gq = (N * (q - 2) + mu) / 2
        self.gs = self.gp + self.gq
        dr = R / M
        self.r = dr * np.arange(1, M + 1)
        area = sphere_area(N)
        self.w = area * self.r ** (N - 1) * dr
        self.w[-1] *= 0.5
        lo, hi = self.r[:-1], self.r[1:]
        self.c = area * (hi**N - lo**N) / N / dr**2
        # Dirichlet closure: ghost node at R+dr carries u=0
        self.c_end = area * ((R + dr) ** N - R**N) / N / dr**2

    def kinetic(self, u):
        d = np.diff(u)
        return float(np.dot(self.c, d * d)) + self.c_end * u[-1] ** 2

    def apply_stiff(self, u):
        g = np.zeros_like(u)
        d = self.c * np.diff(u)
        g[:-1] -= d
        g[1:] += d
        g[-1] += self.c_end * u[-1]
        return g

    def potential(self, f):
        """sum_j K(r_i,r_j) w_j f_j with K = max^{-(N-2)}, O(M)."""
        fw = self.w * f
        mu = self.mu
        inner = np.cumsum(fw)
        outer = np.cumsum((fw * self.r ** (-mu))[::-1])[::-1]
        phi = inner * self.r ** (-mu)
        phi[:-1] += outer[1:]
        return phi

    def pair(self, f, g):
        return float(np.dot(self.w * f, self.potential(g)))

    def breakdown(self, u, v):
        au, av = self.kinetic(u), self.kinetic(v)
        u2, v2 = u**self.ts, v**self.ts
        bu, bv = self.pair(u2, u2), self.pair(v2, v2)
        d = float(np.dot(self.w * u**self.p, self.potential(v**self.q)))
        return au + av, bu + bv, d

    # ---- fiber roots in sigma = e^t ----
    def phi(self, sig, al, be, de):
        g, s = self.gs, 2 * self.ts
        return sig ** (2 - g) * al - sig ** (s - g) * be - self.nu * g * de

    def roots(self, al, be, de):
        """Returns (t_roots, kinds); kind '+' means local min of Psi."""
        g, s = self.gs, 2 * self.ts
        if self.nu <= 0 or de == 0:
            # single root: e^{(s-2)t} = al/(be) adjusted... handle only nu>0 here
            tstar = np.log(al / be) / (s - 2)
            return [tstar], ["-"]
        if abs(g - 2) < 1e-12:
            top = al - 2 * self.nu * de
            if top <= 0:
                raise RuntimeError("degenerate critical fiber")
            return [np.log(top / be) / (s - 2)], ["-"]
        if g < 2:
            sig_star = ((2 - g) * al / ((s - g) * be)) ** (1.0 / (s - 2))
            if self.phi(sig_star, al, be, de) <= 0:
                raise RuntimeError("degenerate subcritical fiber (nu too large)")
            lo = sig_star
            while self.phi(lo, al, be, de) > 0:
                lo *= 0.5
            r1 = self.bisect(lo, sig_star, al, be, de)
            hi = sig_star
            while self.phi(hi, al, be, de) > 0:
                hi *= 2.0
            r2 = self.bisect(sig_star, hi, al, be, de, desc=True)
            return [np.log(r1), np.log(r2)], ["+", "-"]
        # supercritical: unique root, Psi' changes + -> -
        lo, hi = 1e-8, 1.0
        while self.phi(hi, al, be, de) > 0:
            hi *= 2.0
        while self.phi(lo, al, be, de) < 0:
            lo *= 0.5
            if lo < 1e-300:
                raise RuntimeError("no supercritical root")
        return [np.log(self.bisect(lo, hi, al, be, de, desc=True))], ["-"]

    def bisect(self, lo, hi, al, be, de, desc=False):
        flo = self.phi(lo, al, be, de)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = self.phi(mid, al, be, de)
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def reduced(self, u, v, kind):
        al, be, de = self.breakdown(u, v)
        ts_, ks = self.roots(al, be, de)
        t = ts_[ks.index(kind)]
        g, s = self.gs, 2 * self.ts
        J = np.exp(2 * t) * al / 2 - np.exp(s * t) * be / s - self.nu * np.exp(g * t) * de
        return J, t, (al, be, de)

    def grad(self, u, v, t):
        g, s = self.gs, 2 * self.ts
        e2, es, eg = np.exp(2 * t), np.exp(s * t), np.exp(g * t)
        phi_u = self.potential(u**self.ts)
        phi_v = self.potential(v**self.ts)
        cou_u = self.potential(v**self.q)
        cou_v = self.potential(u**self.p)
        gu = e2 * self.apply_stiff(u) / self.w - es * phi_u * u ** (self.ts - 1) \
            - self.nu * self.p * eg * cou_u * u ** (self.p - 1)
        gv = e2 * self.apply_stiff(v) / self.w - es * phi_v * v ** (self.ts - 1) \
            - self.nu * self.q * eg * cou_v * v ** (self.q - 1)
        return gu, gv

    def precond(self, rhs, e2=1.0):
        c, w = self.c * e2, self.w
        n = len(w)
        diag = w.copy()
        diag[:-1] += c
        diag[1:] += c
        diag[-1] += self.c_end * e2
        lower, upper = -c, -c
        cp, dp = np.zeros(n), np.zeros(n)
        cp[0], dp[0] = upper[0] / diag[0], rhs[0] / diag[0]
        for i in range(1, n):
            m = diag[i] - lower[i - 1] * cp[i - 1]
            cp[i] = upper[i] / m if i < n - 1 else 0.0
            dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / m
        x = np.zeros(n)
        x[-1] = dp[-1]
        for i in range(n - 2, -1, -1):
            x[i] = dp[i] - cp[i] * x[i + 1]
        return x

    def project_tangent(self, g, u):
        w = self.w
        return g - (np.dot(w * g, u) / np.dot(w * u, u)) * u

    def renorm(self, u, target):
        return np.abs(u) * (target / np.sqrt(np.dot(self.w, u * u)))

    def solve(self, kind, iters=600, verbose=False):
        r = self.r
        u = self.renorm(np.exp(-(r**2)), self.a)
        v = self.renorm(np.exp(-0.7 * r**2), self.b)
        J, t, _ = self.reduced(u, v, kind)
        hist = [J]
        step = 1.0
        for it in range(iters):
            e2 = np.exp(2 * t)
            gu, gv = self.grad(u, v, t)
            gu, gv = self.project_tangent(gu, u), self.project_tangent(gv, v)
            pu = self.project_tangent(self.precond(self.w * gu, e2), u)
            pv = self.project_tangent(self.precond(self.w * gv, e2), v)
            gnorm = np.sqrt(np.dot(self.w, pu * pu) + np.dot(self.w, pv * pv))
            if gnorm < 1e-12:
                break
            step = min(step * 2.0, 1024.0)
            ok = False
            for _ in range(60):
                tu = self.renorm(u - step * pu, self.a)
                tv = self.renorm(v - step * pv, self.b)
                try:
                    Jn, tn, _ = self.reduced(tu, tv, kind)
                except RuntimeError:
                    step *= 0.5
                    continue
                if Jn < J:
                    u, v, J, t = tu, tv, Jn, tn
                    ok = True
                    break
                step *= 0.5
            hist.append(J)
            if not ok:
                break
        # report at the dilated point
        al, be, de = self.breakdown(u, v)
        troots, kinds = self.roots(al, be, de)
        t = troots[kinds.index(kind)]
        e2, es, eg = np.exp(2 * t), np.exp(2 * self.ts * t), np.exp(self.gs * t)
        P = e2 * al - es * be - self.nu * self.gs * eg * de
        au, av = self.kinetic(u), self.kinetic(v)
        u2, v2 = u**self.ts, v**self.ts
        bu, bv = self.pair(u2, u2), self.pair(v2, v2)
        lam1 = (-e2 * au + es * bu + self.nu * self.p * eg * de) / self.a**2
        lam2 = (-e2 * av + es * bv + self.nu * self.q * eg * de) / self.b**2
        gu, gv = self.grad(u, v, t)
        pu = self.project_tangent(self.w * gu / self.w, u)
        pv = self.project_tangent(self.w * gv / self.w, v)
        scale = np.sqrt(np.dot(self.w, u * u) + np.dot(self.w, v * v))
        res = np.sqrt(np.dot(self.w, pu * pu) + np.dot(self.w, pv * pv)) / max(
            1.0, np.sqrt(e2 * al)
        )
        ident = self.a**2 * lam1 + self.b**2 * lam2 - (
            -P + self.nu * (self.p + self.q - self.gs) * eg * de
        )
        return dict(
            J=J, t=t, P=P, lam1=lam1, lam2=lam2, el_res=res, mult_ident=ident,
            iters=len(hist) - 1, monotone=all(x >= y - 1e-12 for x, y in zip(hist, hist[1:])),
        )


def main():
    print("--- subcritical: N=3 mu=1 p=q=2 a=b=1 ---")
    c32 = 0.6588258132
    c_npq = c32 * c32
    gs = 1.0
    nu0 = (
        (1.0 / gs)
        * S_HL_31 ** ((2 - gs) * 5.0 / 8.0)
        / c_npq
        * (8.0 * (2 - gs) ** ((2 - gs) / 8.0))
        / ((10.0 - gs) ** ((10.0 - gs) / 8.0) * 2.0 ** ((4.0 - gs) / 2))
    )
    print(f"nu0 = {nu0:.6f}")
    s = Setup(3, 1.0, 2.0, 2.0, nu0 / 4, 1.0, 1.0, 30.0, 2000)
    out = s.solve("+")
    print({k: (f"{x:.6e}" if isinstance(x, float) else x) for k, x in out.items()})
    print(f"gap to bubble level: J = {out['J']:.6f} vs c* = {BUBBLE_31:.6f}")

    print("--- critical: N=4 mu=2 p=1.8 q=2.2 a=b=1 ---")

    # quick scalar GN ascent for the N=4 instances
    def quick_c(N, mu, p, R=20.0, M=1500):
        st = Setup(N, mu, p, p, 0.0, 1.0, 1.0, R, M)
        gp = st.gp
        u = np.exp(-st.r**2)
        u /= np.sqrt(np.dot(st.w, u * u))
        val = 0.0
        for _ in range(300):
            m = float(np.dot(st.w, u * u))
            alpha = st.kinetic(u)
            pu = st.potential(u**p)
            d = float(np.dot(st.w * u**p, pu))
            val = d / (alpha**gp * m ** (p - gp))
            g = (2 * p / d) * pu * u ** (p - 1) - (2 * gp / alpha) * (
                st.apply_stiff(u) / st.w
            ) - (2 * (p - gp) / m) * u
            du = st.precond(st.w * g)
            tstep, ok = 1.0, False
            for _ in range(40):
                tu = np.abs(u + tstep * du)
                tu /= np.sqrt(np.dot(st.w, tu * tu))
                m2 = float(np.dot(st.w, tu * tu))
                a2 = st.kinetic(tu)
                p2 = st.potential(tu**p)
                d2 = float(np.dot(st.w * tu**p, p2))
                v2 = d2 / (a2**gp * m2 ** (p - gp))
                if v2 > val:
                    u, val, ok = tu, v2, True
                    break
                tstep *= 0.5
            if not ok:
                break
        return val

    c18 = quick_c(4, 2.0, 1.8)
    c22 = quick_c(4, 2.0, 2.2)
    print(f"C_(4,1.8) ~= {c18:.8f}   C_(4,2.2) ~= {c22:.8f}")
    c_npq = c18 * c22
    nu0p = 0.5 * 2.0 ** (-(1.8 + 2.2 - 2) / 2) / c_npq
    print(f"nu0' = {nu0p:.6f}")
    s = Setup(4, 2.0, 1.8, 2.2, 0.8 * nu0p, 1.0, 1.0, 20.0, 1500)
    out = s.solve("-")
    print({k: (f"{x:.6e}" if isinstance(x, float) else x) for k, x in out.items()})
    print(f"window: 0 < {out['J']:.6f} < c* = {BUBBLE_42:.6f} ?")


if __name__ == "__main__":
    main()
