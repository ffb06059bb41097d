"""High-precision reference values frozen into the Rust tests.

Run with `python3 oracles.py`; requires mpmath.
"""
from mpmath import mp, mpf, sqrt, exp, log, pi, e, lambertw, sinh, atan, loggamma, asin, findroot

mp.dps = 40


def show(name, value):
    print(f"{name:40s} {mp.nstr(value, 20)}")


# saddle constants
w = lambertw(-1 / (2 * sqrt(e)), -1).real
rho_star = -1 - 2 * w
c0 = rho_star / 2 + log(pi / rho_star) / 2 + 2 - 5 * log(2)
show("W_-1(-1/(2 sqrt e))", w)
show("rho_star", rho_star)
show("C0", c0)

# expected geometry
show("chord_sq(rho=2, ell=1)", 2 * (1 - exp(-1)))
show("cos(rho=2)", exp(-1))
show("tangent_cos(rho=4)", -3 * exp(-2))
show("chordal_cone(0.05, 8, 40)", mpf("0.05") * sqrt(4 / (1 - exp(-mpf("0.05") ** 2 * 1600 / 2))))
g = mpf("0.1")
x = g * g / 4
show("tangential exact(0.1, 1)", max(sqrt(1 - exp(-x)), sqrt(1 - (1 - x) ** 2 * exp(-x))))
show("tangential approx(0.1, 1)", g / 2 * sqrt(3))
g = mpf("0.01")
r = g * g
show("psi approx(0.01, 1)", r / (4 * sqrt(6)))
q = r / 4
show("psi exact(0.01, 1)", atan(sqrt((sinh(q) - q) / q)))

# guarantee functions
show("g_C(0.2, 0.01, 1000, 100)", mpf("0.2") - sqrt(10) * mpf("0.01"))


def g_t_exact(eps, s, n, m):
    rr = mpf(n) / m
    gp = sqrt((1 + eps) ** 2 - 2 * s * sqrt(rr * (rr - (1 + eps) ** 2)) - rr * s * s) - 1
    gm = 1 - sqrt((1 - eps) ** 2 + 2 * s * sqrt(rr * (rr - (1 - eps) ** 2)) - rr * s * s)
    return gp, gm


for (s, n, m) in [("1e-5", 100000, 100), ("0.001", 1000, 100)]:
    gp, gm = g_t_exact(mpf("0.2"), mpf(s), n, m)
    show(f"g_T+ (0.2, {s}, {n}, {m})", gp)
    show(f"g_T- (0.2, {s}, {n}, {m})", gm)

# JL bounds
eps = mpf("0.2")
show("jl_point full (0.2, 100)", 2 * exp(-50 * (eps ** 2 / 2 - eps ** 3 / 3)))
show("jl_point small (0.2, 100)", 2 * exp(-100 * eps ** 2 / 4))
ln_sub = -(mpf(2000) / 16) * (eps ** 2 - eps ** 3 / 3) + 5 * log(12 / eps) + log(2)
show("jl_subspace ln (0.2, 2000, 5, c=1)", ln_sub)
show("jl_subspace (0.2, 2000, 5, c=1)", exp(ln_sub))

# long/short chord bounds at (M=1e4, eps=0.2, K=4, N=1000, lnV=4)
M, K, N, lnV = mpf(10000), 4, mpf(1000), mpf(4)
ln_long = -M * eps ** 2 / 4 + lnV + K * log(N * M * eps ** 2 / K) + c0 - loggamma(mpf(K) / 2)
ln_short = -M * eps ** 2 / 16 + lnV + K * log(9 * sqrt(3) * e * N / (eps * sqrt(K)))
show("ln delta_long", ln_long)
show("ln delta_short", ln_short)


def m_bar(eps, delta, K, N, lnV):
    return 16 * (lnV + log(1 / delta) + K * log(9 * sqrt(3) * e * N / (eps * sqrt(K)))) / eps ** 2


lnV1 = log(10 * sqrt(2) / 3)
show("lnV = ln(10 sqrt2/3)", lnV1)
show("m_bar(0.2, 0.05, 1, 1000, lnV1)", m_bar(eps, mpf("0.05"), 1, 1000, lnV1))
show("m_bar(0.2, 0.05, 1, 1000, 0)", m_bar(eps, mpf("0.05"), 1, 1000, 0))


def bw(eps, delta, K, N, lnV):
    return (K / eps ** 2) * (1352 * lnV / K + 676 * log(1 / delta) / K
                             + 676 * log(mpf(3100) ** 4 * mpf(N) ** 3 * K / (4 * pi * e * eps ** 6)))


def nv(eps, delta, K, lnV):
    return (K / eps ** 2) * (64 * lnV / K + 64 * log(1 / delta) / K
                             + 32 * log(mpf(384) ** 5 * 169 * K / (pi * e * eps ** 6)))


show("bw(0.2, 0.05, 1, 1000, lnV1)", bw(eps, mpf("0.05"), 1, 1000, lnV1))
show("nv(0.2, 0.05, 1, lnV1)", nv(eps, mpf("0.05"), 1, lnV1))

# optimal cells at (eps=0.2, M=1e4, K=4, N=1000)
root_c = sqrt(eps ** 2 - 16 * K / M)
show("gamma*_C", sqrt(M * rho_star * exp(-rho_star / 2) / (2 * K * N)) * (eps - root_c))
show("sin theta*_C", sqrt(M / N) * (eps - root_c) / 2)
root_t = sqrt(M * (M * eps ** 2 - 32 * K))
show("gamma*_T", (M * eps - root_t) / (N * sqrt(3 * K)))
show("sin theta*_T", (M * eps - root_t) / (2 * N))

# prior theory inputs
show("R_lower", 1 / sqrt(2 * pi * e))

# crossover: closed form and numeric root of m_bar - nv in N
for K in [1, 2, 3, 4, 5, 8]:
    lnVk = K * lnV1
    delta = mpf("0.05")
    closed = log(mpf("3.5e27")) + mpf(1.5) * log(K) - 11 * log(eps) + (3 / mpf(K)) * (lnVk - log(delta))
    f = lambda lnN: m_bar(eps, delta, K, exp(lnN), lnVk) - nv(eps, delta, K, lnVk)
    root = findroot(f, mpf(90))
    show(f"log10 crossover closed K={K}", closed / log(10))
    show(f"log10 crossover numeric K={K}", root / log(10))
