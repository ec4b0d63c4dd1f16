#!/usr/bin/env python3
"""Independent oracle for the frozen test fixtures.

Computes population constants, Sigma, bound constants, depth weighted means,
influence-kernel variances, exact bootstrap laws and reference RNG outputs
with mpmath / fractions / plain integers, then writes tests/oracle_fixtures.hpp.
Nothing here imports or calls the C++ library.

    python3 tests/oracles/fixtures.py
"""

from fractions import Fraction
from itertools import product
from pathlib import Path

from mpmath import mp, mpf, exp, log, sqrt, pi, erfc, atan, quad, findroot, inf, fabs, sign, npdf, ncdf

mp.dps = 40
OUT = Path(__file__).resolve().parent.parent / "oracle_fixtures.hpp"


# ---------------------------------------------------------------- models

def normal(mu=0, s=1):
    mu, s = mpf(mu), mpf(s)
    return dict(name="normal", cdf=lambda x: ncdf(x, mu, s), pdf=lambda x: npdf(x, mu, s), lo=-inf, hi=inf,
                median=mu)


def laplace(mu=0, b=1):
    mu, b = mpf(mu), mpf(b)
    cdf = lambda x: exp((x - mu) / b) / 2 if x < mu else 1 - exp(-(x - mu) / b) / 2
    return dict(name="laplace", cdf=cdf, pdf=lambda x: exp(-fabs(x - mu) / b) / (2 * b), lo=-inf, hi=inf,
                median=mu)


def cauchy(x0=0, g=1):
    x0, g = mpf(x0), mpf(g)
    return dict(name="cauchy", cdf=lambda x: mpf(1) / 2 + atan((x - x0) / g) / pi,
                pdf=lambda x: 1 / (pi * g * (1 + ((x - x0) / g) ** 2)), lo=-inf, hi=inf, median=x0)


def uniform(a=0, b=1):
    a, b = mpf(a), mpf(b)
    cdf = lambda x: mpf(0) if x <= a else (mpf(1) if x >= b else (x - a) / (b - a))
    pdf = lambda x: 1 / (b - a) if a <= x <= b else mpf(0)
    return dict(name="uniform", cdf=cdf, pdf=pdf, lo=a, hi=b, median=(a + b) / 2)


def exponential(lam=1):
    lam = mpf(lam)
    cdf = lambda x: mpf(0) if x <= 0 else 1 - exp(-lam * x)
    pdf = lambda x: mpf(0) if x < 0 else lam * exp(-lam * x)
    return dict(name="exponential", cdf=cdf, pdf=pdf, lo=mpf(0), hi=inf, median=log(2) / lam)


def contaminated(eps=mpf("0.1"), sc=3):
    eps, sc = mpf(eps), mpf(sc)
    cdf = lambda x: (1 - eps) * ncdf(x) + eps * ncdf(x, 0, sc)
    pdf = lambda x: (1 - eps) * npdf(x) + eps * npdf(x, 0, sc)
    return dict(name="contaminated_normal", cdf=cdf, pdf=pdf, lo=-inf, hi=inf, median=mpf(0))


def robust(m):
    F, f, v = m["cdf"], m["pdf"], m["median"]
    xi = findroot(lambda t: F(v + t) - F(v - t) - mpf(1) / 2, (mpf("0.01"), mpf(3)), solver="anderson")
    fv, flo, fhi = f(v), f(v - xi), f(v + xi)
    alpha = F(v - xi) + F(v + xi)
    beta = flo - fhi
    gamma = beta ** 2 + 4 * (1 - alpha) * beta * fv
    return dict(v=v, xi=xi, fv=fv, f_lo=flo, f_hi=fhi, g=flo + fhi, alpha=alpha, beta=beta, gamma=gamma,
                cdf_lo=F(v - xi))


def sigma(p):
    fv, g = p["fv"], p["g"]
    return (1 / (2 * fv ** 2), (1 - 4 * p["cdf_lo"] + p["beta"] / fv) / (2 * fv * g),
            (1 + p["gamma"] / fv ** 2) / (2 * g ** 2))


# ---------------------------------------------------------------- bounds

def median_bound(m, p, n, l, eps):
    F = m["cdf"]
    k = (n + l) // 2
    a0 = F(p["v"] + eps / 2) - mpf(k - 1) / n
    b0 = mpf(k) / n - F(p["v"] - eps / 2)
    d = min(a0, b0)
    return a0, b0, 2 * exp(-sqrt(2) * n * d * d)


def mad_bound(m, p, n, l, mm, eps):
    F = m["cdf"]
    v, xi, h = p["v"], p["xi"], eps / 2
    a0, b0, _ = median_bound(m, p, n, l, eps)
    km = (n + mm) // 2
    c0 = F(v + xi + h) - F(v - xi - h) - mpf(km - 1) / n
    d0 = mpf(km) / n - F(v + xi - h) + F(v - xi + h)
    d = min(a0, b0, c0, d0)
    return a0, b0, c0, d0, 6 * exp(-sqrt(2) * n * d * d)


# ---------------------------------------------------------------- depth

def power(pw):
    pw = mpf(pw)
    return (lambda r: r ** pw), (lambda r: pw * r ** (pw - 1))


def zuo(k, c):
    k, c = mpf(k), mpf(c)
    fl = exp(-k)
    w = lambda r: (exp(-k * (1 - r / c) ** 2) - fl) / (1 - fl) if r < c else mpf(1)
    dw = lambda r: exp(-k * (1 - r / c) ** 2) * 2 * k * (1 - r / c) / (c * (1 - fl)) if r < c else mpf(0)
    return w, dw


def breakpoints(m, p):
    v, xi = p["v"], p["xi"]
    pts = [m["lo"], v - xi, v, v + xi, m["hi"]]
    return [x for x in pts if m["lo"] <= x <= m["hi"]]


def pwm(m, p, weight):
    w, _ = weight
    v, xi, f = p["v"], p["xi"], m["pdf"]
    pd = lambda x: 1 / (1 + fabs(x - v) / xi)
    pts = breakpoints(m, p)
    num = quad(lambda x: x * w(pd(x)) * f(x), pts)
    den = quad(lambda x: w(pd(x)) * f(x), pts)
    return num / den, den


def ind_le(y, t):
    return mpf(1) if y < t else (mpf(0) if y > t else mpf(1) / 2)


def f_kernel(p, x, y):
    v, xi, g, fv = p["v"], p["xi"], p["g"], p["fv"]
    d = fabs(x - v)
    band = mpf(1) / 2 - (ind_le(y, v + xi) - ind_le(y, v - xi))
    med = mpf(1) / 2 - ind_le(y, v)
    t1 = d / (xi + d) ** 2 * band / g
    # beta = f_lo - f_hi is the median share of the MAD expansion
    t2 = (d * p["beta"] / (g * (xi + d) ** 2) + xi * sign(x - v) / (xi + d) ** 2) * med / fv
    return t1 + t2


def kernel_stats(m, p, weight):
    """Returns pwm0, D, E K, var K. The inner integral is evaluated directly at
    one representative x per indicator region (it is constant there)."""
    w, dw = weight
    v, xi, f = p["v"], p["xi"], m["pdf"]
    pd = lambda x: 1 / (1 + fabs(x - v) / xi)
    pts = breakpoints(m, p)
    pwm0, D = pwm(m, p, weight)

    def inner(x):
        return quad(lambda y: (y - pwm0) * dw(pd(y)) * f_kernel(p, y, x) * f(y), pts)

    regions = [(a, b) for a, b in zip(pts[:-1], pts[1:])]
    means = mpf(0)
    second = mpf(0)
    for a, b in regions:
        rep = (a + b) / 2 if a != -inf and b != inf else (b - 1 if a == -inf else a + 1)
        c = inner(rep)
        K = lambda x: (c + (x - pwm0) * w(pd(x))) / D
        means += quad(lambda x: K(x) * f(x), [a, b])
        second += quad(lambda x: K(x) ** 2 * f(x), [a, b])
    return pwm0, D, means, second - means ** 2


def kernel_at(m, p, weight, x):
    w, dw = weight
    v, xi, f = p["v"], p["xi"], m["pdf"]
    pd = lambda t: 1 / (1 + fabs(t - v) / xi)
    pts = breakpoints(m, p)
    pwm0, D = pwm(m, p, weight)
    inner = quad(lambda y: (y - pwm0) * dw(pd(y)) * f_kernel(p, y, x) * f(y), pts)
    return (inner + (x - pwm0) * w(pd(x))) / D


# ---------------------------------------------------------------- sample estimators (exact)

def med(xs):
    s = sorted(xs)
    n = len(s)
    return (s[(n + 1) // 2 - 1] + s[(n + 2) // 2 - 1]) / 2


def mad(xs):
    c = med(xs)
    return med([abs(x - c) for x in xs])


def pwm_sample(xs, pw):
    c, s = med(xs), mad(xs)
    if s == 0:
        return None
    ws = [(1 / (1 + abs(float(x) - float(c)) / float(s))) ** pw for x in xs]
    return sum(w * float(x) for w, x in zip(ws, xs)) / sum(ws)


def exact_law(parent, stat):
    """mean, variance, excluded count over all n^n resamples."""
    n = len(parent)
    vals = []
    excluded = 0
    for idx in product(range(n), repeat=n):
        r = stat([parent[i] for i in idx])
        if r is None:
            excluded += 1
        else:
            vals.append(r)
    if all(isinstance(x, Fraction) for x in vals):
        mean = sum(vals, Fraction(0)) / len(vals)
        var = sum(((x - mean) ** 2 for x in vals), Fraction(0)) / len(vals)
        return float(mean), float(var), excluded, len(vals)
    mean = mp.fsum(mpf(x) for x in vals) / len(vals)
    var = mp.fsum((mpf(x) - mean) ** 2 for x in vals) / len(vals)
    return float(mean), float(var), excluded, len(vals)


# ---------------------------------------------------------------- reference RNG

M64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def hash64(*words):
    h = 0x6A09E667F3BCC909
    for w in words:
        h = mix64(h ^ mix64((w + GAMMA) & M64))
    return h


def stream(key, count):
    return [mix64((key + i * GAMMA) & M64) for i in range(1, count + 1)]


# ---------------------------------------------------------------- emit

def cdbl(x):
    return repr(float(x))


def main():
    lines = ["#pragma once", "", "// Generated by tests/oracles/fixtures.py (mpmath, 40 digits). Do not edit.", "",
             "#include <cstdint>", "", "namespace oracle {", ""]

    def const(name, value):
        lines.append(f"inline constexpr double {name} = {cdbl(value)};")

    models = {
        "normal": normal(),
        "laplace": laplace(),
        "cauchy": cauchy(),
        "uniform": uniform(),
        "exponential": exponential(),
        "contaminated": contaminated(),
    }
    params = {k: robust(m) for k, m in models.items()}
    for k, p in params.items():
        lines.append(f"// {k}")
        for field in ("v", "xi", "fv", "f_lo", "f_hi", "g", "alpha", "beta", "gamma", "cdf_lo"):
            const(f"{k}_{field}", p[field])
        s11, s12, s22 = sigma(p)
        const(f"{k}_s11", s11)
        const(f"{k}_s12", s12)
        const(f"{k}_s22", s22)
        lines.append("")

    nm, npar = models["normal"], params["normal"]
    a0, b0, bd = median_bound(nm, npar, 1000, 1, mpf("0.2"))
    lines.append("// median bound, normal, n=1000, l=1, eps=0.2")
    const("bound_med_a0", a0)
    const("bound_med_b0", b0)
    const("bound_med", bd)
    for tag, mdl in (("normal", "normal"), ("laplace", "laplace")):
        a0, b0, c0, d0, bd = mad_bound(models[mdl], params[mdl], 2000, 1, 1, mpf("0.2"))
        lines.append(f"// MAD bound, {mdl}, n=2000, l=m=1, eps=0.2")
        const(f"bound_mad_{tag}_a0", a0)
        const(f"bound_mad_{tag}_b0", b0)
        const(f"bound_mad_{tag}_c0", c0)
        const(f"bound_mad_{tag}_d0", d0)
        const(f"bound_mad_{tag}", bd)
    lines.append("")

    lines.append("// influence f(x, y)")
    ep = params["exponential"]
    const("f_normal_hi_below", f_kernel(npar, npar["v"] + npar["xi"], mpf(-2)))
    const("f_normal_hi_above", f_kernel(npar, npar["v"] + npar["xi"], mpf(2)))
    const("f_normal_mid", f_kernel(npar, mpf("0.3"), mpf("0.1")))
    const("f_exp_a", f_kernel(ep, mpf("1.5"), mpf("0.2")))
    const("f_exp_b", f_kernel(ep, mpf("0.1"), mpf("1.0")))
    lines.append("")

    lines.append("// depth weighted means and kernels")
    cases = [
        ("normal_p2", "normal", power(2)),
        ("laplace_p2", "laplace", power(2)),
        ("exponential_p2", "exponential", power(2)),
        ("exponential_p1", "exponential", power(1)),
        ("exponential_zuo", "exponential", zuo(3, mpf("0.8"))),
        ("cauchy_p3", "cauchy", power(3)),
        ("contaminated_p2", "contaminated", power(2)),
    ]
    for tag, mdl, weight in cases:
        pwm0, D, mk, vk = kernel_stats(models[mdl], params[mdl], weight)
        const(f"pwm_{tag}", pwm0)
        const(f"pwm_den_{tag}", D)
        const(f"kmean_{tag}", mk)
        const(f"asymvar_{tag}", 2 * vk)
    const("K_normal_p2_at_0_3", kernel_at(nm, npar, power(2), mpf("0.3")))
    const("K_normal_p2_at_1_5", kernel_at(nm, npar, power(2), mpf("1.5")))
    const("K_exponential_p2_at_0_3", kernel_at(models["exponential"], ep, power(2), mpf("0.3")))
    const("K_exponential_p2_at_2", kernel_at(models["exponential"], ep, power(2), mpf("2")))
    lines.append("")

    lines.append("// sample depth weighted means")
    xs = [0.5, 1.0, 2.0, 4.0, 7.0]
    const("pwm_sample_p2", pwm_sample([Fraction(str(x)) for x in xs], 2))
    ys = [Fraction(x) for x in (0, 1, 2, 3, 10)]
    c = med(ys)
    devs = sorted(abs(y - c) for y in ys)
    k = 2
    n = len(ys)
    scale = (devs[(n + k) // 2 - 1] + devs[(n + k + 1) // 2 - 1]) / 2
    ws = [1 / (1 + abs(float(y) - float(c)) / float(scale)) for y in ys]
    const("modified_pwm_k2_p1", sum(w * float(y) for w, y in zip(ws, ys)) / sum(ws))
    const("modified_mad_k2", scale)
    lines.append("")

    lines.append("// exact bootstrap laws: mean, variance (divisor N), excluded count")
    parents = {"p123": [1, 2, 3], "p0_10": [0, 10], "p4": ["0.3", "1.1", "2.9", "4.0"]}
    for tag, par in parents.items():
        par = [Fraction(str(x)) for x in par]
        for sname, stat in (("med", med), ("mad", mad), ("pwm", lambda r: pwm_sample(r, 2))):
            mean, var, excl, kept = exact_law(par, stat)
            const(f"law_{tag}_{sname}_mean", mean)
            const(f"law_{tag}_{sname}_var", var)
            lines.append(f"inline constexpr int law_{tag}_{sname}_excluded = {excl};")
    count_med2 = sum(1 for idx in product(range(3), repeat=3) if med([Fraction(i + 1) for i in idx]) == 2)
    lines.append(f"inline constexpr int law_p123_med_eq2_count = {count_med2};  // out of 27")
    lines.append("")

    lines.append("// reference RNG outputs")
    lines.append(f"inline constexpr std::uint64_t mix64_of_1 = {mix64(1)}ULL;")
    lines.append(f"inline constexpr std::uint64_t hash64_1_2_3 = {hash64(1, 2, 3)}ULL;")
    s = stream(42, 4)
    lines.append("inline constexpr std::uint64_t stream42[4] = {" + ", ".join(f"{x}ULL" for x in s) + "};")
    key = hash64(7, 3)
    idx = [(x * 10) >> 64 for x in stream(key, 8)]
    lines.append("// resample indices for n=10, plan {master 7, replicate 3}")
    lines.append("inline constexpr int resample_7_3[8] = {" + ", ".join(str(i) for i in idx) + "};")
    u = [((x >> 11) + 0.5) * 2.0 ** -53 for x in stream(42, 2)]
    const("uniform42_first", u[0])
    const("uniform42_second", u[1])
    lines.append("")
    lines.append("}  // namespace oracle")
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
