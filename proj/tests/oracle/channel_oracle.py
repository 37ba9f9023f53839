"""High-precision reference values for the channel tests.

Everything is evaluated with mpmath at 60 digits and printed with 17
significant digits; the C++ tests freeze these numbers. Re-run with
`python3 tests/oracle/channel_oracle.py` after changing a constant.
"""
import mpmath as mp

mp.mp.dps = 60

ALPHA, BETA = mp.mpf("9.61"), mp.mpf("0.16")
ETA_LOS, ETA_NLOS = mp.mpf(1), mp.mpf(20)
FC, C = mp.mpf(2e9), mp.mpf(299792458)
PT, PN = mp.mpf(46), mp.mpf(-99)
W, LB = mp.mpf(20e6), mp.mpf(576)
ALT = mp.mpf("157704.08751095791")
EPS0 = mp.mpf("1e-7")


def pl(d, h):
    theta = 180 / mp.pi * mp.atan2(h, d)
    los = (ETA_LOS - ETA_NLOS) / (1 + ALPHA * mp.exp(-BETA * (theta - ALPHA)))
    return los + 10 * mp.log10(h * h + d * d) + 20 * mp.log10(4 * mp.pi * FC / C) + ETA_NLOS


def snr(d, h):
    return mp.power(10, (PT - PN) / 10) * mp.power(10, -pl(d, h) / 10)


def q(x):
    return mp.erfc(x / mp.sqrt(2)) / 2


def eps(s, t):
    v = 1 - (1 + s) ** -2
    return q(mp.sqrt(W * t / v) * (mp.log(1 + s) - LB * mp.log(2) / (W * t)))


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def q_inv(p):
    return mp.findroot(lambda x: q(x) - p, 5)


def req_snr(t):
    return bisect(lambda s: mp.log(eps(s, t)) - mp.log(EPS0), mp.mpf("0.01"), mp.mpf(1000))


def rng(t, h):
    thr = (PT - PN) - 10 * mp.log10(req_snr(t))
    return bisect(lambda d: pl(d, h) - thr, mp.mpf(0), mp.mpf(1e5))


def lat(s):
    return bisect(lambda t: mp.log(eps(s, t)) - mp.log(EPS0), mp.mpf("1e-6"), mp.mpf("1e-3"))


def show(name, v):
    print(f"{name} = {mp.nstr(v, 17, min_fixed=-1, max_fixed=-1)}")


T_MAX = LB / W
show("t_max", T_MAX)
show("q_inv_1e-7", q_inv(EPS0))
show("pl_0_100", pl(0, 100))
show("pl_500_200", pl(500, 200))
show("pl_938_alt", pl(938, ALT))
show("snr_938_alt", snr(938, ALT))
show("eps_938_tmax", eps(snr(938, ALT), T_MAX))
show("required_snr_tmax", req_snr(T_MAX))
show("range_tmax_alt", rng(T_MAX, ALT))
show("latency_938_alt", lat(snr(938, ALT)))
show("range_tmax_h10", rng(T_MAX, mp.mpf(10)))

# Dense altitude grid over [10, 2000] m (10 m steps): the altitude whose
# range is closest to 938 m, and the smallest range seen.
thr = (PT - PN) - 10 * mp.log10(req_snr(T_MAX))
grid = []
for h in range(10, 2001, 10):
    hh = mp.mpf(h)
    grid.append((h, bisect(lambda d: pl(d, hh) - thr, mp.mpf(0), mp.mpf(1e5), iters=80)))
best_h, best_d = min(grid, key=lambda g: abs(g[1] - 938))
show("grid_best_altitude", best_h)
show("grid_best_range", best_d)
show("grid_min_range", min(d for _, d in grid))
