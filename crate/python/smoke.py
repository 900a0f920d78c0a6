"""Smoke test for the trapwalk_py extension.

Build and run:
    cargo build --release -p trapwalk-py --features extension-module
    cp target/release/libtrapwalk_py.so python/trapwalk_py.so
    python3 python/smoke.py
"""

import math

import trapwalk_py as tw

frac = tw.FractalConfig(2.0)
assert frac.b(2) == 12
assert frac.neighbors((0, 3)) == [(1, 3)]
assert sorted(frac.neighbors((3, 6))) == [(2, 6), (3, 5), (3, 7), (4, 6)]
assert frac.locate((9, 7)) == ("trap", 2)
assert [a for _, a in frac.path_to_infinity((0, 3), 3)] == [3, 11, 107]
assert frac.census(1) == (1, 6)
assert frac.census(1, 2) == (2, 3)

warm = tw.WarmupConfig(1.0)
lo, hi = warm.escape_probability((warm.anchor_x(2), 0), 2.0)
assert lo <= 0.25 <= hi and hi - lo < 1e-6

assert math.isclose(tw.hit_core_probability(1, 2.0), 0.25)
assert math.isclose(tw.cone_return_time_bound(2.0), 15.0)

a = tw.WarmupConfig.naked().walk(2.0, 100_000, seed=7)
b = tw.WarmupConfig.naked().walk(2.0, 100_000, seed=7)
assert a.position == b.position and a.time == 100_000
assert abs(a.speed - 1 / 3) < 0.02, a.speed

w = frac.walk(4.0, 20_000, seed=1, checkpoints=[10_000])
assert w.checkpoints[0][0] == 10_000

try:
    tw.FractalConfig(0.5)
except ValueError:
    pass
else:
    raise AssertionError("gamma <= 1 accepted")

print("trapwalk_py smoke test passed")
