"""Smoke check of the computable constants: d_c, alpha, theta values and a Hilbert run."""

import math

from utils.iteration import mann_iterate
from utils.moduli import compute_dc, verify_alpha
from utils.operators import scaled_negation
from utils.rates import RateOfDivergence, certify, constant_schedule, partial_sum, rate_function
from utils.spaces import hilbert_eta, hilbert_space

print("🔍 Starting constant verification...")

# 1. d_c chain
assert compute_dc(0.5).dc == 64.0
assert compute_dc(1.0).dc == 128.0
print(f"✅ d_c(0.5) = {compute_dc(0.5).dc:g}, d_c(1) = {compute_dc(1.0).dc:g}")

# 2. alpha
alpha_max = verify_alpha(1e-5)
assert abs(alpha_max - (math.sqrt(2.0) - 2.0)) <= 1e-6
print(f"✅ alpha grid max = {alpha_max:.10f}")

# 3. theta for t_n = 1/6, k = 1/3, d = 1 (terms 1/12)
schedule = constant_schedule("1/6", k="1/3", d=1)
theta = RateOfDivergence.exact(schedule)
for N, expected in [(2, 23), (18, 215), (32, 383), (324, 3887)]:
    n = theta(N)
    assert n == expected, (N, n)
    assert partial_sum(schedule, n) >= N > partial_sum(schedule, n - 1)
print("✅ theta values exact")

# 4. A Hilbert run: T = -2 id from x0 = 1
space = hilbert_space(1)
T = scaled_negation(2.0, space)
trajectory = mann_iterate(T, [1.0], schedule, 2000)
for variant in ("h3", "h4"):
    rate = rate_function(variant, 1, schedule.k, schedule.d, hilbert_eta, theta)
    certificates = certify(trajectory, rate, [0.5, 0.1, 0.01], variant=variant)
    assert all(c.passed for c in certificates), certificates
    print(f"ℹ️ {variant}: " + ", ".join(f"h({c.epsilon:g}) = {c.predicted_index}" for c in certificates))
print("✅ Certificates OK")

print("\n🎉 Constant verification PASSED")
