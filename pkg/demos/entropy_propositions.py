"""Numerical checks of the four local-entropy statements behind SED."""

import math

import numpy as np

from sedproxy import KernelSpec, PoolSpec, StrideSpec
from sedproxy.entropy import (
    IID_THRESHOLD,
    GaussianFieldSpec,
    gaussian_entropy,
    max_pool,
    verify_prop1,
    verify_prop2,
    verify_prop3,
    verify_prop4,
    verify_prop4_random,
    zero_entropy_window_exists,
)

# 1. A convolution over a constant patch only sees c * sum(K)
r1 = verify_prop1(KernelSpec(3, 3), trials=500, seed=0)
print("constant patch: max deviation", r1.statistic, "control rate", r1.details["negative_control_rate"])

# 2. Max pooling creates constant windows
rng = np.random.default_rng(0)
x = rng.standard_normal((32, 32))
pooled = max_pool(x, PoolSpec(3, 3))
print("one field, constant 3x3 window after pooling:", zero_entropy_window_exists(pooled, 3, 3))
r2 = verify_prop2(32, 32, PoolSpec(3, 3), StrideSpec(1, 1), trials=2000, seed=7)
print(f"frequency {r2.statistic:.4f}, bound {r2.bound}, threshold {r2.details['threshold']:.4f}")

# 3. Bigger windows hold more entropy only when per-entry variance is large enough
print("iid variance threshold 1/(2 pi e) =", IID_THRESHOLD)
for sigma2 in (1.0, IID_THRESHOLD, 0.01):
    r3 = verify_prop3("iid", [(3, 3, 1), (1, 1, 1)], sigma2=sigma2)
    p = r3.details["pairs"][0]
    print(f"sigma2={sigma2:.4f}: H(9 entries)={p['h_larger']:.3f}  H(1 entry)={p['h_smaller']:.3f}  {r3.details['regime']}")
r3 = verify_prop3("toeplitz", [(3, 3, 1), (2, 2, 1), (1, 1, 1)], rho=0.9)
print("correlated field (rho=0.9):", r3.details["regime"])

# 4. Adding an independent field (a skip connection) raises window entropy
eye = GaussianFieldSpec(None, np.eye(4), (2, 2, 1))
print("gap for two identity fields, smallest window:", verify_prop4(eye, eye).statistic, "bit")
print("singular field entropy:", gaussian_entropy(np.zeros((2, 2))))
r4 = verify_prop4_random(200, seed=1)
print("random pairs strict:", r4.details["strict_pairs"], "of 200; min gap", round(r4.statistic, 5), "bits")
print("half log2(2 pi e) =", 0.5 * math.log2(2 * math.pi * math.e))
