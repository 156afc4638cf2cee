"""Rank correlation with ties, and a selection report on a toy table."""

import os

import numpy as np
from scipy import stats

from sedproxy import batch_score, load_space
from sedproxy.bench import average_ranks, kendall, load_records, rank_report, spearman
from sedproxy.search import build

# Tied values share the mean of the ranks they span
print(average_ranks([10, 20, 20, 5]))  # [2.  3.5 3.5 1. ]

print(spearman((1, 2, 3), (1, 3, 2)), kendall((1, 2, 3), (1, 3, 2)))

# Heavily tied data, compared with scipy's versions
rng = np.random.default_rng(3)
xs, ys = rng.integers(0, 4, 30), rng.integers(0, 4, 30)
print("spearman", spearman(xs, ys), stats.spearmanr(xs, ys).statistic)
print("kendall ", kendall(xs, ys), stats.kendalltau(xs, ys).statistic)

# A constant side has no ranking at all
print("constant:", spearman([1, 1, 1], [1, 2, 3]))

# Toy accuracy table shipped with the tests
path = os.path.join(os.path.dirname(__file__), "..", "tests", "data", "tiny_bench.csv")
records = load_records(path)
space = load_space("tss")
scored = batch_score([build(space, r.encoding) for r in records], space)
scores = {r.arch_id: v for r, (_, v) in zip(records, scored)}
for r in records:
    print(f"{r.arch_id}  SED {scores[r.arch_id]:8.3f}  cifar10 {r.metrics['cifar10']:6.2f}")
report = rank_report(records, scores, "cifar10", k=2)
print(report)
