"""Score the whole NATS-Bench topology space and look at what SED prefers."""

import time
from collections import Counter

import numpy as np

from sedproxy import batch_score, load_space, sed
from sedproxy.search import build, enumerate_encodings

space = load_space("tss")  # bundled: 5 ops, 6 edges, 3 stages x 5 cells
print(space.name, "blocks per network:", space.n_blocks)

# One cell, scored block by block
cell = "|nor_conv_3x3~0|+|nor_conv_3x3~0|skip_connect~1|+|avg_pool_3x3~0|nor_conv_1x1~1|none~2|"
result = sed(build(space, cell))
first = result.per_block[0]
print("skip/conv/pool terms of block 0:", first.skip_sed, first.conv_sed, first.pool_sed)
print("SED:", result.sed)

# All 5^6 cells. Parsing is kept out of the timed region.
encodings = list(enumerate_encodings(space))
archs = [build(space, e) for e in encodings]
start = time.perf_counter()
scores = np.array([v for _, v in batch_score(archs, space)])
elapsed = time.perf_counter() - start
print(f"scored {len(scores)} cells in {elapsed:.3f} s ({elapsed / 3600:.2e} hours)")

# SED only sees operation counts, so many cells share a score
print("distinct scores:", len(np.unique(scores)))

order = np.argsort(-scores, kind="stable")
for i in order[:5]:
    print(f"{scores[i]:9.4f}  {encodings[i]}")

# What the top 1% of cells are made of
top = order[: len(order) // 100]
ops = Counter(tok.split("~")[0] for i in top for tok in encodings[i].replace("+", "").split("|") if tok)
print("op frequency in the top 1%:", dict(ops.most_common()))
