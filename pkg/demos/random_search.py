"""SED-driven random search over the bundled spaces."""

from sedproxy import load_space
from sedproxy.search import SearchConfig, build, enumerate_encodings, sample_encodings, search, select

for name in ("tss", "darts-search", "darts"):
    space = load_space(name)
    result = search(SearchConfig(space, n_samples=2000, seed=1))
    print(f"{name:13s} best SED {result.best_sed:9.4f}  scoring {result.elapsed:.3f} s")
    print("   ", result.best_encoding[:110])

# Sampling is uniform per slot and seeded
tss = load_space("tss")
print(sample_encodings(tss, 2, seed=0))
print(sample_encodings(tss, 2, seed=0) == sample_encodings(tss, 2, seed=0))

# With dedup and n = 5^6 the sample is the whole space, so the pick
# matches the argmax of the full enumeration
full = search(SearchConfig(tss, 15625, seed=42, dedup=True))
archs = [build(tss, e) for e in enumerate_encodings(tss)]
best, scores, _ = select(archs, tss)
print(full.best_encoding == archs[best].encoding, full.best_sed)

# Ties are frequent since SED only counts operations; the smallest encoding wins
ties = [a.encoding for a, (_, v) in zip(archs, scores) if v == scores[best][1]]
print(len(ties), "cells share the top score; picked", min(ties))
