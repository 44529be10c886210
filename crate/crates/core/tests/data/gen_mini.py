"""Regenerates mini.dat: 1000 transactions drawn from a small topic mixture."""
import random

rng = random.Random(20240611)
raw = [7 * k + 3 for k in range(48)]
topics = [raw[i * 10:(i + 1) * 10] for i in range(4)]
weight = {r: rng.uniform(0.2, 0.6) for r in raw}

with open("mini.dat", "w") as out:
    for _ in range(1000):
        chosen = [t for t in topics if rng.random() < 0.4]
        items = []
        for t in chosen:
            items += [r for r in t if rng.random() < weight[r]]
        items += [r for r in raw if rng.random() < 0.02]
        if not items:
            items.append(rng.choice(raw))
        rng.shuffle(items)
        if items and rng.random() < 0.05:
            items.append(items[0])
        out.write(" ".join(map(str, items)) + "\n")
