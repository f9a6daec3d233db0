# State-space growth and timings on synthetic chain and random networks.
from pathlib import Path

import numpy as np

from mdp_defense import TrainConfig
from mdp_defense.experiments import SynthSpec, scaling_benchmark

OUT = Path(__file__).resolve().parent.parent / "out" / "scaling"

rows = scaling_benchmark(range(2, 11), SynthSpec(hosts=1, topology="chain"), TrainConfig(), out_dir=OUT)
print("hosts  states    gen ms  train ms")
for r in rows:
    print(f"{r.hosts:>5} {r.states:>7} {r.gen_ms:>9.1f} {r.train_ms:>9.1f}")

# a chain roughly doubles per host
states = np.array([r.states for r in rows], dtype=float)
print("growth ratio:", np.round(states[1:] / states[:-1], 2))

# random topologies blow up faster; the cap keeps this bounded
dense = scaling_benchmark(range(2, 8), SynthSpec(hosts=1, topology="random", seed=1, edge_prob=0.4),
                          TrainConfig(epochs=2000), state_cap=200_000)
for r in dense:
    print(f"random n={r.hosts}: {'capped' if r.capped else r.states}")
print("scaling.csv written to", OUT)
