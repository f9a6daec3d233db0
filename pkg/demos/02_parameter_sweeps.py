# How exploration and training length affect the plan that comes out.
from dataclasses import replace
from pathlib import Path

from mdp_defense import load_scenario
from mdp_defense.experiments import SweepSpec, mean_by_value, run_sweep

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "out" / "sweeps"
scenario = load_scenario(ROOT / "fixtures" / "paper8.scenario").without_attack_path()

# epsilon at a short training budget: heavy exploration rarely reaches
# the greedy plan often enough to learn it
spec = SweepSpec("epsilon", (0.1, 0.3, 0.5, 0.7, 0.95), scenario, repetitions=5,
                 base=replace(scenario.learning, epochs=1000))
rows = run_sweep(spec, OUT)
for eps, mean in mean_by_value(rows, "improvement_pct").items():
    print(f"epsilon {eps:<5} mean improvement {mean:.3f}")

# coverage: cells that were never written shrink as epochs grow
spec = SweepSpec("epochs", (10, 100, 1000, 10_000), scenario, repetitions=5)
rows = run_sweep(spec, OUT)
for epochs, mean in mean_by_value(rows, "unupdated_count").items():
    print(f"{int(epochs):>6} epochs  {mean:7.1f} cells never updated")

# discount factor; with a short horizon defending looks less attractive
spec = SweepSpec("gamma", (0.1, 0.5, 0.9, 0.99), scenario, repetitions=3)
for row in run_sweep(spec, OUT):
    print(f"gamma {row.value:<5} seed {row.seed:>20}  plan {row.plan or '-':<8} osr {row.optimal_reward:.3f}")

print("CSV files in", OUT)
