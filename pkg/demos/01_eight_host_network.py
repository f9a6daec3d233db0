# Walk through the eight-host demo network: build the state space, solve it
# exactly, train a Q-table, and read a defense plan out of each.
from pathlib import Path

import numpy as np

from mdp_defense import (
    TrainConfig,
    extract_defense_sequence,
    generate_state_space,
    improvement_percentage,
    load_scenario,
    no_defense_baseline,
    plan_value,
    train,
    value_iteration_oracle,
)
from mdp_defense.reports import qtable_text

ROOT = Path(__file__).resolve().parent.parent
scenario = load_scenario(ROOT / "fixtures" / "paper8.scenario")

for d in scenario.defenses:
    print(d.id, d.description)

# The attacker follows a declared route through the network
print("attack path:", " -> ".join(scenario.attack_path))

space = generate_state_space(scenario)
print(space.n_states, "states,", space.n_actions, "actions:", space.actions)

# exact values, for reference
oracle = value_iteration_oracle(space, gamma=0.9)
print("oracle, initial state:", np.round(oracle.values[0], 3))

q = train(space, TrainConfig(epochs=50_000, seed=0))
print("learned, initial state:", np.round(q.values[0], 3))
# deep states are rarely visited, so only part of the table has settled
close = np.abs(q.values - oracle.values)[q.update_counts > 0] < 0.05
print(f"{close.mean():.0%} of visited cells within 0.05 of the oracle")

plan = extract_defense_sequence(space, q)
ndr = no_defense_baseline(space, gamma=0.9)
osr = plan_value(space, plan, 0.9)
print("plan:", plan, "| reward", round(osr, 3), "vs", round(ndr, 3), "undefended")
print(f"improvement {improvement_percentage(osr, ndr):.1%}")

# After D3 the route is cut and the attack column stays at zero
print(qtable_text(space, oracle).split("\n\n")[plan.terminal_state])

# Without the route the attacker can come in through either internet-facing host
open_space = generate_state_space(scenario.without_attack_path())
open_oracle = value_iteration_oracle(open_space, 0.9)
open_plan = extract_defense_sequence(open_space, open_oracle)
print(open_space.n_states, "states without a path; plan:", open_plan)
print("initial row:", np.round(open_oracle.values[0], 3))
