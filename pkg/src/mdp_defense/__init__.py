"""Automated cyber-defense planning: network scenario -> MDP -> Q-learning ->
optimal defense sequence."""

from .policy import (
    DefensePlan,
    best_action,
    extract_defense_sequence,
    improvement_percentage,
    no_defense_baseline,
    optimal_solution_reward,
    plan_value,
)
from .qlearning import (
    QTable,
    RandomSource,
    count_unupdated,
    init_q_table,
    q_update,
    run_episode,
    select_action,
    train,
    value_iteration_oracle,
)
from .scenario import (
    ATTACK,
    INTERNET,
    DefenseSpec,
    Host,
    Link,
    RewardParams,
    Scenario,
    ScenarioError,
    ScenarioSyntaxError,
    TrainConfig,
    Vulnerability,
    attack_penalty,
    defense_cost,
    emit_scenario,
    load_scenario,
    parse_scenario,
    validate_scenario,
)
from .statespace import (
    ATTACK_INDEX,
    NetworkState,
    StateCapExceeded,
    StateSpace,
    Transition,
    apply_action,
    canonical_key,
    feasible_attacks,
    feasible_defenses,
    generate_state_space,
    initial_state,
)

__version__ = "0.1.0"
