from typing import Callable, Dict

from runner.tasks import (
    axioms_tool,
    complexity_tool,
    entropy_tool,
    simulate_tool,
    validate_seq_tool,
    variational_tool,
)

# Subcommand descriptions, also used as CLI help
EXPERIMENT_TASKS = [
    {
        "name": "simulate",
        "description": "Evolve a sampled ensemble on each window and dump the windowed states",
        "outputs": ["simulate.csv"],
    },
    {
        "name": "complexity",
        "description": "Orbit complexity rates: per step, covering infimum, per site, eps scan, tau invariance",
        "outputs": ["complexity.csv"],
    },
    {
        "name": "entropy",
        "description": "Distinguishable-orbit counts and entropy per unit time and volume",
        "outputs": ["entropy_counts.csv", "entropy.csv"],
    },
    {
        "name": "variational",
        "description": "Mean complexity rate at eps against the entropy rate at eps/4",
        "outputs": ["variational.csv"],
    },
    {
        "name": "axioms",
        "description": "Check the complexity backend against (H1)-(H4) on randomized corpora",
        "outputs": ["axioms.csv"],
    },
    {
        "name": "validate-seq",
        "description": "Check the admissible window sequence and label its index partition",
        "outputs": ["validate_seq.csv", "partition.csv"],
    },
]


def register_task_functions() -> Dict[str, Callable]:
    """Map subcommand names to task functions"""
    return {
        "simulate": simulate_tool,
        "complexity": complexity_tool,
        "entropy": entropy_tool,
        "variational": variational_tool,
        "axioms": axioms_tool,
        "validate-seq": validate_seq_tool,
    }
