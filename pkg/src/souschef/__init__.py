"""souschef: goal inference and receding-horizon planning for a shared kitchen.

A turn-based cooking world, a bank of recipe goals with partially ordered
steps, attractor-field scoring, belief tracking with clarifying questions,
and an experiment harness for running robot methods against a scripted
human partner.
"""

from importlib import resources

from .world import DomainSpec, load_domain
from .recipes import GoalBank, load_goal_bank

__version__ = "0.1.0"


def bundled_domain_path() -> str:
    return str(resources.files("souschef").joinpath("data/cooking.domain"))


def bundled_goal_bank_path() -> str:
    return str(resources.files("souschef").joinpath("data/goalbank.txt"))


def load_bundled_domain() -> DomainSpec:
    return load_domain(bundled_domain_path())


def load_bundled_goal_bank() -> GoalBank:
    return load_goal_bank(bundled_goal_bank_path())
