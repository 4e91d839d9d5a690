import pytest

from souschef import load_bundled_domain, load_bundled_goal_bank
from souschef.harness import bundled_question_templates
from souschef.inquiry import build_question_bank
from souschef.recipes import generate_experiments


@pytest.fixture(scope="session")
def spec():
    return load_bundled_domain()


@pytest.fixture(scope="session")
def bank():
    return load_bundled_goal_bank()


@pytest.fixture(scope="session")
def questions(bank):
    return build_question_bank(bank, bundled_question_templates())


@pytest.fixture(scope="session")
def experiments(bank):
    return generate_experiments(bank, seed=0)


# Two-item kitchen with every verb defined; at most five legal actions in any
# reachable state, so a planner with top_k >= 5 sees the complete tree.
TOY_DOMAIN = """\
items: apple, water@sink
containers: cup
appliances: toaster
locations: shelf, counter, sink

rule gather(?i:items): pre { at(?i,shelf) } eff { at(?i,counter) }
rule collect_water: pre { at(water,sink) } eff { at(water,counter) }
rule pour(?i:items, ?d:containers): pre { at(?i,counter) } eff { at(?i,?d) }
rule mix(?i:items): pre { at(?i,%containers) } eff { cond(?i,mixed) }
rule cook(?i:items): pre { at(?i,cup), on(toaster), cond(?i,mixed) } eff { cond(?i,cooked) }
rule reduce_heat(?i:items): pre { cond(?i,cooked), on(toaster) } eff { cond(?i,simmering) }
rule blend(?i:items): pre { at(?i,%containers), on(toaster), cond(?i,simmering) } eff { cond(?i,blended) }
rule turn_on(?i:appliances): pre { !on(?i) } eff { +on(?i) }
rule serve(?i:containers): pre { at(%items,?i), !served(?i) } eff { +served(?i) }
"""


@pytest.fixture(scope="session")
def toy_spec(tmp_path_factory):
    path = tmp_path_factory.mktemp("domain") / "toy.domain"
    path.write_text(TOY_DOMAIN)
    from souschef.world import load_domain
    return load_domain(str(path))
