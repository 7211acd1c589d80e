import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from plantrecon import plc, synth
from plantrecon.grouping import functional_grouping


@pytest.fixture(scope="session")
def mini_plant():
    return synth.generate(synth.mini_spec())


@pytest.fixture(scope="session")
def mini_project(mini_plant):
    project = plc.parse_project(mini_plant.plc_xml)
    plc.prepare(project)
    return project


@pytest.fixture(scope="session")
def mini_tree(mini_project):
    return plc.build_call_tree(mini_project)


@pytest.fixture(scope="session")
def mini_functional(mini_project, mini_tree):
    return functional_grouping(mini_project, mini_tree)


@pytest.fixture(scope="session")
def reference_plant():
    return synth.generate(synth.reference_spec(noise_sigma_m=0.0))
