import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from netgen import write_fixture_directory  # noqa: E402

from gasnomval import (  # noqa: E402
    build_network,
    build_scenario,
    derive_constants,
    parse_network_file,
    parse_scenario_file,
)


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory):
    root = tmp_path_factory.mktemp("gaslib")
    return write_fixture_directory(root)


@pytest.fixture(scope="session")
def raw582(fixture_paths):
    return parse_network_file(str(fixture_paths["net582"]))


@pytest.fixture(scope="session")
def network582(raw582):
    return build_network(raw582)


@pytest.fixture(scope="session")
def scenario582(network582, fixture_paths):
    return build_scenario(network582, parse_scenario_file(str(fixture_paths["scn582"])))


@pytest.fixture(scope="session")
def consts582(network582, scenario582):
    return derive_constants(network582, scenario582)


@pytest.fixture(scope="session")
def instance582(network582, scenario582, consts582):
    return network582, scenario582, consts582
