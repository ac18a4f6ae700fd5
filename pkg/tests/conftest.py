import random
import shutil
from pathlib import Path

import pytest

from bigspace import Control
from bigspace.dsl import bigraph_from_expr, load_program

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
SCENARIOS = ROOT / "scenarios"

ROOM_SIG = {
    "MeetingRoom": Control("MeetingRoom", 0, False),
    "Users": Control("Users", 0, False),
    "Node": Control("Node", 1, True),
    "Person": Control("Person", 0, True),
}


@pytest.fixture
def shutdown_program():
    return load_program((FIXTURES / "shutdown.big").read_text())


@pytest.fixture
def two_node_room():
    return bigraph_from_expr("/x1 /x2 (MeetingRoom.(Users.() | Node{x1} | Node{x2}))", ROOM_SIG)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def bundle(tmp_path):
    """Copy a scenario bundle into a scratch directory so a test may edit it."""
    def copy(name: str) -> Path:
        dest = tmp_path / name
        shutil.copytree(SCENARIOS / name, dest)
        return dest
    return copy
