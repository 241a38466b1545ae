import runpy
from pathlib import Path

import pytest

NOTEBOOKS = Path(__file__).resolve().parent.parent / "notebooks"


@pytest.mark.parametrize("name, expected", [
    ("01_expectation_equivalence.py", "P7: PMF-gradient update breaks expectation equivalence; verdict diverged"),
    ("02_function_approximation.py", "seed 2: 5000 steps"),
])
def test_demo_script_runs(name, expected, capsys):
    runpy.run_path(str(NOTEBOOKS / name), run_name="__main__")
    assert expected in capsys.readouterr().out
