from fractions import Fraction as F

import pytest

from xifreeze.measures import BetaLambda, SimplexPoint, XiModel, embed_lambda, kingman

MODELS = {
    "kingman": kingman(1, F(1, 2)),
    "atom": XiModel(atoms=((F(1), SimplexPoint((F(1, 2), F(1, 4)))),), freeze_rate=F(1, 2)),
    "two_atom": XiModel(
        kingman_mass=F(1, 3),
        atoms=(
            (F(1), SimplexPoint((F(1, 2), F(1, 4)))),
            (F(1, 2), SimplexPoint((F(1, 3), F(1, 3), F(1, 3)))),
        ),
        freeze_rate=F(1),
    ),
    "lambda_half": embed_lambda([(1, F(1, 2))], freeze_rate=F(1, 2)),
    "bolthausen": XiModel(lambda_beta=BetaLambda(1, 1, F(1)), freeze_rate=F(1)),
    "star": embed_lambda([(1, 1)], freeze_rate=F(3, 2)),
}


@pytest.fixture(params=sorted(MODELS))
def model(request):
    return MODELS[request.param]


@pytest.fixture
def models():
    return MODELS


# Acceptance tests record one line per criterion; printed at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}: {line}")
