from __future__ import annotations

import pytest

from combcasimir import CombModel


@pytest.fixture(scope="session")
def ddp8():
    return CombModel.dirac(8.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def ddp10():
    return CombModel.dirac(10.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def pt06():
    return CombModel.poschl_teller(0.6, 1.0)


@pytest.fixture(scope="session")
def free():
    return CombModel.free(1.0)
