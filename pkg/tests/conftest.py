import numpy as np
import pytest

from multicut.models import InventoryParams, make_inventory
from multicut.program import MultistageProgram, StageDistribution, StageRealization


@pytest.fixture(scope="session")
def micro_inventory():
    return make_inventory(InventoryParams(stage_count=3, realizations=2, seed=5))


def two_stage_deterministic():
    """T=2, M=1 inventory-like chain used by several solver tests."""
    return make_inventory(InventoryParams(stage_count=2, realizations=1, seed=5))


def tiny_program(prob2=(0.5, 0.5), demands2=(4.0, 7.0)):
    """Hand-built T=2 program with one decision per stage:
    stage 1: min 1.0*x, x = 3; stage 2: min 2.0*y, y = demand - x."""
    stage1 = StageRealization(eq_cur=[[1.0]], eq_prev=[[0.0]], rhs_eq=[3.0],
                              cost=[1.0], probability=1.0)
    reals = tuple(
        StageRealization(eq_cur=[[1.0]], eq_prev=[[1.0]], rhs_eq=[d],
                         cost=[2.0], probability=p)
        for p, d in zip(prob2, demands2))
    return MultistageProgram(x0=np.zeros(1),
                             stages=(StageDistribution((stage1,)),
                                     StageDistribution(reals)))
