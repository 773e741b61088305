import numpy as np
import pytest

from ignifront.reaction import ReactionField, homogeneous_medium, make_nonlinearity, sample_medium
from ignifront.solver import GridConfig

THETA0 = 0.25


@pytest.fixture(scope="session")
def nl():
    return make_nonlinearity("quadratic", THETA0)


@pytest.fixture(scope="session")
def grid():
    return GridConfig()


@pytest.fixture(scope="session")
def homog_field(nl):
    return ReactionField(nl, homogeneous_medium(1.0))


@pytest.fixture(scope="session")
def random_field(nl):
    return ReactionField(nl, sample_medium(7, "iid-uniform", 1.0, 2.0))


@pytest.fixture(scope="session")
def wave_g1(nl):
    from ignifront.profiles import tw_speed_shoot

    return tw_speed_shoot(nl, 1.0)


@pytest.fixture(scope="session")
def wave_g2(nl):
    from ignifront.profiles import tw_speed_shoot

    return tw_speed_shoot(nl, 2.0)


def fit_speed(traj, t_from):
    t = traj.times()
    X = traj.interface()
    sel = (t >= t_from) & np.isfinite(X)
    return float(np.polyfit(t[sel], X[sel], 1)[0])
