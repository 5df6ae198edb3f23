import math

import numpy as np
import pytest

from harqage import HarqScheme, explicit_probs


def random_instances(count, seed, n_max=100, m_max=100, q_floor=0.0, boundary_share=0.3):
    """Random (scheme, probs) pairs; a share sits at n = ceil(m*sqrt(1-q1)) +/- 1.

    q values are drawn from (q_floor, 1].
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        q1 = 1.0 - (1.0 - q_floor) * rng.random()
        q2 = 1.0 - (1.0 - q_floor) * rng.random()
        m = int(rng.integers(0, m_max + 1))
        if rng.random() < boundary_share and m > 0:
            edge = math.ceil(m * math.sqrt(1.0 - q1))
            n = max(1, edge + int(rng.choice([-1, 0, 1])))
        else:
            n = int(rng.integers(1, n_max + 1))
        out.append((HarqScheme(1, n, m), explicit_probs(q1, q2)))
    return out


@pytest.fixture(scope="session")
def instances():
    return random_instances(1000, seed=20240611)
