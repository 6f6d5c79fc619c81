import numpy as np
import pytest

import finmarkov._kernels as kern


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger one-time jit compilation so timed tests measure the checks."""
    keys = np.array([0, 1, 0], dtype=np.int64)
    vals = np.array([1, 2, 3], dtype=np.int64)
    kern.group_sum(keys, vals, 2)
    kern.group_count(keys, 2)
    kern.union_components(3, keys, vals % 3)
    kern.masked_weight_sum(vals, keys, keys)
    kern.pair_canon(keys, vals)
