"""Pure-Python kernels; the reference the compiled versions are tested against.

Configurations are packed integers with node ``v`` in bits ``v*f .. v*f+f-1``.
A node's packed input is its own state followed by its neighbors' states in
port order (own state most significant).
"""

import numpy as np


def local_inputs(ports, f, n):
    """``out[x, v]``: packed input of node ``v`` in configuration ``x``."""
    ports = np.asarray(ports, dtype=np.int64).tolist()
    mask = (1 << f) - 1
    count = 1 << (f * n)
    out = np.empty((count, n), dtype=np.int64)
    for x in range(count):
        for v in range(n):
            idx = (x >> (v * f)) & mask
            for u in ports[v]:
                idx = (idx << f) | ((x >> (u * f)) & mask)
            out[x, v] = idx
    return out


def sync_successors(tables, ports, f, n):
    """Configuration reached when every node applies its table at once."""
    tables = np.asarray(tables, dtype=np.int64).tolist()
    ports = np.asarray(ports, dtype=np.int64).tolist()
    mask = (1 << f) - 1
    count = 1 << (f * n)
    out = [0] * count
    for x in range(count):
        y = 0
        for v in range(n):
            idx = (x >> (v * f)) & mask
            for u in ports[v]:
                idx = (idx << f) | ((x >> (u * f)) & mask)
            y |= tables[v][idx] << (v * f)
        out[x] = y
    return np.array(out, dtype=np.int64)


def settle_times(succ, legal):
    """Steps until the deterministic execution from each start is legal forever.

    ``-1`` marks starts whose eventual cycle contains an illegal configuration.
    """
    succ = np.asarray(succ, dtype=np.int64).tolist()
    legal = np.asarray(legal, dtype=bool).tolist()
    count = len(succ)
    mark = [0] * count  # 0 unseen, 1 on the current path, 2 settled
    pos = [0] * count
    settle = [0] * count
    for start in range(count):
        if mark[start]:
            continue
        path = []
        x = start
        while mark[x] == 0:
            mark[x] = 1
            pos[x] = len(path)
            path.append(x)
            x = succ[x]
        if mark[x] == 1:
            cycle = path[pos[x]:]
            value = 0 if all(legal[y] for y in cycle) else -1
            for y in cycle:
                settle[y] = value
                mark[y] = 2
            del path[pos[x]:]
        for y in reversed(path):
            s = settle[succ[y]]
            if s < 0:
                settle[y] = -1
            elif s == 0 and legal[y]:
                settle[y] = 0
            else:
                settle[y] = s + 1
            mark[y] = 2
    return np.array(settle, dtype=np.int64)
