"""Deterministic seed hierarchy.

Sub-seeds are derived from a master seed with the splitmix64 mixer: the
seed for path ``(a, b, ...)`` is obtained by folding each component into the
state as ``state = splitmix64(state ^ splitmix64(component))``. Components may
be ints or strings (strings are folded byte by byte).
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _component(c):
    if isinstance(c, str):
        acc = 0
        for byte in c.encode():
            acc = splitmix64(acc ^ byte)
        return acc
    return splitmix64(int(c) & _MASK)


def derive_seed(master, *path):
    """Independent 63-bit seed for a named component under ``master``."""
    state = splitmix64(int(master) & _MASK)
    for c in path:
        state = splitmix64(state ^ _component(c))
    return state >> 1
