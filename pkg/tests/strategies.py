"""Hypothesis strategies for terms (independent of the propkit generator)."""

from hypothesis import strategies as st

from fmc.syntax import Join, Jump, Loop, Pop, Push, Var

NAMES = ("x", "y", "z")
JUMPS = ("*", "#a", "#b")


def terms(names=NAMES, jumps=JUMPS, loops=True, max_leaves=12):
    leaf = st.one_of(st.sampled_from(names).map(Var), st.sampled_from(jumps).map(Jump))

    def extend(sub):
        opts = [
            st.builds(Push, sub, sub),
            st.builds(lambda x, b: Pop(x, None, b), st.sampled_from(names), sub),
            st.builds(Join, sub, st.sampled_from(jumps), sub),
        ]
        if loops:
            opts.append(st.builds(Loop, sub, st.sampled_from(jumps)))
        return st.one_of(opts)

    return st.recursive(leaf, extend, max_leaves=max_leaves)
