"""Envy-Cycle-Elimination for goods, with choice policies and an exhaustive
execution-tree enumerator.

Goods are placed in id order.  Before each placement every envy cycle is
resolved (all of them, one at a time, until the envy graph is acyclic); the
good then goes to an agent nobody envies.  The two free choices, which cycle
to resolve and which unenvied agent to serve, are delegated to a
:class:`ChoicePolicy`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Sequence

from .audit import value_matrix
from .errors import InputError, InvariantViolation, OracleLimitError
from .model import Allocation, Instance, require_valid
from .ordered import pick_by_seq, to_ordered


@dataclass(frozen=True)
class EnvyGraph:
    """Directed envy relation: ``j in succ[i]`` iff agent ``i`` envies ``j``
    (0-based internally, 1-based in every public method)."""

    n: int
    succ: tuple[tuple[int, ...], ...]

    @classmethod
    def from_matrix(cls, V) -> "EnvyGraph":
        n = len(V)
        return cls(n, tuple(tuple(j for j in range(n) if V[i][i] < V[i][j]) for i in range(n)))

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((i + 1, j + 1) for i in range(self.n) for j in self.succ[i])

    def unenvied(self) -> list[int]:
        envied = {j for s in self.succ for j in s}
        return [i + 1 for i in range(self.n) if i not in envied]

    def simple_cycles(self) -> Iterator[tuple[int, ...]]:
        """Yield every simple cycle once, rotated to start at its smallest
        agent, in lexicographic order (DFS from the lowest-index node)."""
        for start in range(self.n):
            path = [start]
            on_path = {start}
            stack = [iter(self.succ[start])]
            while stack:
                nxt = next(stack[-1], None)
                if nxt is None:
                    stack.pop()
                    on_path.discard(path.pop())
                    continue
                if nxt == start:
                    yield tuple(a + 1 for a in path)
                elif nxt > start and nxt not in on_path:
                    path.append(nxt)
                    on_path.add(nxt)
                    stack.append(iter(self.succ[nxt]))

    def has_cycle(self) -> bool:
        return next(self.simple_cycles(), None) is not None


def envy_graph(inst: Instance, alloc: Allocation) -> EnvyGraph:
    require_valid(inst, alloc, partial=True)
    return EnvyGraph.from_matrix(value_matrix(inst, alloc))


class ChoicePolicy:
    """Resolves the two free choices of ECE.  Both methods return an index
    into the offered (non-empty) list."""

    # when False the engine only offers the lexicographically first cycle
    needs_all_cycles = True

    def choose_cycle(self, cycles: Sequence[tuple[int, ...]], item: int) -> int:
        raise NotImplementedError

    def choose_agent(self, agents: Sequence[int], item: int) -> int:
        raise NotImplementedError


class LexicographicPolicy(ChoicePolicy):
    """First cycle in DFS order, lowest-index unenvied agent."""

    needs_all_cycles = False

    def choose_cycle(self, cycles, item):
        return 0

    def choose_agent(self, agents, item):
        return 0


class RandomPolicy(ChoicePolicy):
    """Uniform choices from a seeded Mersenne Twister."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def choose_cycle(self, cycles, item):
        return self.rng.randrange(len(cycles))

    def choose_agent(self, agents, item):
        return self.rng.randrange(len(agents))


class ScriptedPolicy(LexicographicPolicy):
    """Serve ``receivers[item]`` when that agent is unenvied; lexicographic
    otherwise.  Used to force specific execution paths."""

    def __init__(self, receivers: dict[int, int]):
        self.receivers = dict(receivers)

    def choose_agent(self, agents, item):
        want = self.receivers.get(item)
        if want is not None and want in agents:
            return list(agents).index(want)
        return 0


@dataclass(frozen=True)
class Round:
    """One iteration of the outer loop: cycles resolved (in order), then
    ``item`` given to ``agent``."""

    item: int
    cycles: tuple[tuple[int, ...], ...]
    agent: int

    def to_dict(self) -> dict:
        return {"item": self.item, "cycles": [list(c) for c in self.cycles], "agent": self.agent}


@dataclass(frozen=True)
class ExecutionPath:
    rounds: tuple[Round, ...]

    def receivers(self) -> tuple[int, ...]:
        return tuple(r.agent for r in self.rounds)

    def to_dict(self) -> dict:
        return {"rounds": [r.to_dict() for r in self.rounds]}

    @classmethod
    def from_dict(cls, obj) -> "ExecutionPath":
        return cls(
            tuple(
                Round(r["item"], tuple(tuple(c) for c in r["cycles"]), r["agent"])
                for r in obj["rounds"]
            )
        )


class _State:
    """Mutable ECE state with an incrementally maintained value matrix."""

    __slots__ = ("rows", "bundles", "V")

    def __init__(self, inst: Instance):
        n = inst.n
        self.rows = inst.rows
        self.bundles = [[] for _ in range(n)]
        self.V = [[0] * n for _ in range(n)]

    def graph(self) -> EnvyGraph:
        return EnvyGraph.from_matrix(self.V)

    def is_envy_cycle(self, cycle) -> bool:
        k = len(cycle)
        if k == 0 or len(set(cycle)) != k or not all(1 <= a <= len(self.V) for a in cycle):
            return False
        V = self.V
        for t in range(k):
            a, b = cycle[t - 1] - 1, cycle[t] - 1
            if not V[a][a] < V[a][b]:
                return False
        return True

    def resolve(self, cycle) -> None:
        idx = [a - 1 for a in cycle]
        shifted = idx[1:] + idx[:1]
        new_bundles = [self.bundles[b] for b in shifted]
        for a, bundle in zip(idx, new_bundles):
            self.bundles[a] = bundle
        for row in self.V:
            vals = [row[b] for b in shifted]
            for a, v in zip(idx, vals):
                row[a] = v

    def give(self, agent: int, item: int) -> None:
        a = agent - 1
        self.bundles[a].append(item)
        for i, row in enumerate(self.rows):
            self.V[i][a] += row[item - 1]

    def allocation(self) -> Allocation:
        return Allocation(self.bundles)


def _require_goods(inst: Instance) -> None:
    if not inst.is_goods:
        raise InputError("envy-cycle elimination is defined here for goods instances only")


def resolve_cycle(inst: Instance, alloc: Allocation, cycle: Sequence[int]) -> Allocation:
    """Shift bundles against an envy cycle: each member takes the bundle of
    the agent it envies.  ``alloc`` may leave items unallocated."""
    require_valid(inst, alloc, partial=True)
    state = _State(inst)
    state.bundles = [list(b) for b in alloc.bundles]
    state.V = value_matrix(inst, alloc)
    if not state.is_envy_cycle(tuple(cycle)):
        raise InputError(f"{tuple(cycle)} is not an envy cycle in {alloc}")
    state.resolve(tuple(cycle))
    return state.allocation()


def run_ece(inst: Instance, policy: ChoicePolicy | None = None) -> tuple[Allocation, ExecutionPath]:
    _require_goods(inst)
    policy = policy or LexicographicPolicy()
    state = _State(inst)
    rounds = []
    for item in range(1, inst.m + 1):
        resolved = []
        while True:
            graph = state.graph()
            if policy.needs_all_cycles:
                cycles = list(graph.simple_cycles())
            else:
                first = next(graph.simple_cycles(), None)
                cycles = [] if first is None else [first]
            if not cycles:
                break
            cycle = cycles[policy.choose_cycle(cycles, item)]
            state.resolve(cycle)
            resolved.append(cycle)
        agents = graph.unenvied()
        if not agents:
            raise InvariantViolation(
                "acyclic envy graph without an unenvied agent",
                state={"item": item, "bundles": state.bundles, "values": state.V},
            )
        agent = agents[policy.choose_agent(agents, item)]
        state.give(agent, item)
        rounds.append(Round(item, tuple(resolved), agent))
    return state.allocation(), ExecutionPath(tuple(rounds))


def replay(inst: Instance, path: ExecutionPath, check: bool = True) -> Allocation:
    """Re-execute a recorded path.

    With ``check`` every recorded cycle must be a genuine envy cycle, the
    graph must be acyclic once a round's cycles are resolved, and the
    receiving agent must be unenvied; any breach raises InvariantViolation.
    """
    _require_goods(inst)
    if len(path.rounds) != inst.m:
        raise InputError(f"path has {len(path.rounds)} rounds, instance has {inst.m} items")
    state = _State(inst)
    for expected, rnd in enumerate(path.rounds, start=1):
        if rnd.item != expected:
            raise InputError(f"round {expected} places item {rnd.item}")
        for cycle in rnd.cycles:
            if check and not state.is_envy_cycle(cycle):
                raise InvariantViolation(f"recorded cycle {cycle} is not an envy cycle", state=rnd)
            state.resolve(cycle)
        if check:
            graph = state.graph()
            if graph.has_cycle():
                raise InvariantViolation("envy graph still cyclic after decycling", state=rnd)
            if not graph.unenvied():
                raise InvariantViolation("decycled envy graph has no source", state=rnd)
            if rnd.agent not in graph.unenvied():
                raise InvariantViolation(f"agent {rnd.agent} is envied", state=rnd)
        state.give(rnd.agent, rnd.item)
    return state.allocation()


def enumerate_ece_outcomes(
    inst: Instance, max_paths: int = 100_000
) -> dict[ExecutionPath, Allocation]:
    """Every execution path of ECE with its final allocation.

    Both choice points branch exhaustively: every simple cycle may be the
    next one resolved, and every unenvied agent may receive the good.
    States (allocation, goods placed) reached along different paths are
    explored once and their suffixes shared.  Paths are returned in
    lexicographic choice order.
    """
    _require_goods(inst)
    if inst.n > 4 or inst.m > 12:
        raise InputError(f"enumeration supports n <= 4 and m <= 12, got n={inst.n}, m={inst.m}")
    m = inst.m
    children_memo: dict = {}

    def children(key):
        if key in children_memo:
            return children_memo[key]
        bundles, j = key
        alloc = Allocation(bundles)
        V = value_matrix(inst, alloc)
        graph = EnvyGraph.from_matrix(V)
        out = []
        cycles = list(graph.simple_cycles())
        if cycles:
            for cycle in cycles:
                idx = [a - 1 for a in cycle]
                nb = list(bundles)
                for a, b in zip(idx, idx[1:] + idx[:1]):
                    nb[a] = bundles[b]
                out.append((("c", cycle), (tuple(nb), j)))
        else:
            agents = graph.unenvied()
            if not agents:
                raise InvariantViolation("acyclic envy graph without a source", state=key)
            for a in agents:
                nb = list(bundles)
                nb[a - 1] = bundles[a - 1] | {j + 1}
                out.append((("g", a), (tuple(nb), j + 1)))
        children_memo[key] = out
        return out

    count_memo: dict = {}

    def count(key):
        if key[1] == m:
            return 1
        if key not in count_memo:
            total = 0
            for _, child in children(key):
                total += count(child)
                if total > max_paths:
                    break
            count_memo[key] = total
        return count_memo[key]

    root = (tuple(frozenset() for _ in range(inst.n)), 0)
    total = count(root)
    if total > max_paths:
        raise OracleLimitError(
            f"ECE execution tree has more than {max_paths} paths (counted at least {total})",
            partial_count=total,
        )

    suffix_memo: dict = {}

    def suffixes(key):
        if key[1] == m:
            return [((), key[0])]
        if key not in suffix_memo:
            out = []
            for step, child in children(key):
                for rest, leaf in suffixes(child):
                    out.append(((step,) + rest, leaf))
            suffix_memo[key] = out
        return suffix_memo[key]

    result = {}
    for steps, leaf in suffixes(root):
        rounds, pending, item = [], [], 1
        for kind, arg in steps:
            if kind == "c":
                pending.append(arg)
            else:
                rounds.append(Round(item, tuple(pending), arg))
                pending, item = [], item + 1
        result[ExecutionPath(tuple(rounds))] = Allocation(leaf)
    return result


def run_ordered_ece(inst: Instance, policy: ChoicePolicy | None = None) -> Allocation:
    """ECE on the ordered twin, lifted back by the picking sequence."""
    _require_goods(inst)
    ordered = to_ordered(inst)
    twin_alloc, _ = run_ece(ordered.instance, policy)
    return pick_by_seq(inst, twin_alloc, ordered)
