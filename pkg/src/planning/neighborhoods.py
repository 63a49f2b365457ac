"""
Best-improvement local search over four neighbourhoods:

- flip:      reverse the direction of one visit
- relocate:  move one visit to any position of any tour
- swap:      exchange two visits between different tours
- two_opt:   reverse a run of visits inside one tour

All candidate moves of a pass are scored together: tour-cost deltas are
numpy arrays over the travel table and the plan cost of every candidate is
evaluated in one batch. After a move is applied the touched tours are
recomputed in full and the move is kept only if the recomputed key really
improved.
"""
from __future__ import annotations

import logging
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.costs import CostFunction
from src.core.model import TravelTable

logger = logging.getLogger(__name__)

Seq = List[Tuple[int, int]]
Key = Tuple[float, float]
Move = Tuple[Key, str, tuple]


def assert_coverage(tours: Sequence[Seq], n_seg: int) -> None:
    assert sorted(i for seq in tours for i, _ in seq) == list(range(n_seg)), "coverage broken"


def _ints(values) -> np.ndarray:
    return np.asarray(list(values), dtype=np.int64)


class Layout(NamedTuple):
    """
    Route nodes of a plan as flat arrays.

    Visits are listed tour by tour; `prev`/`next` are the nodes flown from and
    to around each visit. Edges are the L + 1 insertion slots of a tour of
    L visits, from its start node to the depot.
    """
    tour: np.ndarray
    pos: np.ndarray
    seg: np.ndarray
    entry: np.ndarray
    exit: np.ndarray
    prev: np.ndarray
    next: np.ndarray
    edge_tour: np.ndarray
    edge_pos: np.ndarray
    edge_prev: np.ndarray
    edge_next: np.ndarray


def layout(table: TravelTable, tours: Sequence[Seq]) -> Layout:
    seg = _ints(i for seq in tours for i, _ in seq)
    dirs = _ints(d for seq in tours for _, d in seq)
    tour = _ints(r for r, seq in enumerate(tours) for _ in seq)
    pos = _ints(k for seq in tours for k in range(len(seq)))

    edge_prev: List[int] = []
    edge_next: List[int] = []
    edge_tour: List[int] = []
    edge_pos: List[int] = []
    for r, seq in enumerate(tours):
        edge_prev += [table.start_node(r)] + [table.exit(i, d) for i, d in seq]
        edge_next += [table.entry(i, d) for i, d in seq] + [0]
        edge_tour += [r] * (len(seq) + 1)
        edge_pos += range(len(seq) + 1)
    edge_prev_a, edge_next_a = _ints(edge_prev), _ints(edge_next)

    # visit k of tour r lies between edges first[r] + k and first[r] + k + 1
    first = np.cumsum([0] + [len(seq) + 1 for seq in tours])[:-1].astype(np.int64)
    at = first[tour] + pos
    return Layout(
        tour=tour, pos=pos, seg=seg,
        entry=table.base + 2 * seg + dirs,
        exit=table.base + 2 * seg + 1 - dirs,
        prev=edge_prev_a[at], next=edge_next_a[at + 1],
        edge_tour=_ints(edge_tour), edge_pos=_ints(edge_pos),
        edge_prev=edge_prev_a, edge_next=edge_next_a,
    )


class Candidates(NamedTuple):
    """Moves of one neighbourhood: new costs of the (at most two) touched tours."""
    kind: str
    r: np.ndarray
    cost_r: np.ndarray
    s: np.ndarray
    cost_s: np.ndarray
    args: Callable[[int], tuple]


class LocalSearch:
    """
    Descends on the plan cost until no move improves it.

    With `plateau_moves` the key becomes (plan cost, total battery): moves
    that keep the plan cost but shorten the tours are taken as well, which
    lets MinMax leave plateaus. Plan cost never increases either way.
    """

    def __init__(self, table: TravelTable, cost_function: CostFunction, max_passes: int = 1000,
                 plateau_moves: bool = False):
        self.table = table
        self.cost_function = cost_function
        self.max_passes = max_passes
        self.plateau_moves = plateau_moves
        self.T = table.transit
        self.I = table.inspect

    def key(self, costs: Sequence[float]) -> Key:
        total = sum(costs) if self.plateau_moves else 0.0
        return (self.cost_function(costs, self.table.budgets), total)

    def run(self, tours: List[Seq]) -> List[Seq]:
        table = self.table
        costs = [table.sequence_cost(r, seq) for r, seq in enumerate(tours)]
        key = self.key(costs)
        for n_pass in range(self.max_passes):
            move = self.best_move(tours, costs, key)
            if move is None:
                break
            candidate = self.apply(tours, move)
            assert_coverage(candidate, table.n_seg)
            new_costs = [table.sequence_cost(r, seq) for r, seq in enumerate(candidate)]
            new_key = self.key(new_costs)
            if not new_key < key:
                logger.debug("Move %s did not survive recomputation; stopping", move[1])
                break
            tours, costs, key = candidate, new_costs, new_key
        else:
            logger.debug("Local search hit the pass limit (%d)", self.max_passes)
        return tours

    # ──────────────────────────────────────────────────────────
    # move evaluation
    # ──────────────────────────────────────────────────────────

    def best_move(self, tours: List[Seq], costs: Sequence[float], key: Key) -> Optional[Move]:
        """Lowest-key improving move; ties go to the first candidate in neighbourhood order."""
        lay = layout(self.table, tours)
        if not lay.seg.size:
            return None
        base = np.asarray(costs, dtype=float)
        families = [self._flips(lay, base), self._two_opts(lay, base),
                    self._relocations(lay, base), self._swaps(lay, base)]

        r = np.concatenate([f.r for f in families])
        s = np.concatenate([f.s for f in families])
        n = r.size
        rows = np.tile(base, (n, 1))
        idx = np.arange(n)
        rows[idx, r] = np.concatenate([f.cost_r for f in families])
        rows[idx, s] = np.concatenate([f.cost_s for f in families])

        plan = self.cost_function.batch(rows, self.table.budgets)
        total = rows.sum(axis=1) if self.plateau_moves else np.zeros(n)
        better = np.flatnonzero((plan < key[0]) | ((plan == key[0]) & (total < key[1])))
        if not better.size:
            return None
        g = int(better[np.lexsort((better, total[better], plan[better]))[0]])

        ends = np.cumsum([f.r.size for f in families])
        f = int(np.searchsorted(ends, g, side="right"))
        local = g - (int(ends[f - 1]) if f else 0)
        family = families[f]
        return (float(plan[g]), float(total[g])), family.kind, family.args(local)

    def _flips(self, lay: Layout, base: np.ndarray) -> Candidates:
        T = self.T
        delta = (T[lay.prev, lay.exit] + T[lay.entry, lay.next]
                 - T[lay.prev, lay.entry] - T[lay.exit, lay.next])
        cost = base[lay.tour] + delta
        return Candidates("flip", lay.tour, cost, lay.tour, cost,
                          lambda j: (int(lay.tour[j]), int(lay.pos[j])))

    def _two_opts(self, lay: Layout, base: np.ndarray) -> Candidates:
        # reversing visits a..b only changes the two boundary legs
        T = self.T
        a, b = np.nonzero((lay.tour[:, None] == lay.tour[None, :]) & (lay.pos[:, None] < lay.pos[None, :]))
        delta = (T[lay.prev[a], lay.exit[b]] + T[lay.entry[a], lay.next[b]]
                 - T[lay.prev[a], lay.entry[a]] - T[lay.exit[b], lay.next[b]])
        r = lay.tour[a]
        cost = base[r] + delta
        return Candidates("two_opt", r, cost, r, cost,
                          lambda j: (int(r[j]), int(lay.pos[a[j]]), int(lay.pos[b[j]])))

    def _relocations(self, lay: Layout, base: np.ndarray) -> Candidates:
        T, I = self.T, self.I
        fwd_in = self.table.base + 2 * lay.seg
        fwd_out = fwd_in + 1
        ep, en = lay.edge_prev, lay.edge_next

        # [visit, edge]: cheapest way to fly the visit's segment inside that edge
        ins_fwd = T[np.ix_(ep, fwd_in)].T + T[np.ix_(fwd_out, en)]
        ins_rev = T[np.ix_(ep, fwd_out)].T + T[np.ix_(fwd_in, en)]
        reverse = ins_rev < ins_fwd
        ins = np.where(reverse, ins_rev, ins_fwd) + I[lay.seg][:, None] - T[ep, en][None, :]
        removal = T[lay.prev, lay.next] - T[lay.prev, lay.entry] - I[lay.seg] - T[lay.exit, lay.next]

        same = lay.edge_tour[None, :] == lay.tour[:, None]
        # the two edges around a visit merge when it is removed
        merged = same & ((lay.edge_pos[None, :] == lay.pos[:, None])
                         | (lay.edge_pos[None, :] == lay.pos[:, None] + 1))
        u, e = np.nonzero(~merged)
        r, s, inside = lay.tour[u], lay.edge_tour[e], same[u, e]
        gain = ins[u, e]
        cost_r = base[r] + removal[u] + np.where(inside, gain, 0.0)
        cost_s = np.where(inside, cost_r, base[s] + gain)

        def args(j: int) -> tuple:
            k, q = int(lay.pos[u[j]]), int(lay.edge_pos[e[j]])
            if inside[j] and q > k:
                q -= 1
            return int(r[j]), k, int(s[j]), q, int(reverse[u[j], e[j]])

        return Candidates("relocate", r, cost_r, s, cost_s, args)

    def _swaps(self, lay: Layout, base: np.ndarray) -> Candidates:
        T, I = self.T, self.I
        fwd_in = self.table.base + 2 * lay.seg
        fwd_out = fwd_in + 1

        # [u, w]: cost of flying segment w in the slot of visit u
        slot_fwd = T[np.ix_(lay.prev, fwd_in)] + T[np.ix_(fwd_out, lay.next)].T
        slot_rev = T[np.ix_(lay.prev, fwd_out)] + T[np.ix_(fwd_in, lay.next)].T
        reverse = slot_rev < slot_fwd
        slot = np.where(reverse, slot_rev, slot_fwd) + I[lay.seg][None, :]
        out = T[lay.prev, lay.entry] + I[lay.seg] + T[lay.exit, lay.next]

        u, v = np.nonzero(lay.tour[:, None] < lay.tour[None, :])
        r, s = lay.tour[u], lay.tour[v]
        cost_r = base[r] - out[u] + slot[u, v]
        cost_s = base[s] - out[v] + slot[v, u]
        return Candidates("swap", r, cost_r, s, cost_s,
                          lambda j: (int(r[j]), int(lay.pos[u[j]]), int(s[j]), int(lay.pos[v[j]]),
                                     int(reverse[u[j], v[j]]), int(reverse[v[j], u[j]])))

    # ──────────────────────────────────────────────────────────
    # move application
    # ──────────────────────────────────────────────────────────

    @staticmethod
    def apply(tours: List[Seq], move: Move) -> List[Seq]:
        _, kind, args = move
        out = [list(seq) for seq in tours]
        if kind == "flip":
            r, k = args
            i, d = out[r][k]
            out[r][k] = (i, 1 - d)
        elif kind == "two_opt":
            r, a, b = args
            out[r][a:b + 1] = [(i, 1 - d) for i, d in reversed(out[r][a:b + 1])]
        elif kind == "relocate":
            r, k, s, q, d = args
            i, _ = out[r].pop(k)
            out[s].insert(q, (i, d))
        elif kind == "swap":
            r, k, s, m, dv, du = args
            u, v = out[r][k][0], out[s][m][0]
            out[r][k] = (v, dv)
            out[s][m] = (u, du)
        else:
            raise ValueError(f"Unknown move kind '{kind}'")
        return out
