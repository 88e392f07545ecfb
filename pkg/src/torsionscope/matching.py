"""Maximum bipartite matching (Hopcroft-Karp).

Used by the bottleneck distance as the feasibility test inside the
binary search over candidate values.
"""

from __future__ import annotations

from collections import deque
from typing import List, Sequence, Tuple

__all__ = ["hopcroft_karp"]

_INF = float("inf")


def hopcroft_karp(
    n_left: int, n_right: int, adj: Sequence[Sequence[int]]
) -> Tuple[int, List[int], List[int]]:
    """Maximum matching in a bipartite graph.

    adj[u] lists the right-side neighbors of left node u.  Returns the
    matching size and the partner arrays (-1 for unmatched).
    """
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    dist = [0.0] * n_left

    def bfs() -> bool:
        queue = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0.0
                queue.append(u)
            else:
                dist[u] = _INF
        found = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == _INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = match_r[v]
            if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = _INF
        return False

    size = 0
    while bfs():
        for u in range(n_left):
            if match_l[u] == -1 and dfs(u):
                size += 1
    return size, match_l, match_r
