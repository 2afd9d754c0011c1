"""Plain-text file formats.

Topology file::

    # comments and blank lines are ignored
    sink 0
    tx_range 50.0
    0 200.0 200.0        # node id, x, y
    1 230.5 190.25

Query file, one query per line::

    # id sources chi period release deadline weight
    0 3,7,12 1.0 100.0 0.0 4000.0 2.5

Sources are comma separated node ids; ``inf`` is accepted as a deadline.
"""

from __future__ import annotations

from . import netmodel as nm
from .queries import Query


class ParseError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path, self.lineno = path, lineno


def _lines(text):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line


def parse_topology(text: str, path="<topology>") -> nm.Network:
    sink = tx_range = None
    nodes = []
    for lineno, line in _lines(text):
        parts = line.split()
        try:
            if parts[0] == "sink":
                sink = int(parts[1])
            elif parts[0] == "tx_range":
                tx_range = float(parts[1])
            else:
                if len(parts) != 3:
                    raise ValueError(f"expected 'id x y', got {len(parts)} fields")
                nodes.append(nm.Node(int(parts[0]), (float(parts[1]), float(parts[2]))))
        except (ValueError, IndexError) as exc:
            raise ParseError(path, lineno, str(exc)) from None
    if sink is None or tx_range is None:
        raise ParseError(path, 0, "header must give both 'sink' and 'tx_range'")
    return nm.Network(tuple(nodes), sink, tx_range)


def format_topology(net: nm.Network) -> str:
    out = [f"sink {net.sink}", f"tx_range {net.tx_range!r}"]
    out += [f"{n.id} {n.pos[0]!r} {n.pos[1]!r}" for n in net.nodes]
    return "\n".join(out) + "\n"


def parse_queries(text: str, path="<queries>") -> list[Query]:
    out = []
    for lineno, line in _lines(text):
        parts = line.split()
        try:
            if len(parts) != 7:
                raise ValueError(f"expected 7 fields, got {len(parts)}")
            sources = frozenset(int(s) for s in parts[1].split(",") if s)
            qid, chi, period, release, deadline, weight = (
                int(parts[0]), *(float(p) for p in parts[2:]))
            out.append(Query(qid, sources, chi, period, release, deadline, weight))
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
    ids = [q.id for q in out]
    if len(set(ids)) != len(ids):
        raise ParseError(path, 0, "duplicate query ids")
    return out


def format_queries(queries) -> str:
    out = ["# id sources chi period release deadline weight"]
    for q in queries:
        src = ",".join(str(s) for s in sorted(q.sources))
        out.append(f"{q.id} {src} {q.chi!r} {q.period!r} {q.release!r} {q.deadline!r} {q.weight!r}")
    return "\n".join(out) + "\n"


def format_trees(trees) -> str:
    out = ["# query child parent"]
    for qid in sorted(trees):
        out += [f"{q} {c} {p}" for q, c, p in trees[qid].records()]
    return "\n".join(out) + "\n"


def format_frame(schedule) -> str:
    out = [f"# frame_t {schedule.frame_t!r} colors {schedule.color_count}",
           "# color v h node start_offset duration"]
    out += [f"{c} {v} {h} {u} {s!r} {d!r}" for c, v, h, u, s, d in schedule.records()]
    return "\n".join(out) + "\n"


def format_trace(trace) -> str:
    out = ["# start end sender receiver query instance source ok"]
    out += [f"{t.start!r} {t.end!r} {t.sender} {t.receiver} {t.query_id} {t.instance} "
            f"{t.source} {int(t.ok)}" for t in trace]
    return "\n".join(out) + "\n"


def parse_trace(text: str, path="<trace>"):
    from .sim import Transmission
    out = []
    for lineno, line in _lines(text):
        p = line.split()
        try:
            out.append(Transmission(float(p[0]), float(p[1]), int(p[2]), int(p[3]),
                                    int(p[4]), int(p[5]), int(p[6]), bool(int(p[7]))))
        except (ValueError, IndexError) as exc:
            raise ParseError(path, lineno, str(exc)) from None
    return out
