"""Exhaustive search over one-round labelings of small path schemes."""
from itertools import product

from lrdip.runtime import ProverMsg, Transcript, View


def accepting_labelings(proto, fields=None):
    """Count the assignments of one bit per node and field that every node accepts."""
    fields = fields or sorted(proto.schema[0])
    n = proto.net.n
    tr = Transcript(proto, 0)
    msg = ProverMsg(proto, 0, tr)
    tr.msgs.append(msg)
    count = 0
    for bits in product((0, 1), repeat=n * len(fields)):
        k = len(fields)
        msg.over = {v: dict(zip(fields, bits[v * k:(v + 1) * k])) for v in range(n)}
        if all(proto.decide(v, View(tr, v)) for v in range(n)):
            count += 1
    return count
