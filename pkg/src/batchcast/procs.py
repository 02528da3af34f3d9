"""Process identities and client ids."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class ProcessKind(enum.IntEnum):
    SERVER = 0
    BROKER = 1
    CLIENT = 2


@dataclass(frozen=True, order=True)
class ProcessId:
    kind: ProcessKind
    ordinal: int

    def __repr__(self):
        return "%s%d" % ("SBC"[self.kind], self.ordinal)

    @property
    def label(self) -> str:
        return repr(self)


def server(n: int) -> ProcessId:
    return ProcessId(ProcessKind.SERVER, n)


def broker(n: int) -> ProcessId:
    return ProcessId(ProcessKind.BROKER, n)


def client(n: int) -> ProcessId:
    return ProcessId(ProcessKind.CLIENT, n)


def parse_label(label: str) -> ProcessId:
    kind = {"S": ProcessKind.SERVER, "B": ProcessKind.BROKER,
            "C": ProcessKind.CLIENT}[label[0]]
    return ProcessId(kind, int(label[1:]))


# A client id is (domain, index): the ordinal of the server whose log ranked
# the client, and the client's position in that log.  The total order is
# lexicographic, which fixes the canonical batch leaf order.
Id = tuple[int, int]
