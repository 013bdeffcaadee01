"""One bundle holding every store the engine works on.

The CLI loads a state from disk, applies one operation, and writes the state
back; library users can keep a state in memory across many operations.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Dict

from .concepts import ConceptStore, Lexicon
from .discovery import AnomalyRule, Problem
from .sln import Network
from .space import Space


@dataclass
class EngineState:
    network: Network = field(default_factory=Network)
    space: Space = field(default_factory=Space)
    concepts: ConceptStore = field(default_factory=ConceptStore)
    lexicon: Lexicon = field(default_factory=Lexicon)
    problems: Dict[str, Problem] = field(default_factory=dict)
    anomaly_rules: Dict[str, AnomalyRule] = field(default_factory=dict)

    def copy(self) -> "EngineState":
        return copy.deepcopy(self)


def new_state() -> EngineState:
    return EngineState()
