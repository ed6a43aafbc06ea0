"""
Run-context logging utilities
Prefixes log messages with the fold/split being processed and keeps long
SMILES strings from flooding log lines.
"""

import logging
import re
from typing import Any

# Long runs of SMILES characters (reaction strings, bracket atoms included)
_SMILES_RUN = re.compile(r"[A-Za-z0-9@+\-\[\]\(\)=#%/\\.:~>]{48,}")


class SmilesAbbreviator:
    """Shortens long SMILES-like substrings in log messages"""

    HEAD = 20
    TAIL = 12

    @classmethod
    def abbreviate(cls, text: str) -> str:
        """Keep head and tail of a long SMILES, elide the middle"""
        if len(text) <= cls.HEAD + cls.TAIL + 3:
            return text
        return f"{text[: cls.HEAD]}...{text[-cls.TAIL :]}"

    @classmethod
    def abbreviate_message(cls, message: str) -> str:
        return _SMILES_RUN.sub(
            lambda match: cls.abbreviate(match.group(0)), message
        )


class RunContextAdapter(logging.LoggerAdapter):
    """Logger adapter adding '[fold 3/10]'-style context to messages"""

    def process(self, msg, kwargs):
        if isinstance(msg, str):
            msg = SmilesAbbreviator.abbreviate_message(msg)
            context = self.extra.get("context") if self.extra else None
            if context:
                msg = f"[{context}] {msg}"
        return msg, kwargs

    def with_context(self, context: str) -> "RunContextAdapter":
        """Child adapter for one unit of work (fold, split, candidate)"""
        return RunContextAdapter(self.logger, {"context": context})


def get_run_logger(name: str, context: str | None = None) -> RunContextAdapter:
    """Get a logger that prefixes run context and abbreviates SMILES"""
    extra: dict[str, Any] = {"context": context} if context else {}
    return RunContextAdapter(logging.getLogger(name), extra)


def abbreviate_smiles(smiles: str) -> str:
    """Convenience function to shorten one SMILES for display"""
    return SmilesAbbreviator.abbreviate(smiles)
