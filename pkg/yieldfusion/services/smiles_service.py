"""
SMILES Tokenization, Parsing and Encoding Service
Lossless tokenizer over the reaction-LM token grammar, a light structural
parser feeding the descriptor channel, and the integer encoder feeding the
transformer channel.
"""

import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from .smiles_exceptions import (
    DanglingBondError,
    EmptyComponentListError,
    EmptyCorpusError,
    InvalidBracketAtomError,
    SequenceTooLongError,
    UnbalancedBranchError,
    UnclosedBracketError,
    UnknownCharacterError,
    UnmatchedRingClosureError,
)

PAD_TOKEN = "[PAD]"
CLS_TOKEN = "[CLS]"
UNK_TOKEN = "[UNK]"
SPECIAL_TOKENS = (PAD_TOKEN, CLS_TOKEN, UNK_TOKEN)
PAD_ID, CLS_ID, UNK_ID = 0, 1, 2

# Rendering of an empty condition cell inside the reaction string
NONE_COMPONENT = "[NONE]"

AROMATIC_ORDER = "aromatic"

_TOKEN_PATTERN = re.compile(
    r"(?P<atom>Cl|Br|[BCNOPSFI]|[bcnops])"
    r"|(?P<ring>%\d{2}|\d)"
    r"|(?P<bond>[-=#/\\:~])"
    r"|(?P<open>\()"
    r"|(?P<close>\))"
    r"|(?P<dot>\.)"
    r"|(?P<separator>>)"
)

_BRACKET_PATTERN = re.compile(
    r"^\[(?P<isotope>\d+)?"
    r"(?P<symbol>[A-Z][a-z]?|se|as|te|[bcnops])"
    r"(?P<chiral>@{1,2}(?:TH|AL|SP|TB|OH)?\d*)?"
    r"(?P<hydrogens>H\d*)?"
    r"(?P<charge>[+-]+\d*)?"
    r"(?::\d+)?\]$"
)

_BOND_ORDERS: dict[str, int | str | None] = {
    "-": 1,
    "=": 2,
    "#": 3,
    ":": AROMATIC_ORDER,
    "~": 1,
    # directional single bonds: stereo is ignored
    "/": None,
    "\\": None,
}


class TokenKind(StrEnum):
    ATOM = "Atom"
    BRACKET_ATOM = "BracketAtom"
    BOND = "Bond"
    BRANCH_OPEN = "BranchOpen"
    BRANCH_CLOSE = "BranchClose"
    RING_CLOSURE = "RingClosure"
    DOT = "Dot"
    SEPARATOR = "Separator"


_GROUP_KINDS = {
    "atom": TokenKind.ATOM,
    "ring": TokenKind.RING_CLOSURE,
    "bond": TokenKind.BOND,
    "open": TokenKind.BRANCH_OPEN,
    "close": TokenKind.BRANCH_CLOSE,
    "dot": TokenKind.DOT,
    "separator": TokenKind.SEPARATOR,
}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]
    source: str

    @property
    def texts(self) -> list[str]:
        return [token.text for token in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Atom:
    symbol: str
    aromatic: bool = False
    charge: int = 0
    hydrogens: int = 0


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: int | str


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...] = ()
    bonds: tuple[Bond, ...] = ()
    ring_count: int = 0


@dataclass(frozen=True)
class Vocab:
    """Token-text to id mapping; ids are dense and specials come first"""

    token_to_id: dict[str, int] = field(default_factory=dict)

    @property
    def tokens(self) -> list[str]:
        return sorted(self.token_to_id, key=self.token_to_id.__getitem__)

    def __len__(self) -> int:
        return len(self.token_to_id)

    def lookup(self, text: str) -> int:
        return self.token_to_id.get(text, UNK_ID)

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "Vocab":
        """Rebuild a vocabulary from its id-ordered token list"""
        if tuple(tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ValueError("Vocabulary must start with PAD, CLS, UNK")
        return cls({text: index for index, text in enumerate(tokens)})


@dataclass(frozen=True)
class EncodedSequence:
    ids: np.ndarray
    attention_mask: np.ndarray


def tokenize(smiles: str) -> TokenSequence:
    """
    Split a SMILES (or reaction SMILES) string into grammar tokens

    Bracket atoms are kept as one opaque token; Cl/Br are single tokens;
    ``%nn`` ring labels are single tokens. Concatenating the token texts
    reproduces the input exactly.

    Raises:
        UnclosedBracketError: '[' without a matching ']'
        UnknownCharacterError: character outside the grammar
    """
    tokens: list[Token] = []
    position = 0
    length = len(smiles)

    while position < length:
        if smiles[position] == "[":
            end = smiles.find("]", position + 1)
            if end == -1:
                raise UnclosedBracketError(smiles, position)
            tokens.append(
                Token(TokenKind.BRACKET_ATOM, smiles[position : end + 1])
            )
            position = end + 1
            continue

        match = _TOKEN_PATTERN.match(smiles, position)
        if match is None:
            raise UnknownCharacterError(smiles, position)
        tokens.append(Token(_GROUP_KINDS[match.lastgroup], match.group()))
        position = match.end()

    return TokenSequence(tokens=tuple(tokens), source=smiles)


def _parse_bracket_atom(text: str) -> Atom:
    match = _BRACKET_PATTERN.match(text)
    if match is None:
        raise InvalidBracketAtomError(f"Invalid bracket atom '{text}'")

    symbol = match.group("symbol")
    aromatic = symbol.islower()

    hydrogens = 0
    if match.group("hydrogens"):
        digits = match.group("hydrogens")[1:]
        hydrogens = int(digits) if digits else 1

    charge = 0
    charge_text = match.group("charge")
    if charge_text:
        sign = 1 if charge_text[0] == "+" else -1
        digits = charge_text.lstrip("+-")
        charge = sign * (int(digits) if digits else len(charge_text))

    return Atom(
        symbol=symbol.capitalize(),
        aromatic=aromatic,
        charge=charge,
        hydrogens=hydrogens,
    )


def parse(sequence: TokenSequence) -> Molecule:
    """
    Build the atom/bond graph of a tokenized SMILES string

    Adjacent atoms get a single bond (aromatic when both ends are aromatic)
    unless an explicit bond token precedes the second atom. Branches use a
    stack; ring-closure labels pair up and each pair counts one ring.
    No valence checking is done.
    """
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    branch_stack: list[int | None] = []
    open_rings: dict[str, tuple[int, int | str | None]] = {}
    ring_count = 0
    previous: int | None = None
    pending_bond: int | str | None = None
    has_pending_bond = False

    def default_order(a: int, b: int) -> int | str:
        if atoms[a].aromatic and atoms[b].aromatic:
            return AROMATIC_ORDER
        return 1

    for token in sequence.tokens:
        kind = token.kind

        if kind in (TokenKind.ATOM, TokenKind.BRACKET_ATOM):
            if kind == TokenKind.ATOM:
                atom = Atom(
                    symbol=token.text.capitalize(),
                    aromatic=token.text.islower(),
                )
            else:
                atom = _parse_bracket_atom(token.text)
            atoms.append(atom)
            current = len(atoms) - 1
            if previous is not None:
                order = pending_bond
                if order is None:
                    order = default_order(previous, current)
                bonds.append(Bond(previous, current, order))
            previous = current
            pending_bond, has_pending_bond = None, False

        elif kind == TokenKind.BOND:
            if previous is None or has_pending_bond:
                raise DanglingBondError(
                    f"Misplaced bond '{token.text}' in '{sequence.source}'"
                )
            pending_bond = _BOND_ORDERS[token.text]
            has_pending_bond = True

        elif kind == TokenKind.RING_CLOSURE:
            if previous is None:
                raise UnmatchedRingClosureError(
                    f"Ring label '{token.text}' before any atom in "
                    f"'{sequence.source}'"
                )
            label = token.text
            if label in open_rings:
                start, opening_bond = open_rings.pop(label)
                if start == previous:
                    raise UnmatchedRingClosureError(
                        f"Ring label '{label}' closes on its own atom in "
                        f"'{sequence.source}'"
                    )
                order = pending_bond if has_pending_bond else opening_bond
                if order is None:
                    order = default_order(start, previous)
                bonds.append(Bond(start, previous, order))
                ring_count += 1
            else:
                open_rings[label] = (
                    previous,
                    pending_bond if has_pending_bond else None,
                )
            pending_bond, has_pending_bond = None, False

        elif kind == TokenKind.BRANCH_OPEN:
            if has_pending_bond:
                raise DanglingBondError(
                    f"Bond before '(' in '{sequence.source}'"
                )
            if previous is None:
                raise UnbalancedBranchError(
                    f"Branch opened without an anchor atom in "
                    f"'{sequence.source}'"
                )
            branch_stack.append(previous)

        elif kind == TokenKind.BRANCH_CLOSE:
            if has_pending_bond:
                raise DanglingBondError(
                    f"Bond before ')' in '{sequence.source}'"
                )
            if not branch_stack:
                raise UnbalancedBranchError(
                    f"Unmatched ')' in '{sequence.source}'"
                )
            previous = branch_stack.pop()

        else:  # Dot / Separator start a new disconnected component
            if has_pending_bond:
                raise DanglingBondError(
                    f"Bond before '{token.text}' in '{sequence.source}'"
                )
            if branch_stack:
                raise UnbalancedBranchError(
                    f"Branch left open across '{token.text}' in "
                    f"'{sequence.source}'"
                )
            previous = None

    if has_pending_bond:
        raise DanglingBondError(f"Trailing bond in '{sequence.source}'")
    if branch_stack:
        raise UnbalancedBranchError(f"Unclosed '(' in '{sequence.source}'")
    if open_rings:
        labels = ", ".join(sorted(open_rings))
        raise UnmatchedRingClosureError(
            f"Ring labels never closed ({labels}) in '{sequence.source}'"
        )

    return Molecule(
        atoms=tuple(atoms), bonds=tuple(bonds), ring_count=ring_count
    )


def parse_smiles(smiles: str) -> Molecule:
    """Tokenize and parse in one call"""
    return parse(tokenize(smiles))


def assemble_reaction(components: Sequence[str]) -> str:
    """
    Join reaction components in schema order with '.'

    Empty components (control rows without an additive, etc.) are rendered
    as the NONE bracket token so every role keeps a position in the string.
    """
    if not components:
        raise EmptyComponentListError("Reaction has no components")
    rendered = []
    for smiles in components:
        if smiles == "":
            rendered.append(NONE_COMPONENT)
        else:
            tokenize(smiles)
            rendered.append(smiles)
    return ".".join(rendered)


def build_vocab(corpus: Iterable[TokenSequence]) -> Vocab:
    """Specials followed by every distinct token text in sorted order"""
    texts: set[str] = set()
    seen_any = False
    for sequence in corpus:
        seen_any = True
        texts.update(sequence.texts)
    if not seen_any:
        raise EmptyCorpusError("Cannot build a vocabulary from no sequences")

    ordered = list(SPECIAL_TOKENS) + sorted(texts - set(SPECIAL_TOKENS))
    return Vocab({text: index for index, text in enumerate(ordered)})


def encode(
    sequence: TokenSequence, vocab: Vocab, max_len: int
) -> EncodedSequence:
    """CLS + token ids (UNK for unseen) padded with PAD up to max_len"""
    if max_len < 2:
        raise ValueError(f"max_len must be at least 2, got {max_len}")
    length = len(sequence.tokens) + 1
    if length > max_len:
        raise SequenceTooLongError(len(sequence.tokens), max_len)

    ids = np.full(max_len, PAD_ID, dtype=np.int64)
    mask = np.zeros(max_len, dtype=np.int64)
    ids[0] = CLS_ID
    ids[1:length] = [vocab.lookup(text) for text in sequence.texts]
    mask[:length] = 1
    return EncodedSequence(ids=ids, attention_mask=mask)
