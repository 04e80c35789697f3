"""SMILES parsing for the supported subset.

Supported: organic-subset atoms, bracket atoms with isotope / H count /
charge, bonds ``- = # :``, branches, ring closures (digits and ``%nn``),
lowercase aromatic atoms and ``.`` disconnections. Stereo markers
(``/ \\ @``) are accepted, dropped, and counted on the result.
"""

import re

from .elements import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    ELEMENTS,
    ORGANIC_SUBSET,
    allowed_valences,
)
from .molecule import (
    AromaticityError,
    Atom,
    Bond,
    BondOrder,
    Molecule,
    SmilesSyntaxError,
    UnbalancedParenthesis,
    UnclosedRing,
    UnknownElement,
    ValenceViolation,
)

_BOND_CHARS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}

_BRACKET_RE = re.compile(
    r"(?P<isotope>\d+)?"
    r"(?P<symbol>\*|[A-Z][a-z]?|se|as|te|[bcnops])"
    r"(?P<chiral>@+(?:TH[12]|AL[12]|SP[1-3]|TB\d{1,2}|OH\d{1,2})?)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+\d+|-\d+|\++|-+)?"
    r"(?::\d+)?$"
)


def implicit_hydrogens(element, aromatic, bond_valence, charge=0):
    """Implicit H count for an organic-subset atom given its bond valence sum.

    Aromatic atoms reserve one valence unit for the ring pi bond when the
    next allowed valence leaves room for it (benzene ``c`` gets one H,
    pyridine ``n`` none, ``Cn1cccc1`` keeps its lone pair).
    """
    allowed = allowed_valences(element, charge)
    for v in allowed:
        if v >= bond_valence:
            if aromatic and v >= bond_valence + 1:
                return v - bond_valence - 1
            return v - bond_valence
    raise ValenceViolation(
        f"{element} with bond valence {bond_valence} exceeds allowed {allowed}"
    )


class _Parser:
    def __init__(self, text, allow_dummy):
        self.text = text
        self.pos = 0
        self.allow_dummy = allow_dummy
        self.atoms = []  # dicts until finalization
        self.bonds = {}  # frozenset pair -> [a, b, order or None(implicit)]
        self.stereo = 0

    def error(self, cls, msg):
        raise cls(f"{msg} at position {self.pos} in {self.text!r}")

    def parse(self):
        text = self.text
        prev = None
        pending = None  # explicit bond order awaiting its second atom
        branch_stack = []
        rings = {}  # ring number -> (atom index, explicit order or None)
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == "(":
                if prev is None:
                    self.error(SmilesSyntaxError, "branch without a preceding atom")
                if pending is not None:
                    self.error(SmilesSyntaxError, "bond before branch")
                branch_stack.append(prev)
                self.pos += 1
            elif ch == ")":
                if not branch_stack:
                    self.error(UnbalancedParenthesis, "unmatched ')'")
                if pending is not None:
                    self.error(SmilesSyntaxError, "dangling bond")
                prev = branch_stack.pop()
                self.pos += 1
            elif ch in _BOND_CHARS:
                if pending is not None or prev is None:
                    self.error(SmilesSyntaxError, "misplaced bond symbol")
                if ch in "/\\":
                    self.stereo += 1
                pending = _BOND_CHARS[ch]
                self.pos += 1
            elif ch == ".":
                if pending is not None or branch_stack:
                    self.error(SmilesSyntaxError, "misplaced '.'")
                prev = None
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.error(SmilesSyntaxError, "ring closure without atom")
                if ch == "%":
                    digits = text[self.pos + 1 : self.pos + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        self.error(SmilesSyntaxError, "bad %nn ring closure")
                    num = int(digits)
                    self.pos += 3
                else:
                    num = int(ch)
                    self.pos += 1
                if num in rings:
                    other, order = rings.pop(num)
                    if order is not None and pending is not None and order != pending:
                        self.error(SmilesSyntaxError, "conflicting ring bond orders")
                    self.add_bond(other, prev, pending if pending is not None else order)
                else:
                    rings[num] = (prev, pending)
                pending = None
            else:
                idx = self.read_atom()
                if prev is not None:
                    self.add_bond(prev, idx, pending)
                elif pending is not None:
                    self.error(SmilesSyntaxError, "bond without preceding atom")
                pending = None
                prev = idx
        if branch_stack:
            self.error(UnbalancedParenthesis, "unclosed '('")
        if rings:
            raise UnclosedRing(f"unclosed ring bond(s) {sorted(rings)} in {text!r}")
        if pending is not None:
            self.error(SmilesSyntaxError, "trailing bond symbol")
        if not self.atoms:
            self.error(SmilesSyntaxError, "no atoms")
        return self.finalize()

    def add_bond(self, a, b, order):
        if a == b:
            self.error(SmilesSyntaxError, "ring closure onto the same atom")
        key = frozenset((a, b))
        if key in self.bonds:
            self.error(SmilesSyntaxError, "duplicate bond")
        self.bonds[key] = [a, b, order]

    def read_atom(self):
        text = self.text
        if text[self.pos] == "[":
            end = text.find("]", self.pos)
            if end < 0:
                self.error(SmilesSyntaxError, "unterminated bracket atom")
            body = text[self.pos + 1 : end]
            self.pos = end + 1
            return self.bracket_atom(body)
        two = text[self.pos : self.pos + 2]
        if two in ("Cl", "Br"):
            self.pos += 2
            symbol, aromatic = two, False
        else:
            ch = text[self.pos]
            self.pos += 1
            if ch in ORGANIC_SUBSET:
                symbol, aromatic = ch, False
            elif ch in AROMATIC_ORGANIC:
                symbol, aromatic = ch.upper(), True
            elif ch == "*" and self.allow_dummy:
                symbol, aromatic = "*", False
            elif ch.isalpha() or ch == "*":
                self.error(UnknownElement, f"unknown atom {ch!r}")
            else:
                self.error(SmilesSyntaxError, f"unexpected character {ch!r}")
        self.atoms.append(
            {"element": symbol, "aromatic": aromatic, "charge": 0, "h": None, "isotope": None}
        )
        return len(self.atoms) - 1

    def bracket_atom(self, body):
        m = _BRACKET_RE.match(body)
        if m is None:
            self.error(SmilesSyntaxError, f"malformed bracket atom [{body}]")
        symbol = m.group("symbol")
        aromatic = symbol in AROMATIC_BRACKET and symbol.islower()
        if aromatic:
            symbol = symbol.capitalize()
        if symbol == "*":
            if not self.allow_dummy:
                self.error(UnknownElement, "wildcard atoms are not supported")
        elif symbol not in ELEMENTS:
            self.error(UnknownElement, f"unknown element {symbol!r}")
        if m.group("chiral"):
            self.stereo += 1
        hcount = m.group("hcount")
        h = 0 if hcount is None else (int(hcount[1:]) if len(hcount) > 1 else 1)
        charge_txt = m.group("charge")
        charge = 0
        if charge_txt:
            sign = 1 if charge_txt[0] == "+" else -1
            rest = charge_txt[1:]
            if rest.isdigit():
                charge = sign * int(rest)
            else:
                charge = sign * len(charge_txt)
        isotope = int(m.group("isotope")) if m.group("isotope") else None
        self.atoms.append(
            {"element": symbol, "aromatic": aromatic, "charge": charge, "h": h, "isotope": isotope}
        )
        return len(self.atoms) - 1

    def finalize(self):
        atoms = self.atoms
        # implicit bonds: aromatic between two aromatic atoms, single otherwise
        provisional = []
        implicit_aromatic = set()
        for key, (a, b, order) in self.bonds.items():
            if order is None:
                if atoms[a]["aromatic"] and atoms[b]["aromatic"]:
                    order = BondOrder.AROMATIC
                    implicit_aromatic.add(key)
                else:
                    order = BondOrder.SINGLE
            provisional.append(Bond(a, b, order))
        skeleton = Molecule(
            tuple(Atom(d["element"]) for d in atoms), tuple(provisional)
        )
        ring_atoms = skeleton.ring_atoms()
        ring_bonds = skeleton.ring_bonds()
        bonds = []
        for bond in provisional:
            key = frozenset((bond.a, bond.b))
            if bond.order is BondOrder.AROMATIC and key not in ring_bonds:
                if key in implicit_aromatic:
                    bond = Bond(bond.a, bond.b, BondOrder.SINGLE)
                else:
                    raise AromaticityError(
                        f"aromatic bond {bond.a}-{bond.b} outside a ring in {self.text!r}"
                    )
            if bond.order is BondOrder.AROMATIC and not (
                atoms[bond.a]["aromatic"] and atoms[bond.b]["aromatic"]
            ):
                raise AromaticityError(
                    f"aromatic bond {bond.a}-{bond.b} joins a non-aromatic atom in {self.text!r}"
                )
            bonds.append(bond)
        for i, d in enumerate(atoms):
            if d["aromatic"] and i not in ring_atoms:
                raise AromaticityError(f"aromatic atom {i} outside any ring in {self.text!r}")
        bond_valence = [0] * len(atoms)
        for bond in bonds:
            bond_valence[bond.a] += bond.order.valence
            bond_valence[bond.b] += bond.order.valence
        final = []
        for i, d in enumerate(atoms):
            h = d["h"]
            if h is None:
                h = 0 if d["element"] == "*" else implicit_hydrogens(
                    d["element"], d["aromatic"], bond_valence[i]
                )
            final.append(
                Atom(d["element"], d["charge"], d["aromatic"], h, d["isotope"])
            )
        mol = Molecule(
            tuple(final), tuple(bonds), skeleton.rings, stereo_dropped=self.stereo
        )
        mol.check_valences()
        return mol


def parse_smiles(s, allow_dummy=False):
    """Parse a SMILES string into a :class:`Molecule`.

    Raises a :class:`SmilesError` subclass on failure. ``allow_dummy``
    enables the ``[*]`` attachment pseudo-atom used in fragment SMILES.
    """
    if not isinstance(s, str) or not s:
        raise SmilesSyntaxError("empty SMILES")
    return _Parser(s, allow_dummy).parse()


def is_valid(s):
    try:
        parse_smiles(s)
    except (SmilesSyntaxError, ValueError, TypeError):
        return False
    return True
