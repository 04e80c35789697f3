"""Element table: monoisotopic masses and allowed valences."""

# symbol -> monoisotopic mass of the most abundant isotope
MASSES = {
    "*": 0.0,
    "H": 1.007825,
    "Li": 7.016004,
    "B": 11.009305,
    "C": 12.000000,
    "N": 14.003074,
    "O": 15.994915,
    "F": 18.998403,
    "Na": 22.989770,
    "Mg": 23.985042,
    "Al": 26.981538,
    "Si": 27.976927,
    "P": 30.973762,
    "S": 31.972071,
    "Cl": 34.968853,
    "K": 38.963707,
    "Ca": 39.962591,
    "Mn": 54.938050,
    "Fe": 55.934942,
    "Co": 58.933200,
    "Ni": 57.935348,
    "Cu": 62.929601,
    "Zn": 63.929147,
    "Ge": 73.921178,
    "As": 74.921596,
    "Se": 79.916522,
    "Br": 78.918338,
    "Ag": 106.905095,
    "Sn": 119.902197,
    "Sb": 120.903818,
    "Te": 129.906223,
    "I": 126.904468,
    "Pt": 194.964774,
    "Hg": 201.970617,
}

ELEMENTS = frozenset(MASSES) - {"*"}

ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
AROMATIC_BRACKET = ("se", "as", "te", "b", "c", "n", "o", "p", "s")

# p-block rows used for the isoelectronic charge shift; None marks the noble gas slot.
_P_ROWS = (
    ("B", "C", "N", "O", "F", None),
    ("Al", "Si", "P", "S", "Cl", None),
    (None, "Ge", "As", "Se", "Br", None),
    (None, "Sn", "Sb", "Te", "I", None),
)
_P_COLUMN_VALENCE = ((3,), (4,), (3, 5), (2, 4, 6), (1,), (0,))
# row 2 oxygen is divalent only
_ROW2_OVERRIDE = {3: (2,)}

_METALS = {"Li": 1, "Na": 1, "K": 1, "Ag": 1, "Mg": 2, "Ca": 2, "Zn": 2}

_P_INDEX = {}
for _r, _row in enumerate(_P_ROWS):
    for _c, _sym in enumerate(_row):
        if _sym is not None:
            _P_INDEX[_sym] = (_r, _c)


def _column_valence(row, col):
    if row == 0 and col in _ROW2_OVERRIDE:
        return _ROW2_OVERRIDE[col]
    return _P_COLUMN_VALENCE[col]


def allowed_valences(element, charge=0):
    """Allowed total valences for ``element`` carrying ``charge``.

    Charged p-block atoms take the valences of their isoelectronic neighbour
    in the same row (N+ behaves like C, O- like F). Returns None when the
    element has no valence rule (transition metals, dummy atoms).
    """
    if element == "H":
        return (1,) if charge == 0 else (0,)
    if element in _METALS:
        return (max(_METALS[element] - abs(charge), 0),)
    if element not in _P_INDEX:
        return None
    row, col = _P_INDEX[element]
    col -= charge
    if col < 0 or col > 5:
        return None
    return _column_valence(row, col)
